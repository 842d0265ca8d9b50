// Command line shell: experiment configs in, deterministic result bundles out.
//
// Exit codes: 0 = success, 2 = configuration or contract error (bad flags,
// schema violations, out-of-range parameters), 3 = a numerical check failed.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "mbdqc/io.hpp"
#include "mbdqc/rng.hpp"

namespace {

using namespace mbdqc;
using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitConfigError = 2;
constexpr int kExitCheckFailed = 3;

std::string default_out_dir() {
    const char* env = std::getenv("MBDQC_OUT_DIR");
    return env && *env ? env : "mbdqc-out";
}

struct CommonOpts {
    std::string config_path;
    std::string out_dir = default_out_dir();
    std::uint64_t seed = 0;
    int trials = 0;
    std::string backend;
    std::string delta_convention;

    CLI::Option* seed_opt = nullptr;
    CLI::Option* trials_opt = nullptr;
};

void add_common(CLI::App* sub, CommonOpts& o, bool config_required) {
    auto* c = sub->add_option("--config", o.config_path, "experiment config (JSON)");
    if (config_required) c->required();
    o.seed_opt = sub->add_option("--seed", o.seed, "master seed override");
    o.trials_opt = sub->add_option("--trials", o.trials, "trial count override");
    sub->add_option("--out", o.out_dir, "output directory (default $MBDQC_OUT_DIR)");
    sub->add_option("--backend", o.backend, "register backend")
        ->check(CLI::IsMember({"auto", "stab", "dense"}));
    sub->add_option("--delta-convention", o.delta_convention, "bound margin convention")
        ->check(CLI::IsMember({"range", "item9"}));
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read config file: " + path);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

ExperimentConfig load_config(const CommonOpts& o) {
    ExperimentConfig cfg = parse_config(read_file(o.config_path));
    if (o.seed_opt && o.seed_opt->count()) {
        cfg.master_seed = o.seed;
        cfg.params.seed = o.seed;
    }
    if (o.trials_opt && o.trials_opt->count()) {
        if (o.trials < 1) throw std::invalid_argument("--trials must be positive");
        cfg.trials = o.trials;
    }
    if (o.backend == "auto")
        cfg.backend = std::nullopt;
    else if (o.backend == "stab")
        cfg.backend = Backend::Stabilizer;
    else if (o.backend == "dense")
        cfg.backend = Backend::Dense;
    if (o.delta_convention == "range")
        cfg.bound_params.delta_convention = DeltaConvention::Range;
    else if (o.delta_convention == "item9")
        cfg.bound_params.delta_convention = DeltaConvention::Item9;
    return cfg;
}

TrapFamily family_of(const ExperimentConfig& cfg) {
    if (cfg.family_kind == FamilyKind::Explicit) {
        TrapFamily fam;
        fam.structure = cfg.structure;
        for (const auto& q_set : cfg.explicit_q_sets)
            fam.traps.push_back(design_trap(cfg.structure, q_set));
        fam.validate();
        return fam;
    }
    return singleton_family(cfg.structure);
}

std::vector<TestRound> tests_of(const ExperimentConfig& cfg, const TrapFamily& fam) {
    if (cfg.family_kind == FamilyKind::Merged) {
        const MergeStrategy strategy = fam.traps.size() <= 14
                                           ? MergeStrategy::ExactSmall
                                           : MergeStrategy::GreedyLargestFirst;
        return test_rounds_of(fam, merge_traps(fam, strategy));
    }
    return test_rounds_of(fam);
}

const char* kCsvHeader = "trial,verdict,decision_bit,trap_failures,wrong,attacked_rounds\n";

json rate_json(const RateWithError& r) {
    return json{{"value", r.value}, {"stderr", r.stderr_}};
}

int cmd_simulate(const ExperimentConfig& cfg, const std::string& out_dir) {
    const MbdqcClient client = cfg.client();
    MbdqcOptions opts;
    opts.backend = cfg.backend;

    std::map<std::string, int> counts;
    std::ostringstream csv;
    csv << "trial,output\n";
    std::string digest_text;
    for (int trial = 0; trial < cfg.trials; ++trial) {
        std::mt19937_64 rng = substream(cfg.master_seed, "simulate-trial",
                                        static_cast<uint64_t>(trial));
        opts.record_transcript = trial == 0;
        const MbdqcResult res = run_mbdqc(client, cfg.behavior, rng, opts);
        std::string bits;
        for (uint8_t b : res.output) bits += static_cast<char>('0' + b);
        ++counts[bits];
        csv << trial << "," << bits << "\n";
        if (trial == 0)
            digest_text = "transcript fnv1a64 = " +
                          std::to_string(digest64(res.transcript.dump())) + "\n";
    }

    json summary;
    summary["schema"] = "mbdqc-results/1";
    summary["trials"] = cfg.trials;
    for (const auto& [bits, count] : counts)
        summary["output_rates"][bits] = rate_json(rate_of(count, cfg.trials));

    ResultBundle bundle;
    bundle.schema_version = "mbdqc-results/1";
    bundle.config_echo = dump_config(cfg);
    bundle.stats_csv = csv.str();
    bundle.summary_json = summary.dump(2) + "\n";
    bundle.transcript_digest = digest_text;
    bundle.write_to(out_dir);
    std::cout << "simulate: " << cfg.trials << " session(s), " << counts.size()
              << " distinct output(s) -> " << out_dir << "\n";
    return kExitOk;
}

int cmd_verify(const ExperimentConfig& cfg, const std::string& out_dir) {
    const TrapFamily fam = family_of(cfg);

    VerifierInstance instance;
    instance.structure = cfg.structure;
    instance.rho_labels = cfg.rho_labels;
    instance.tests = tests_of(cfg, fam);
    instance.z_star = cfg.z_star;
    instance.synthetic = cfg.synthetic_c >= 0;
    instance.c = std::max(cfg.synthetic_c, 0.0);
    instance.validate();

    MonteCarloConfig mc;
    mc.instance = instance;
    mc.params = cfg.params;
    mc.params.seed = cfg.master_seed;
    mc.behavior = cfg.behavior;
    mc.master_seed = cfg.master_seed;
    mc.trials = cfg.trials;

    std::vector<std::pair<std::string, double>> bound_rows;
    const double c_used = instance.synthetic ? instance.c : cfg.bound_params.c;
    bound_rows.emplace_back("eps_cor", eps_cor(cfg.params.d, c_used));
    if (cfg.behavior.kind == ServerBehavior::Kind::NoisyHonest && cfg.params.s >= 1 &&
        cfg.behavior.noise_kind != NoiseKind::PerQubitDepolarizing) {
        const RobustnessBounds rb = eps_rob(cfg.params.d, cfg.params.s, cfg.params.w,
                                            c_used, cfg.behavior.p_err);
        bound_rows.emplace_back("eps_rob_reject", rb.reject_bound);
        bound_rows.emplace_back("eps_rob_wrong", rb.wrong_bound);
    }

    std::optional<SecurityBreakdown> breakdown;
    try {
        BoundParams bp = cfg.bound_params;
        bp.c = c_used;
        breakdown = security_error(bp);
        bound_rows.emplace_back("p_d", breakdown->p_d);
        bound_rows.emplace_back("eps_phi", breakdown->eps_phi);
        bound_rows.emplace_back("nu_phi", breakdown->nu_phi);
    } catch (const std::invalid_argument&) {
        // Bound parameters outside their domain (e.g. s = 0): simulate anyway.
    }

    const bool sweeping = !cfg.sweep_m_grid.empty() && cfg.sweep_pauli.has_value();
    RunStats stats;
    std::vector<SweepRow> sweep;
    if (sweeping) {
        if (!breakdown)
            throw std::invalid_argument(
                "sweep requires valid bound parameters for the analytic envelope");
        std::vector<RunStats> per_m;
        sweep = adversary_sweep(mc, cfg.sweep_m_grid, *cfg.sweep_pauli, *breakdown, &per_m);
        for (const RunStats& one : per_m)
            for (const TrialRow& row : one.rows) stats.add(row);
    } else {
        stats = monte_carlo(mc);
    }

    ResultBundle bundle;
    bundle.schema_version = "mbdqc-results/1";
    bundle.config_echo = dump_config(cfg);
    bundle.stats_csv = stats_csv(stats);
    bundle.summary_json = summary_json_of(stats, bound_rows, sweep);
    bundle.trap_table_text = trap_table(fam);
    bundle.write_to(out_dir);

    const RateWithError acc = rate_of(stats.accept_count, stats.trials);
    std::cout << "verify: " << stats.trials << " trial(s), accept rate " << acc.value
              << " (stderr " << acc.stderr_ << ") -> " << out_dir << "\n";
    return kExitOk;
}

int cmd_traps(const ExperimentConfig& cfg, const std::string& out_dir) {
    const TrapFamily fam = family_of(cfg);
    const int k = cfg.structure.n + cfg.structure.t;

    const CoverageMode mode = k <= 10 ? CoverageMode::Exhaustive : CoverageMode::SingletonProof;
    const CoverageReport coverage = covers_all_harmful(fam, mode);
    const CompatibilityGraph graph = incompatibility_graph(fam);
    const MergePlan greedy = merge_traps(fam, MergeStrategy::GreedyLargestFirst);
    std::optional<MergePlan> exact;
    if (fam.traps.size() <= 14) exact = merge_traps(fam, MergeStrategy::ExactSmall);

    std::ostringstream text;
    text << trap_table(fam) << "\n";
    text << "incompatibility edges: " << graph.edges.size() << "\n";
    text << "bipartite: " << (is_bipartite(graph) ? "yes" : "no") << "\n";
    text << "greedy merge groups: " << greedy.groups.size() << "\n";
    if (exact) text << "exact merge groups: " << exact->groups.size() << "\n";
    text << "covers all harmful deviations: " << (coverage.covered ? "yes" : "no") << "\n";
    if (coverage.witness) text << "undetected witness: " << coverage.witness->str() << "\n";

    json summary;
    summary["schema"] = "mbdqc-results/1";
    summary["traps"] = fam.traps.size();
    summary["incompatible_pairs"] = graph.edges.size();
    summary["bipartite"] = is_bipartite(graph);
    summary["greedy_groups"] = greedy.groups.size();
    if (exact) summary["exact_groups"] = exact->groups.size();
    summary["covered"] = coverage.covered;

    ResultBundle bundle;
    bundle.schema_version = "mbdqc-results/1";
    bundle.config_echo = dump_config(cfg);
    bundle.stats_csv = kCsvHeader;
    bundle.summary_json = summary.dump(2) + "\n";
    bundle.trap_table_text = text.str();
    bundle.write_to(out_dir);

    std::cout << "traps: " << fam.traps.size() << " trap(s), greedy "
              << greedy.groups.size() << " group(s)"
              << (exact ? ", exact " + std::to_string(exact->groups.size()) + " group(s)"
                        : std::string())
              << ", coverage " << (coverage.covered ? "yes" : "NO") << " -> " << out_dir
              << "\n";
    return coverage.covered ? kExitOk : kExitCheckFailed;
}

int cmd_bounds(const ExperimentConfig& cfg, const std::string& out_dir) {
    const SecurityBreakdown b = security_error(cfg.bound_params);

    json summary;
    summary["schema"] = "mbdqc-results/1";
    summary["alpha"] = b.alpha;
    summary["delta"] = b.delta;
    summary["m0_over_n"] = b.m0_over_n;
    summary["phi"] = b.phi;
    summary["chi_eps"] = b.chi_eps;
    summary["chi_nu"] = b.chi_nu;
    summary["eps_phi"] = b.eps_phi;
    summary["nu_phi"] = b.nu_phi;
    summary["grid_p_d"] = b.grid_p_d;
    summary["closed_form_p_d"] = b.closed_form_p_d;
    summary["p_d"] = b.p_d;
    summary["minus_log2_p_d"] = b.minus_log2_p_d;
    summary["vacuous"] = b.vacuous;
    summary["clamp_log"] = b.clamp_log;

    ResultBundle bundle;
    bundle.schema_version = "mbdqc-results/1";
    bundle.config_echo = dump_config(cfg);
    bundle.stats_csv = kCsvHeader;
    bundle.summary_json = summary.dump(2) + "\n";
    bundle.trap_table_text = breakdown_table(b);
    bundle.write_to(out_dir);

    std::cout << breakdown_table(b);
    std::cout << "bounds: p_d = " << b.p_d << " (-log2 = " << b.minus_log2_p_d << ") -> "
              << out_dir << "\n";
    return kExitOk;
}

int cmd_twirl_check(int k, std::uint64_t seed, const std::string& out_dir) {
    if (k < 1 || k > 3) throw std::invalid_argument("twirl check supports k in 1..3");

    // A full-rank test state: a random mixture of a few random pure states.
    std::mt19937_64 rng = substream(seed, "twirl-check");
    std::normal_distribution<double> gauss(0.0, 1.0);
    const std::size_t dim = std::size_t{1} << k;
    DensityMatrix rho(k);
    double total = 0;
    for (int j = 0; j < 4; ++j) {
        StateVector psi(k);
        for (std::size_t idx = 0; idx < dim; ++idx)
            psi.amp[idx] = std::complex<double>(gauss(rng), gauss(rng));
        const double norm = std::sqrt(psi.norm_sq());
        for (auto& a : psi.amp) a /= norm;
        const double weight = 1 + rand_double(rng);
        rho.m += weight * density_of(psi).m;
        total += weight;
    }
    rho.m /= total;
    rho.validate();

    const std::vector<PauliString> paulis = enumerate_paulis(k);
    const double scale = std::pow(4.0, k);
    double max_off = 0, max_diag = 0;
    for (const PauliString& e1 : paulis) {
        const Eigen::MatrixXcd m1 = pauli_matrix(e1);
        for (const PauliString& e2 : paulis) {
            const DensityMatrix twirl = pauli_twirl_check(e1, e2, rho);
            if (e1.x == e2.x && e1.z == e2.z) {
                const Eigen::MatrixXcd expected = scale * m1 * rho.m * m1.adjoint();
                max_diag = std::max(max_diag, (twirl.m - expected).operatorNorm());
            } else {
                max_off = std::max(max_off, twirl.m.operatorNorm());
            }
        }
    }
    const bool pass = max_off < 1e-9 && max_diag < 1e-9;

    json summary;
    summary["schema"] = "mbdqc-results/1";
    summary["k"] = k;
    summary["seed"] = seed;
    summary["max_offdiagonal_norm"] = max_off;
    summary["max_diagonal_error"] = max_diag;
    summary["pass"] = pass;

    ResultBundle bundle;
    bundle.schema_version = "mbdqc-results/1";
    bundle.config_echo = json{{"check", "twirl"}, {"k", k}, {"seed", seed}}.dump(2) + "\n";
    bundle.stats_csv = kCsvHeader;
    bundle.summary_json = summary.dump(2) + "\n";
    bundle.write_to(out_dir);

    std::cout << "twirl-check: k=" << k << " max off-diagonal " << max_off
              << ", max diagonal error " << max_diag << " -> "
              << (pass ? "pass" : "FAIL") << "\n";
    return pass ? kExitOk : kExitCheckFailed;
}

int cmd_blindness_check(const ExperimentConfig& cfg, const std::string& out_dir) {
    const CliffordStructure& st = cfg.structure;
    const int n = st.n, t = st.t;
    if (n + t > 3)
        throw std::invalid_argument(
            "blindness check enumerates all secrets exactly; limited to n+t <= 3");

    // Deterministic input variants sharing the structure. The served view must
    // be independent of all of them, including computation vs magic-free.
    const SinglePauliLabel cycle[6] = {{Axis::X, +1}, {Axis::Y, +1}, {Axis::Z, +1},
                                       {Axis::X, -1}, {Axis::Y, -1}, {Axis::Z, -1}};
    const auto stab_labels = [&](int offset) {
        std::vector<StateLabel> labels;
        for (int q = 0; q < n; ++q) labels.push_back(StateLabel::of(cycle[(q + offset) % 6]));
        return labels;
    };
    const auto injections = [&](int offset) {
        std::vector<StateLabel> a;
        for (int i = 0; i < t; ++i) a.push_back(StateLabel::of(cycle[(i + offset) % 6]));
        return a;
    };

    std::vector<MbdqcClient> variants;
    {
        MbdqcClient v;
        v.structure = st;
        v.rho_labels = cfg.rho_labels;
        v.a_choices.assign(t, StateLabel::magic());
        variants.push_back(v);  // computation mode on the config inputs
        v.rho_labels = stab_labels(2);
        variants.push_back(v);  // computation mode, |0...> style inputs
        for (int offset = 0; offset < 3; ++offset) {
            MbdqcClient w;
            w.structure = st;
            w.rho_labels = stab_labels(offset);
            w.a_choices = injections(offset + 3);
            variants.push_back(w);  // magic-free label cycles
        }
        if (!cfg.computation && !cfg.a_choices.empty()) {
            MbdqcClient w;
            w.structure = st;
            w.rho_labels = cfg.rho_labels;
            w.a_choices = cfg.a_choices;
            variants.push_back(w);
        }
    }
    for (const MbdqcClient& v : variants) v.validate();

    const int steps = server_view_step_count(t);
    double max_td = 0;
    std::vector<double> per_step(steps, 0.0);
    for (int step = 0; step < steps; ++step) {
        std::vector<DensityMatrix> views;
        for (const MbdqcClient& v : variants) views.push_back(server_view(v, step));
        for (std::size_t a = 0; a < views.size(); ++a)
            for (std::size_t b = a + 1; b < views.size(); ++b)
                per_step[step] = std::max(per_step[step],
                                          trace_distance(views[a], views[b]));
        max_td = std::max(max_td, per_step[step]);
    }
    const bool pass = max_td < 1e-9;

    json summary;
    summary["schema"] = "mbdqc-results/1";
    summary["variants"] = variants.size();
    summary["steps"] = steps;
    summary["per_step_max_trace_distance"] = per_step;
    summary["max_trace_distance"] = max_td;
    summary["pass"] = pass;

    ResultBundle bundle;
    bundle.schema_version = "mbdqc-results/1";
    bundle.config_echo = dump_config(cfg);
    bundle.stats_csv = kCsvHeader;
    bundle.summary_json = summary.dump(2) + "\n";
    bundle.write_to(out_dir);

    std::cout << "blindness-check: " << variants.size() << " input variants, " << steps
              << " steps, max trace distance " << max_td << " -> "
              << (pass ? "pass" : "FAIL") << "\n";
    return pass ? kExitOk : kExitCheckFailed;
}

int cmd_reduction_check(const ExperimentConfig& cfg, const std::string& out_dir) {
    const MbdqcClient client = cfg.client();
    const int trials = cfg.trials;

    double max_distance = 0;
    bool all_pass = true;
    std::ostringstream csv;
    csv << "trial,w_priv,distance,pass\n";
    for (int trial = 0; trial < trials; ++trial) {
        const int w_priv = trial % 2;
        std::mt19937_64 rng = substream(cfg.master_seed, "reduction-check",
                                        static_cast<uint64_t>(trial));
        const int dim = 1 << (client.n() + w_priv);
        const Eigen::MatrixXcd u = random_unitary(dim, rng);
        const ReductionReport report = pauli_reduction_check(client, u, w_priv);
        max_distance = std::max(max_distance, report.distance);
        all_pass = all_pass && report.pass;
        csv << trial << "," << w_priv << "," << report.distance << ","
            << (report.pass ? 1 : 0) << "\n";
    }

    json summary;
    summary["schema"] = "mbdqc-results/1";
    summary["trials"] = trials;
    summary["max_total_variation"] = max_distance;
    summary["pass"] = all_pass;

    ResultBundle bundle;
    bundle.schema_version = "mbdqc-results/1";
    bundle.config_echo = dump_config(cfg);
    bundle.stats_csv = csv.str();
    bundle.summary_json = summary.dump(2) + "\n";
    bundle.write_to(out_dir);

    std::cout << "reduction-check: " << trials << " random unitaries, max distance "
              << max_distance << " -> " << (all_pass ? "pass" : "FAIL") << "\n";
    return all_pass ? kExitOk : kExitCheckFailed;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"magic-blind delegated quantum computation toolkit"};
    app.require_subcommand(1);

    CommonOpts sim_o, ver_o, trap_o, bnd_o, twl_o, bld_o, red_o;
    int twirl_k = 2;

    CLI::App* sim = app.add_subcommand("simulate", "sample protocol sessions");
    add_common(sim, sim_o, true);
    CLI::App* ver = app.add_subcommand("verify", "run the verified-delegation loop");
    add_common(ver, ver_o, true);
    CLI::App* trp = app.add_subcommand("traps", "design, merge and audit trap families");
    add_common(trp, trap_o, true);
    CLI::App* bnd = app.add_subcommand("bounds", "evaluate the analytic security error");
    add_common(bnd, bnd_o, true);
    CLI::App* twl = app.add_subcommand("twirl-check", "exhaustive key-averaging identity");
    add_common(twl, twl_o, false);
    twl->add_option("--k", twirl_k, "qubit count (1..3)")->check(CLI::Range(1, 3));
    CLI::App* bld = app.add_subcommand("blindness-check",
                                       "exact server-view comparison across inputs");
    add_common(bld, bld_o, true);
    CLI::App* red = app.add_subcommand("reduction-check",
                                       "unitary deviations vs Pauli mixture prediction");
    add_common(red, red_o, true);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitConfigError;
    }

    try {
        if (sim->parsed()) return cmd_simulate(load_config(sim_o), sim_o.out_dir);
        if (ver->parsed()) return cmd_verify(load_config(ver_o), ver_o.out_dir);
        if (trp->parsed()) return cmd_traps(load_config(trap_o), trap_o.out_dir);
        if (bnd->parsed()) return cmd_bounds(load_config(bnd_o), bnd_o.out_dir);
        if (twl->parsed()) {
            const std::uint64_t seed =
                twl_o.seed_opt && twl_o.seed_opt->count() ? twl_o.seed : 0;
            return cmd_twirl_check(twirl_k, seed, twl_o.out_dir);
        }
        if (bld->parsed()) return cmd_blindness_check(load_config(bld_o), bld_o.out_dir);
        if (red->parsed()) {
            ExperimentConfig cfg = load_config(red_o);
            if (!red_o.trials_opt->count() && !cfg.trials) cfg.trials = 20;
            return cmd_reduction_check(cfg, red_o.out_dir);
        }
    } catch (const ConfigError& e) {
        std::cerr << e.what() << "\n";
        return kExitConfigError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfigError;
    }
    return kExitConfigError;  // unreachable: require_subcommand(1)
}
