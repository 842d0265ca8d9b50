#include "mbdqc/verifier.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "mbdqc/rng.hpp"

namespace mbdqc {

void VerificationParams::validate() const {
    if (d < 1) throw std::invalid_argument("need at least one computation round");
    if (s < 0) throw std::invalid_argument("test round count cannot be negative");
    if (w < 0 || w > s) throw std::invalid_argument("tolerance w must satisfy 0 <= w <= s");
}

std::vector<TestRound> test_rounds_of(const TrapFamily& family) {
    std::vector<TestRound> rounds;
    rounds.reserve(family.traps.size());
    for (const Trap& trap : family.traps)
        rounds.push_back({trap.input_labels, {trap.q_set}});
    return rounds;
}

std::vector<TestRound> test_rounds_of(const TrapFamily& family, const MergePlan& plan) {
    std::vector<TestRound> rounds;
    rounds.reserve(plan.groups.size());
    for (const MergedGroup& group : plan.groups) {
        TestRound round;
        round.input_labels = group.input_labels;
        for (int m : group.trap_indices)
            round.parity_sets.push_back(family.traps.at(m).q_set);
        rounds.push_back(std::move(round));
    }
    return rounds;
}

bool RoundPlan::is_test_slot(int slot) const { return logical_of_slot(slot) >= d; }

int RoundPlan::logical_of_slot(int slot) const {
    for (int logical = 0; logical < static_cast<int>(sigma.size()); ++logical)
        if (sigma[logical] == slot) return logical;
    throw std::invalid_argument("slot outside the plan");
}

void RoundPlan::validate() const {
    const int n = d + s;
    if (static_cast<int>(sigma.size()) != n)
        throw std::runtime_error("permutation size differs from d+s");
    std::vector<char> seen(n, 0);
    for (int v : sigma) {
        if (v < 0 || v >= n || seen[v]) throw std::runtime_error("sigma is not a permutation");
        seen[v] = 1;
    }
    if (static_cast<int>(trap_choice.size()) != s)
        throw std::runtime_error("need one trap choice per test round");
}

RoundPlan plan_rounds(const VerificationParams& params, int test_kind_count,
                      std::mt19937_64& rng) {
    params.validate();
    if (params.s > 0 && test_kind_count < 1)
        throw std::invalid_argument("cannot plan test rounds from an empty trap family");
    RoundPlan plan;
    plan.d = params.d;
    plan.s = params.s;
    const int n = params.big_n();
    plan.sigma.resize(n);
    std::iota(plan.sigma.begin(), plan.sigma.end(), 0);
    for (int i = n - 1; i > 0; --i) {
        const auto j = static_cast<int>(rand_index(rng, static_cast<uint64_t>(i) + 1));
        std::swap(plan.sigma[i], plan.sigma[j]);
    }
    plan.trap_choice.resize(params.s);
    for (int i = 0; i < params.s; ++i)
        plan.trap_choice[i] =
            static_cast<int>(rand_index(rng, static_cast<uint64_t>(test_kind_count)));
    return plan;
}

RoundPlan plan_rounds(const VerificationParams& params, const TrapFamily& family,
                      std::mt19937_64& rng) {
    return plan_rounds(params, static_cast<int>(family.traps.size()), rng);
}

void RunStats::add(const TrialRow& row) {
    ++trials;
    if (row.accepted) ++accept_count;
    if (row.accepted && row.wrong) ++accept_and_wrong_count;
    if (row.trap_failures >= static_cast<int>(trap_failure_histogram.size()))
        trap_failure_histogram.resize(row.trap_failures + 1, 0);
    ++trap_failure_histogram[row.trap_failures];
    rows.push_back(row);
}

void RunStats::validate() const {
    if (accept_and_wrong_count > accept_count || accept_count > trials)
        throw std::runtime_error("inconsistent acceptance counters");
}

void VerifierInstance::validate() const {
    structure.validate();
    if (static_cast<int>(rho_labels.size()) != structure.n)
        throw std::invalid_argument("need one input label per data wire");
    if (synthetic) {
        if (!z_star) throw std::invalid_argument("synthetic computation needs z_star");
        if (c < 0 || c >= 1)
            throw std::invalid_argument("synthetic bias outside [0,1)");
    }
    const int k = structure.total_wires();
    for (const TestRound& t : tests) {
        if (static_cast<int>(t.input_labels.size()) != k)
            throw std::invalid_argument("test input width differs from the structure");
        if (t.parity_sets.empty())
            throw std::invalid_argument("test round without parity sets");
        for (const auto& q_set : t.parity_sets)
            for (int idx : q_set)
                if (idx < 1 || idx > k)
                    throw std::invalid_argument("parity index outside 1..n+t");
    }
}

namespace {

std::pair<Verdict, TrialRow> run_one_trial(
    const VerifierInstance& instance, const VerificationParams& params,
    const std::function<const ServerBehavior&(int)>& behavior_of_slot,
    std::mt19937_64& rng) {
    params.validate();
    instance.validate();
    if (params.s > 0 && instance.tests.empty())
        throw std::invalid_argument("test rounds requested but no tests configured");

    const int n = instance.structure.n;
    const int t = instance.structure.t;

    MbdqcClient comp_client;
    comp_client.structure = instance.structure;
    comp_client.rho_labels = instance.rho_labels;
    comp_client.a_choices.assign(t, StateLabel::magic());

    std::vector<MbdqcClient> test_clients;
    test_clients.reserve(instance.tests.size());
    for (const TestRound& test : instance.tests) {
        MbdqcClient cl;
        cl.structure = instance.structure;
        for (int q = 0; q < n; ++q) cl.rho_labels.push_back(StateLabel::of(test.input_labels[q]));
        for (int i = 0; i < t; ++i)
            cl.a_choices.push_back(StateLabel::of(test.input_labels[n + i]));
        test_clients.push_back(std::move(cl));
    }

    RoundPlan plan = plan_rounds(params, static_cast<int>(instance.tests.size()), rng);

    MbdqcOptions opts;
    opts.record_transcript = false;

    TrialRow row;
    int ones = 0;
    for (int slot = 0; slot < params.big_n(); ++slot) {
        const int logical = plan.logical_of_slot(slot);
        const ServerBehavior& behavior = behavior_of_slot(slot);
        if (logical < params.d) {
            int y;
            if (instance.synthetic) {
                y = *instance.z_star ^ (rand_double(rng) < instance.c ? 1 : 0);
            } else {
                MbdqcResult r = run_mbdqc(comp_client, behavior, rng, opts);
                y = r.output.at(0);
            }
            ones += y;
            continue;
        }
        const int choice = plan.trap_choice[logical - params.d];
        const TestRound& test = instance.tests[choice];
        MbdqcResult r = run_mbdqc(test_clients[choice], behavior, rng, opts);
        bool failed = false;
        for (const auto& q_set : test.parity_sets) {
            int parity = 0;
            for (int idx : q_set) parity ^= r.output.at(idx - 1);
            if (parity) failed = true;
        }
        if (failed) {
            ++row.trap_failures;
            row.failed_slots.push_back(slot);
        }
    }

    Verdict verdict;
    if (row.trap_failures >= params.w) {
        verdict = Verdict::reject();
    } else {
        verdict = Verdict::accept(ones > params.d / 2 ? 1 : 0);
    }
    row.accepted = verdict.accepted;
    row.z = verdict.z;
    row.wrong = verdict.accepted && instance.z_star && verdict.z != *instance.z_star;
    return {verdict, row};
}

}  // namespace

std::pair<Verdict, TrialRow> run_verified_dqc(const VerifierInstance& instance,
                                              const VerificationParams& params,
                                              const ServerBehavior& behavior,
                                              std::mt19937_64& rng) {
    auto row = run_one_trial(
        instance, params, [&](int) -> const ServerBehavior& { return behavior; }, rng);
    row.second.attacked_rounds =
        behavior.kind == ServerBehavior::Kind::Honest ||
                behavior.kind == ServerBehavior::Kind::NoisyHonest
            ? 0
            : params.big_n();
    return row;
}

RunStats monte_carlo(const MonteCarloConfig& config) {
    if (config.trials < 1) throw std::invalid_argument("need at least one trial");
    RunStats stats;
    const ServerBehavior honest = ServerBehavior::honest();
    for (int trial = 0; trial < config.trials; ++trial) {
        auto rng = substream(config.master_seed, "verify-trial", trial, 0);
        std::pair<Verdict, TrialRow> outcome;
        if (config.attacked_rounds >= 0) {
            const int big_n = config.params.big_n();
            const int m = std::min(config.attacked_rounds, big_n);
            // The adversary commits to slots before anything else is drawn
            // and never sees the round permutation.
            auto attack_rng = substream(config.master_seed, "attack-slots", trial, 0);
            std::vector<int> slots(big_n);
            std::iota(slots.begin(), slots.end(), 0);
            for (int i = 0; i < m; ++i) {
                const auto j = i + static_cast<int>(rand_index(
                                       attack_rng, static_cast<uint64_t>(big_n - i)));
                std::swap(slots[i], slots[j]);
            }
            std::vector<char> attacked(big_n, 0);
            for (int i = 0; i < m; ++i) attacked[slots[i]] = 1;
            const ServerBehavior deviated = ServerBehavior::single_deviation(
                config.attack_e, config.instance.structure.n,
                config.instance.structure.t);
            outcome = run_one_trial(
                config.instance, config.params,
                [&](int slot) -> const ServerBehavior& {
                    return attacked[slot] ? deviated : honest;
                },
                rng);
            outcome.second.attacked_rounds = m;
        } else {
            outcome = run_verified_dqc(config.instance, config.params, config.behavior, rng);
        }
        outcome.second.trial = trial;
        stats.add(outcome.second);
    }
    stats.validate();
    return stats;
}

std::vector<SweepRow> adversary_sweep(const MonteCarloConfig& config,
                                      const std::vector<int>& m_grid,
                                      const PauliString& e,
                                      const SecurityBreakdown& breakdown,
                                      std::vector<RunStats>* per_m_stats) {
    std::vector<SweepRow> rows;
    for (int m : m_grid) {
        MonteCarloConfig cfg = config;
        cfg.attacked_rounds = m;
        cfg.attack_e = e;
        cfg.master_seed = splitmix64(config.master_seed ^
                                     (fnv1a64("sweep-m") + static_cast<uint64_t>(m)));
        RunStats stats = monte_carlo(cfg);
        if (per_m_stats) per_m_stats->push_back(stats);
        SweepRow row;
        row.m = m;
        row.accept_rate = static_cast<double>(stats.accept_count) / stats.trials;
        row.accept_and_wrong_rate =
            static_cast<double>(stats.accept_and_wrong_count) / stats.trials;
        row.stderr_wrong = std::sqrt(row.accept_and_wrong_rate *
                                     (1 - row.accept_and_wrong_rate) / stats.trials);
        const double frac = static_cast<double>(m) / config.params.big_n();
        row.envelope =
            frac >= breakdown.m0_over_n - 1e-12 ? breakdown.eps_phi : breakdown.nu_phi;
        rows.push_back(row);
    }
    return rows;
}

std::string stats_csv(const RunStats& stats) {
    std::ostringstream os;
    os << "trial,verdict,decision_bit,trap_failures,wrong,attacked_rounds\n";
    for (const TrialRow& row : stats.rows)
        os << row.trial << ',' << (row.accepted ? "accept" : "reject") << ',' << row.z
           << ',' << row.trap_failures << ',' << (row.wrong ? 1 : 0) << ','
           << row.attacked_rounds << '\n';
    return os.str();
}

}  // namespace mbdqc
