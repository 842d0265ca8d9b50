#include "mbdqc/io.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "mbdqc/rng.hpp"

namespace mbdqc {

using nlohmann::json;

namespace {

std::string join_issues(const std::vector<std::string>& issues) {
    std::ostringstream os;
    os << "config rejected with " << issues.size() << " issue(s):";
    for (const auto& issue : issues) os << "\n  - " << issue;
    return os.str();
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> issues_)
    : std::runtime_error(join_issues(issues_)), issues(std::move(issues_)) {}

MbdqcClient ExperimentConfig::client() const {
    MbdqcClient cl;
    cl.structure = structure;
    cl.rho_labels = rho_labels;
    if (computation)
        cl.a_choices.assign(structure.t, StateLabel::magic());
    else
        cl.a_choices = a_choices;
    return cl;
}

void ExperimentConfig::validate() const {
    structure.validate();
    client().validate();
    params.validate();
    if (trials < 1) throw std::invalid_argument("need at least one trial");
}

namespace {

struct Parser {
    std::vector<std::string> issues;

    void fail(const std::string& path, const std::string& msg) {
        issues.push_back(path + ": " + msg);
    }

    bool need(const json& j, const std::string& path, const char* key) {
        if (j.contains(key)) return true;
        fail(path + "." + key, "missing required field");
        return false;
    }

    int get_int(const json& j, const std::string& path, const char* key, int fallback) {
        if (!j.contains(key)) return fallback;
        if (!j[key].is_number_integer()) {
            fail(path + "." + key, "expected an integer");
            return fallback;
        }
        return j[key].get<int>();
    }

    double get_num(const json& j, const std::string& path, const char* key,
                   double fallback) {
        if (!j.contains(key)) return fallback;
        if (!j[key].is_number()) {
            fail(path + "." + key, "expected a number");
            return fallback;
        }
        return j[key].get<double>();
    }

    std::string get_str(const json& j, const std::string& path, const char* key,
                        const std::string& fallback) {
        if (!j.contains(key)) return fallback;
        if (!j[key].is_string()) {
            fail(path + "." + key, "expected a string");
            return fallback;
        }
        return j[key].get<std::string>();
    }

    std::optional<CliffordGate> parse_gate(const json& j, const std::string& path, int n) {
        if (!j.is_object()) {
            fail(path, "expected a gate record {kind, targets}");
            return std::nullopt;
        }
        const std::string kind = get_str(j, path, "kind", "");
        static const std::map<std::string, GateKind> kinds = {
            {"H", GateKind::H},       {"S", GateKind::S},   {"CNOT", GateKind::CNOT},
            {"SWAP", GateKind::SWAP}, {"X", GateKind::X},   {"Y", GateKind::Y},
            {"Z", GateKind::Z}};
        const auto it = kinds.find(kind);
        if (it == kinds.end()) {
            fail(path + ".kind", "unknown gate kind '" + kind + "'");
            return std::nullopt;
        }
        if (!j.contains("targets") || !j["targets"].is_array()) {
            fail(path + ".targets", "expected an array of wire indices");
            return std::nullopt;
        }
        std::vector<int> targets;
        for (const auto& t : j["targets"]) {
            if (!t.is_number_integer()) {
                fail(path + ".targets", "expected integers");
                return std::nullopt;
            }
            targets.push_back(t.get<int>());
        }
        const bool two = it->second == GateKind::CNOT || it->second == GateKind::SWAP;
        if (two && targets.size() != 2) {
            fail(path + ".targets", kind + " takes exactly two targets");
            return std::nullopt;
        }
        if (!two && targets.size() != 1) {
            fail(path + ".targets", kind + " takes exactly one target");
            return std::nullopt;
        }
        for (int t : targets)
            if (t < 0 || t >= n) {
                fail(path + ".targets", "wire index outside 0.." + std::to_string(n - 1));
                return std::nullopt;
            }
        if (two && targets[0] == targets[1]) {
            fail(path + ".targets", "two-qubit gate needs distinct wires");
            return std::nullopt;
        }
        if (two) return gate2(it->second, targets[0], targets[1]);
        return gate1(it->second, targets[0]);
    }

    std::optional<StateLabel> parse_label(const json& j, const std::string& path) {
        if (!j.is_string()) {
            fail(path, "expected a state label string");
            return std::nullopt;
        }
        try {
            return StateLabel::parse(j.get<std::string>());
        } catch (const std::exception& ex) {
            fail(path, ex.what());
            return std::nullopt;
        }
    }

    std::optional<PauliString> parse_pauli(const json& j, const std::string& path,
                                           int width) {
        if (!j.is_string()) {
            fail(path, "expected a Pauli string like +XZ");
            return std::nullopt;
        }
        try {
            PauliString p = PauliString::parse(j.get<std::string>());
            if (p.k != width) {
                fail(path, "Pauli width " + std::to_string(p.k) + " differs from n+t=" +
                               std::to_string(width));
                return std::nullopt;
            }
            return p;
        } catch (const std::exception& ex) {
            fail(path, ex.what());
            return std::nullopt;
        }
    }
};

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
    json root;
    try {
        root = json::parse(text);
    } catch (const std::exception& ex) {
        throw ConfigError({std::string("json: ") + ex.what()});
    }

    Parser p;
    ExperimentConfig cfg;
    cfg.schema = p.get_str(root, "", "schema", "mbdqc-experiment/1");
    if (cfg.schema != "mbdqc-experiment/1")
        p.fail("schema", "unsupported schema '" + cfg.schema + "'");

    int n = 1, t = 0;
    if (p.need(root, "", "structure") && root["structure"].is_object()) {
        const json& st = root["structure"];
        n = p.get_int(st, "structure", "n", 1);
        t = p.get_int(st, "structure", "t", 0);
        if (n < 1) p.fail("structure.n", "need at least one data wire");
        if (t < 0) p.fail("structure.t", "negative layer count");
        if (n >= 1 && t >= 0) {
            cfg.structure = CliffordStructure(n, t);
            if (p.need(st, "structure", "layers") && st["layers"].is_array()) {
                if (static_cast<int>(st["layers"].size()) != t + 1) {
                    p.fail("structure.layers",
                           "expected exactly t+1 = " + std::to_string(t + 1) + " layers");
                } else {
                    for (int i = 0; i <= t; ++i) {
                        const json& layer = st["layers"][i];
                        const std::string lp = "structure.layers[" + std::to_string(i) + "]";
                        if (!layer.is_array()) {
                            p.fail(lp, "expected an array of gate records");
                            continue;
                        }
                        for (std::size_t g = 0; g < layer.size(); ++g) {
                            auto gate = p.parse_gate(layer[g], lp + "[" + std::to_string(g) + "]", n);
                            if (gate) cfg.structure.layers[i].append(*gate);
                        }
                    }
                }
            }
        }
    } else if (root.contains("structure")) {
        p.fail("structure", "expected an object");
    }

    if (p.need(root, "", "input") && root["input"].is_array()) {
        if (static_cast<int>(root["input"].size()) != n)
            p.fail("input", "expected one label per data wire (n=" + std::to_string(n) + ")");
        for (std::size_t i = 0; i < root["input"].size(); ++i) {
            auto label = p.parse_label(root["input"][i], "input[" + std::to_string(i) + "]");
            if (!label) continue;
            if (label->is_magic) {
                p.fail("input[" + std::to_string(i) + "]",
                       "protocol inputs are stabilizer product states");
                continue;
            }
            cfg.rho_labels.push_back(*label);
        }
    } else if (root.contains("input")) {
        p.fail("input", "expected an array of labels");
    }

    if (p.need(root, "", "injection") && root["injection"].is_object()) {
        const json& inj = root["injection"];
        const std::string mode = p.get_str(inj, "injection", "mode", "");
        if (mode == "computation") {
            cfg.computation = true;
        } else if (mode == "magic_free") {
            cfg.computation = false;
            if (p.need(inj, "injection", "labels") && inj["labels"].is_array()) {
                if (static_cast<int>(inj["labels"].size()) != t)
                    p.fail("injection.labels", "expected one label per layer (t=" +
                                                   std::to_string(t) + ")");
                bool any_magic = false, any_stab = false;
                for (std::size_t i = 0; i < inj["labels"].size(); ++i) {
                    auto label = p.parse_label(inj["labels"][i],
                                               "injection.labels[" + std::to_string(i) + "]");
                    if (!label) continue;
                    (label->is_magic ? any_magic : any_stab) = true;
                    cfg.a_choices.push_back(*label);
                }
                if (any_magic)
                    p.fail("injection.labels",
                           any_stab ? "mixed injection modes" : "magic labels belong to "
                                                                "mode 'computation'");
            }
        } else {
            p.fail("injection.mode", "expected 'computation' or 'magic_free'");
        }
    } else if (root.contains("injection")) {
        p.fail("injection", "expected an object");
    }

    if (p.need(root, "", "verification") && root["verification"].is_object()) {
        const json& v = root["verification"];
        cfg.params.d = p.get_int(v, "verification", "d", 1);
        cfg.params.s = p.get_int(v, "verification", "s", 0);
        cfg.params.w = p.get_int(v, "verification", "w", 0);
        if (cfg.params.d < 1) p.fail("verification.d", "need at least one computation round");
        if (cfg.params.s < 0) p.fail("verification.s", "negative test round count");
        if (cfg.params.w < 0 || cfg.params.w > cfg.params.s)
            p.fail("verification.w", "w must satisfy 0 <= w <= s");
    } else if (root.contains("verification")) {
        p.fail("verification", "expected an object");
    }

    if (root.contains("family")) {
        if (!root["family"].is_object()) {
            p.fail("family", "expected an object");
        } else {
            const std::string kind = p.get_str(root["family"], "family", "kind", "singleton");
            if (kind == "singleton") {
                cfg.family_kind = FamilyKind::Singleton;
            } else if (kind == "merged") {
                cfg.family_kind = FamilyKind::Merged;
            } else if (kind == "explicit") {
                cfg.family_kind = FamilyKind::Explicit;
                const json& fam = root["family"];
                if (p.need(fam, "family", "sets") && fam["sets"].is_array()) {
                    for (std::size_t i = 0; i < fam["sets"].size(); ++i) {
                        const json& set = fam["sets"][i];
                        const std::string sp = "family.sets[" + std::to_string(i) + "]";
                        if (!set.is_array() || set.empty()) {
                            p.fail(sp, "expected a nonempty array of indices");
                            continue;
                        }
                        std::vector<int> q;
                        for (const auto& idx : set) {
                            if (!idx.is_number_integer()) {
                                p.fail(sp, "expected integers");
                                break;
                            }
                            const int v = idx.get<int>();
                            if (v < 1 || v > n + t) {
                                p.fail(sp, "index outside 1.." + std::to_string(n + t));
                                break;
                            }
                            q.push_back(v);
                        }
                        if (static_cast<int>(q.size()) == static_cast<int>(set.size()))
                            cfg.explicit_q_sets.push_back(std::move(q));
                    }
                }
            } else {
                p.fail("family.kind", "expected singleton, explicit or merged");
            }
        }
    }

    if (root.contains("behavior")) {
        if (!root["behavior"].is_object()) {
            p.fail("behavior", "expected an object");
        } else {
            const json& b = root["behavior"];
            const std::string kind = p.get_str(b, "behavior", "kind", "honest");
            if (kind == "honest") {
                cfg.behavior = ServerBehavior::honest();
            } else if (kind == "pauli") {
                std::map<int, PauliString> devs;
                if (p.need(b, "behavior", "deviations") && b["deviations"].is_array()) {
                    for (std::size_t i = 0; i < b["deviations"].size(); ++i) {
                        const json& d = b["deviations"][i];
                        const std::string dp =
                            "behavior.deviations[" + std::to_string(i) + "]";
                        if (!d.is_object()) {
                            p.fail(dp, "expected {point, pauli}");
                            continue;
                        }
                        if (!p.need(d, dp, "point")) continue;
                        const int point = p.get_int(d, dp, "point", 0);
                        if (point < 0 || point > t) {
                            p.fail(dp + ".point", "point outside 0..t");
                            continue;
                        }
                        if (!d.contains("pauli")) {
                            p.fail(dp + ".pauli", "missing required field");
                            continue;
                        }
                        auto e = p.parse_pauli(d["pauli"], dp + ".pauli", n + t);
                        if (e) devs.emplace(point, *e);
                    }
                }
                if (p.issues.empty()) cfg.behavior = ServerBehavior::pauli_deviation(devs);
            } else if (kind == "noisy") {
                const std::string model = p.get_str(b, "behavior", "model", "uniform_harmful");
                if (model == "uniform_harmful") {
                    const double pe = p.get_num(b, "behavior", "p_err", 0.0);
                    if (pe < 0 || pe > 1)
                        p.fail("behavior.p_err", "outside [0,1]");
                    else
                        cfg.behavior = ServerBehavior::noisy_uniform(pe);
                } else if (model == "fixed_pauli") {
                    const double pe = p.get_num(b, "behavior", "p_err", 0.0);
                    std::optional<PauliString> e;
                    if (p.need(b, "behavior", "pauli"))
                        e = p.parse_pauli(b["pauli"], "behavior.pauli", n + t);
                    if (pe < 0 || pe > 1)
                        p.fail("behavior.p_err", "outside [0,1]");
                    else if (e)
                        cfg.behavior = ServerBehavior::noisy_fixed(pe, *e);
                } else if (model == "per_qubit_depolarizing") {
                    const double pq = p.get_num(b, "behavior", "p", 0.0);
                    if (pq < 0 || pq > 1)
                        p.fail("behavior.p", "outside [0,1]");
                    else
                        cfg.behavior = ServerBehavior::noisy_depolarizing(pq);
                } else {
                    p.fail("behavior.model",
                           "expected uniform_harmful, fixed_pauli or per_qubit_depolarizing");
                }
            } else if (kind == "unitary") {
                p.fail("behavior.kind",
                       "unitary adversaries are built programmatically; use reduction-check");
            } else {
                p.fail("behavior.kind", "expected honest, pauli or noisy");
            }
        }
    }

    cfg.trials = p.get_int(root, "", "trials", 1);
    if (root.contains("trials") && cfg.trials < 1) p.fail("trials", "need at least one trial");
    if (root.contains("seed")) {
        if (!root["seed"].is_number_unsigned() && !root["seed"].is_number_integer())
            p.fail("seed", "expected a 64-bit integer");
        else
            cfg.master_seed = root["seed"].get<std::uint64_t>();
    }
    cfg.params.seed = cfg.master_seed;

    const std::string backend = p.get_str(root, "", "backend", "auto");
    if (backend == "auto") {
        cfg.backend = std::nullopt;
    } else if (backend == "stab") {
        cfg.backend = Backend::Stabilizer;
    } else if (backend == "dense") {
        cfg.backend = Backend::Dense;
    } else {
        p.fail("backend", "expected auto, stab or dense");
    }

    if (root.contains("z_star")) {
        const int z = p.get_int(root, "", "z_star", 0);
        if (z != 0 && z != 1)
            p.fail("z_star", "expected a bit");
        else
            cfg.z_star = z;
    }
    cfg.synthetic_c = p.get_num(root, "", "synthetic_c", -1);
    if (cfg.synthetic_c >= 0 && (cfg.synthetic_c >= 1 || !root.contains("z_star")))
        p.fail("synthetic_c", "needs a bias in [0,1) and an explicit z_star");

    if (root.contains("sweep")) {
        if (!root["sweep"].is_object()) {
            p.fail("sweep", "expected an object");
        } else {
            const json& sw = root["sweep"];
            if (p.need(sw, "sweep", "m_grid") && sw["m_grid"].is_array())
                for (const auto& m : sw["m_grid"]) {
                    if (!m.is_number_integer() || m.get<int>() < 0) {
                        p.fail("sweep.m_grid", "expected nonnegative integers");
                        break;
                    }
                    cfg.sweep_m_grid.push_back(m.get<int>());
                }
            if (p.need(sw, "sweep", "pauli"))
                cfg.sweep_pauli = p.parse_pauli(sw["pauli"], "sweep.pauli", n + t);
        }
    }

    cfg.bound_params.d = cfg.params.d;
    cfg.bound_params.s = std::max(cfg.params.s, 1);
    cfg.bound_params.w = cfg.params.w;
    cfg.bound_params.k = n + t;
    if (root.contains("bounds")) {
        if (!root["bounds"].is_object()) {
            p.fail("bounds", "expected an object");
        } else {
            const json& bp = root["bounds"];
            cfg.bound_params.c = p.get_num(bp, "bounds", "c", 0.0);
            cfg.bound_params.p_err = p.get_num(bp, "bounds", "p_err", 0.0);
            const std::string conv = p.get_str(bp, "bounds", "delta_convention", "range");
            if (conv == "range")
                cfg.bound_params.delta_convention = DeltaConvention::Range;
            else if (conv == "item9")
                cfg.bound_params.delta_convention = DeltaConvention::Item9;
            else
                p.fail("bounds.delta_convention", "expected range or item9");
            if (cfg.bound_params.c < 0 || cfg.bound_params.c >= 0.5)
                p.fail("bounds.c", "expected c in [0, 1/2)");
            if (cfg.bound_params.p_err < 0 || cfg.bound_params.p_err > 1)
                p.fail("bounds.p_err", "expected p_err in [0,1]");
        }
    }

    if (!p.issues.empty()) throw ConfigError(std::move(p.issues));

    // Final structural cross-checks through the domain validators.
    try {
        cfg.validate();
    } catch (const std::exception& ex) {
        throw ConfigError({std::string("config: ") + ex.what()});
    }
    return cfg;
}

namespace {

json gate_json(const CliffordGate& g) {
    static const std::map<GateKind, std::string> names = {
        {GateKind::H, "H"},       {GateKind::S, "S"},   {GateKind::CNOT, "CNOT"},
        {GateKind::SWAP, "SWAP"}, {GateKind::X, "X"},   {GateKind::Y, "Y"},
        {GateKind::Z, "Z"}};
    json j;
    j["kind"] = names.at(g.kind);
    j["targets"] = g.two_qubit() ? json::array({g.a, g.b}) : json::array({g.a});
    return j;
}

}  // namespace

std::string dump_config(const ExperimentConfig& cfg) {
    json root;
    root["schema"] = cfg.schema;
    root["structure"]["n"] = cfg.structure.n;
    root["structure"]["t"] = cfg.structure.t;
    json layers = json::array();
    for (const auto& layer : cfg.structure.layers) {
        json gates = json::array();
        for (const auto& g : layer.gates) gates.push_back(gate_json(g));
        layers.push_back(gates);
    }
    root["structure"]["layers"] = layers;
    json input = json::array();
    for (const auto& l : cfg.rho_labels) input.push_back(l.str());
    root["input"] = input;
    if (cfg.computation) {
        root["injection"]["mode"] = "computation";
    } else {
        root["injection"]["mode"] = "magic_free";
        json labels = json::array();
        for (const auto& l : cfg.a_choices) labels.push_back(l.str());
        root["injection"]["labels"] = labels;
    }
    root["verification"] = {{"d", cfg.params.d}, {"s", cfg.params.s}, {"w", cfg.params.w}};
    switch (cfg.family_kind) {
        case FamilyKind::Singleton: root["family"]["kind"] = "singleton"; break;
        case FamilyKind::Merged: root["family"]["kind"] = "merged"; break;
        case FamilyKind::Explicit: {
            root["family"]["kind"] = "explicit";
            root["family"]["sets"] = cfg.explicit_q_sets;
            break;
        }
    }
    switch (cfg.behavior.kind) {
        case ServerBehavior::Kind::Honest: root["behavior"]["kind"] = "honest"; break;
        case ServerBehavior::Kind::PauliDeviation: {
            root["behavior"]["kind"] = "pauli";
            json devs = json::array();
            for (const auto& [point, e] : cfg.behavior.deviations)
                devs.push_back({{"point", point}, {"pauli", e.str()}});
            root["behavior"]["deviations"] = devs;
            break;
        }
        case ServerBehavior::Kind::NoisyHonest: {
            root["behavior"]["kind"] = "noisy";
            switch (cfg.behavior.noise_kind) {
                case NoiseKind::UniformHarmful:
                    root["behavior"]["model"] = "uniform_harmful";
                    root["behavior"]["p_err"] = cfg.behavior.p_err;
                    break;
                case NoiseKind::FixedPauli:
                    root["behavior"]["model"] = "fixed_pauli";
                    root["behavior"]["p_err"] = cfg.behavior.p_err;
                    root["behavior"]["pauli"] = cfg.behavior.fixed_e.str();
                    break;
                case NoiseKind::PerQubitDepolarizing:
                    root["behavior"]["model"] = "per_qubit_depolarizing";
                    root["behavior"]["p"] = cfg.behavior.depol_p;
                    break;
            }
            break;
        }
        case ServerBehavior::Kind::UnitaryDeviation:
            root["behavior"]["kind"] = "unitary";
            break;
    }
    root["trials"] = cfg.trials;
    root["seed"] = cfg.master_seed;
    if (cfg.backend)
        root["backend"] = *cfg.backend == Backend::Stabilizer ? "stab" : "dense";
    if (cfg.z_star) root["z_star"] = *cfg.z_star;
    if (cfg.synthetic_c >= 0) root["synthetic_c"] = cfg.synthetic_c;
    if (!cfg.sweep_m_grid.empty()) {
        root["sweep"]["m_grid"] = cfg.sweep_m_grid;
        if (cfg.sweep_pauli) root["sweep"]["pauli"] = cfg.sweep_pauli->str();
    }
    root["bounds"] = {{"c", cfg.bound_params.c},
                      {"p_err", cfg.bound_params.p_err},
                      {"delta_convention",
                       cfg.bound_params.delta_convention == DeltaConvention::Range
                           ? "range"
                           : "item9"}};
    return root.dump(2) + "\n";
}

RateWithError rate_of(int count, int trials) {
    if (trials < 1) throw std::invalid_argument("rate needs at least one trial");
    if (count < 0 || count > trials)
        throw std::invalid_argument("count " + std::to_string(count) +
                                    " outside 0.." + std::to_string(trials));
    RateWithError r;
    r.value = static_cast<double>(count) / trials;
    r.stderr_ = std::sqrt(r.value * (1 - r.value) / trials);
    return r;
}

std::string summary_json_of(const RunStats& stats,
                            const std::vector<std::pair<std::string, double>>& bound_rows,
                            const std::vector<SweepRow>& sweep) {
    json root;
    root["schema"] = "mbdqc-results/1";
    root["trials"] = stats.trials;
    const auto rate_json = [](const RateWithError& r) {
        return json{{"value", r.value}, {"stderr", r.stderr_}};
    };
    root["accept_rate"] = rate_json(rate_of(stats.accept_count, stats.trials));
    root["accept_and_wrong_rate"] =
        rate_json(rate_of(stats.accept_and_wrong_count, stats.trials));
    root["trap_failure_histogram"] = stats.trap_failure_histogram;
    for (const auto& [name, value] : bound_rows) root["bounds"][name] = value;
    if (!sweep.empty()) {
        json rows = json::array();
        for (const SweepRow& row : sweep) {
            json r;
            r["m"] = row.m;
            r["accept_rate"] = row.accept_rate;
            r["accept_and_wrong"] = {{"value", row.accept_and_wrong_rate},
                                     {"stderr", row.stderr_wrong}};
            r["envelope"] = row.envelope;
            rows.push_back(r);
        }
        root["sweep"] = rows;
    }
    return root.dump(2) + "\n";
}

std::uint64_t digest64(const std::string& text) { return fnv1a64(text); }

void ResultBundle::write_to(const std::string& dir) const {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    const auto write = [&](const char* name, const std::string& content) {
        std::ofstream out(fs::path(dir) / name, std::ios::binary);
        if (!out) throw std::runtime_error(std::string("cannot write ") + name);
        out << content;
    };
    write("config.json", config_echo);
    write("results.csv", stats_csv);
    write("summary.json", summary_json);
    if (!trap_table_text.empty()) write("traps.txt", trap_table_text);
    if (!transcript_digest.empty()) write("digests.txt", transcript_digest);
    const auto now = std::chrono::system_clock::now();
    const auto secs =
        std::chrono::duration_cast<std::chrono::seconds>(now.time_since_epoch()).count();
    write("timestamp.txt", std::to_string(secs) + "\n");
}

}  // namespace mbdqc
