#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "mbdqc/bounds.hpp"
#include "mbdqc/protocol.hpp"
#include "mbdqc/traps.hpp"
#include "mbdqc/verifier.hpp"

namespace mbdqc {

// Schema violations are collected and thrown together; a config is either
// fully accepted or rejected with the complete issue list.
struct ConfigError : std::runtime_error {
    std::vector<std::string> issues;

    explicit ConfigError(std::vector<std::string> issues_);
};

enum class FamilyKind : uint8_t { Singleton, Explicit, Merged };

struct ExperimentConfig {
    std::string schema;  // "mbdqc-experiment/1"
    CliffordStructure structure;
    std::vector<StateLabel> rho_labels;
    bool computation = false;             // all-T injections
    std::vector<StateLabel> a_choices;    // magic-free labels (empty if computation)
    VerificationParams params;
    FamilyKind family_kind = FamilyKind::Singleton;
    std::vector<std::vector<int>> explicit_q_sets;
    ServerBehavior behavior = ServerBehavior::honest();
    int trials = 1;
    std::uint64_t master_seed = 0;
    std::optional<Backend> backend;
    std::optional<int> z_star;
    double synthetic_c = -1;              // >= 0 enables the synthetic computation
    std::vector<int> sweep_m_grid;        // optional adversary sweep
    std::optional<PauliString> sweep_pauli;
    BoundParams bound_params;             // c / p_err for bound evaluation

    MbdqcClient client() const;  // structure + inputs + injections
    void validate() const;
};

ExperimentConfig parse_config(const std::string& text);
std::string dump_config(const ExperimentConfig& config);  // canonical echo

struct ResultBundle {
    std::string schema_version;   // "mbdqc-results/1"
    std::string config_echo;      // canonical config JSON
    std::string stats_csv;        // one row per trial
    std::string summary_json;     // rates with standard errors, bound values
    std::string trap_table_text;
    std::string transcript_digest;

    // Writes config.json, results.csv, summary.json, traps.txt, digests.txt
    // (all deterministic) plus a timestamp.txt sidecar.
    void write_to(const std::string& dir) const;
};

// Helpers shared by the CLI: probability with its Monte-Carlo standard error.
struct RateWithError {
    double value = 0;
    double stderr_ = 0;
};

RateWithError rate_of(int count, int trials);

std::string summary_json_of(const RunStats& stats,
                            const std::vector<std::pair<std::string, double>>& bound_rows,
                            const std::vector<SweepRow>& sweep);

std::uint64_t digest64(const std::string& text);

}  // namespace mbdqc
