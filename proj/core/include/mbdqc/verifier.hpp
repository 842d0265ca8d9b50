#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mbdqc/bounds.hpp"
#include "mbdqc/protocol.hpp"
#include "mbdqc/traps.hpp"

namespace mbdqc {

struct VerificationParams {
    int d = 1;   // computation rounds
    int s = 1;   // test rounds
    int w = 0;   // reject once failed test rounds reach w
    std::uint64_t seed = 0;

    int big_n() const { return d + s; }
    void validate() const;  // d >= 1, s >= 0, 0 <= w <= s
};

// One deliverable test configuration: an input realizing one trap (or a
// merged group) plus the parity sets to check. The round fails if any parity
// comes back 1.
struct TestRound {
    std::vector<SinglePauliLabel> input_labels;
    std::vector<std::vector<int>> parity_sets;  // 1-based output index sets
};

std::vector<TestRound> test_rounds_of(const TrapFamily& family);
std::vector<TestRound> test_rounds_of(const TrapFamily& family, const MergePlan& plan);

struct RoundPlan {
    std::vector<int> sigma;        // logical round -> physical slot
    std::vector<int> trap_choice;  // per logical test round, a TestRound index

    // Logical rounds 0..d-1 are computation rounds, d..N-1 test rounds.
    int d = 0, s = 0;
    bool is_test_slot(int slot) const;
    int logical_of_slot(int slot) const;
    void validate() const;
};

RoundPlan plan_rounds(const VerificationParams& params, int test_kind_count,
                      std::mt19937_64& rng);
RoundPlan plan_rounds(const VerificationParams& params, const TrapFamily& family,
                      std::mt19937_64& rng);

struct Verdict {
    bool accepted = false;
    int z = 0;  // decision bit, meaningful when accepted

    static Verdict accept(int bit) { return {true, bit}; }
    static Verdict reject() { return {false, 0}; }
};

// CSV row: trial, verdict, decision bit, trap failures, wrong flag,
// attacked-round count.
struct TrialRow {
    int trial = 0;
    bool accepted = false;
    int z = 0;
    int trap_failures = 0;
    bool wrong = false;       // accepted with z != z_star (needs z_star)
    int attacked_rounds = 0;
    std::vector<int> failed_slots;  // physical slots whose trap flipped
};

struct RunStats {
    int trials = 0;
    int accept_count = 0;
    int accept_and_wrong_count = 0;
    std::vector<int> trap_failure_histogram;  // index = failure count
    std::vector<TrialRow> rows;

    void add(const TrialRow& row);
    void validate() const;
};

// The full delegated-verification instance. Computation rounds either run the
// real protocol (all-T injections on `structure` with `rho_labels`) or, when
// `synthetic` is set, draw a c-biased coin against z_star — useful for
// exercising the voting bound with a controlled error rate.
struct VerifierInstance {
    CliffordStructure structure;
    std::vector<StateLabel> rho_labels;
    std::vector<TestRound> tests;
    std::optional<int> z_star;  // externally supplied correct bit
    bool synthetic = false;
    double c = 0.0;  // synthetic computation error rate

    void validate() const;
};

std::pair<Verdict, TrialRow> run_verified_dqc(const VerifierInstance& instance,
                                              const VerificationParams& params,
                                              const ServerBehavior& behavior,
                                              std::mt19937_64& rng);

struct MonteCarloConfig {
    VerifierInstance instance;
    VerificationParams params;
    ServerBehavior behavior = ServerBehavior::honest();
    std::uint64_t master_seed = 0;
    int trials = 1;

    // When attacked_rounds >= 0 the behavior above is ignored and instead
    // `attack_e` hits exactly that many uniformly chosen physical slots; the
    // adversary never sees the round permutation.
    int attacked_rounds = -1;
    PauliString attack_e;
};

RunStats monte_carlo(const MonteCarloConfig& config);

struct SweepRow {
    int m = 0;
    double accept_and_wrong_rate = 0;
    double accept_rate = 0;
    double stderr_wrong = 0;
    double envelope = 0;  // analytic bound applicable at this m
};

// Appendix-style sweep over the number of attacked rounds; the envelope is
// eps(phi) when m/N reaches m0/N and nu(phi) below it, from the supplied
// breakdown.
std::vector<SweepRow> adversary_sweep(const MonteCarloConfig& config,
                                      const std::vector<int>& m_grid,
                                      const PauliString& e,
                                      const SecurityBreakdown& breakdown,
                                      std::vector<RunStats>* per_m_stats = nullptr);

std::string stats_csv(const RunStats& stats);

}  // namespace mbdqc
