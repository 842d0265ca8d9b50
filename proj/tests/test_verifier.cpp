#include <algorithm>
#include <cmath>
#include <numeric>

#include "doctest.h"
#include "mbdqc/rng.hpp"
#include "mbdqc/verifier.hpp"
#include "test_util.hpp"

using namespace mbdqc;

namespace {

CliffordStructure wire_structure(int n) { return CliffordStructure(n, 0); }

// Always-0 single-wire computation with singleton test rounds.
VerifierInstance zero_instance() {
    VerifierInstance inst;
    inst.structure = wire_structure(1);
    inst.rho_labels = {StateLabel::parse("0")};
    inst.tests = test_rounds_of(singleton_family(inst.structure));
    inst.z_star = 0;
    return inst;
}

}  // namespace

TEST_SUITE("verifier") {

TEST_CASE("round plans are seeded permutations") {
    VerificationParams params;
    params.d = 5;
    params.s = 7;
    params.w = 2;
    params.validate();
    CHECK(params.big_n() == 12);

    std::mt19937_64 r1 = substream(81, "plan");
    std::mt19937_64 r2 = substream(81, "plan");
    const RoundPlan plan = plan_rounds(params, 3, r1);
    const RoundPlan replay = plan_rounds(params, 3, r2);
    plan.validate();
    CHECK(plan.sigma == replay.sigma);
    CHECK(plan.trap_choice == replay.trap_choice);

    std::vector<int> sorted = plan.sigma;
    std::sort(sorted.begin(), sorted.end());
    for (int i = 0; i < 12; ++i) CHECK(sorted[i] == i);

    CHECK(static_cast<int>(plan.trap_choice.size()) == params.s);
    for (int choice : plan.trap_choice) {
        CHECK(choice >= 0);
        CHECK(choice < 3);
    }

    int test_slots = 0;
    for (int logical = 0; logical < 12; ++logical) {
        const int slot = plan.sigma[logical];
        CHECK(plan.logical_of_slot(slot) == logical);
        CHECK(plan.is_test_slot(slot) == (logical >= params.d));
        test_slots += plan.is_test_slot(slot);
    }
    CHECK(test_slots == params.s);
}

TEST_CASE("verification parameters allow zero test rounds but reject bad tolerances") {
    VerificationParams p;
    p.d = 3;
    p.s = 0;
    p.w = 0;
    p.validate();
    p.s = 2;
    p.w = 3;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
    p.w = -1;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
    p.d = 0;
    p.w = 0;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
}

TEST_CASE("test rounds inherit trap inputs and parity sets") {
    const TrapFamily family = singleton_family(wire_structure(2));
    const auto rounds = test_rounds_of(family);
    REQUIRE(rounds.size() == 2);
    for (std::size_t i = 0; i < rounds.size(); ++i) {
        CHECK(rounds[i].input_labels == family.traps[i].input_labels);
        REQUIRE(rounds[i].parity_sets.size() == 1);
        CHECK(rounds[i].parity_sets[0] == family.traps[i].q_set);
    }

    const MergePlan plan = merge_traps(family, MergeStrategy::ExactSmall);
    const auto merged_rounds = test_rounds_of(family, plan);
    REQUIRE(merged_rounds.size() == plan.groups.size());
    for (std::size_t g = 0; g < plan.groups.size(); ++g) {
        CHECK(merged_rounds[g].input_labels == plan.groups[g].input_labels);
        CHECK(merged_rounds[g].parity_sets.size() == plan.groups[g].trap_indices.size());
    }
}

TEST_CASE("honest synthetic runs accept and echo the reference bit") {
    VerifierInstance inst = zero_instance();
    inst.synthetic = true;
    inst.c = 0.0;
    inst.z_star = 1;

    VerificationParams params;
    params.d = 5;
    params.s = 5;
    params.w = 1;

    std::mt19937_64 rng = substream(82, "synthetic");
    const auto [verdict, row] = run_verified_dqc(inst, params, ServerBehavior::honest(), rng);
    CHECK(verdict.accepted);
    CHECK(verdict.z == 1);
    CHECK(row.trap_failures == 0);
    CHECK(!row.wrong);
    CHECK(row.failed_slots.empty());
}

TEST_CASE("a zero tolerance rejects even spotless runs") {
    VerifierInstance inst = zero_instance();
    VerificationParams params;
    params.d = 2;
    params.s = 2;
    params.w = 0;  // reject at >= 0 failures: degenerate but legal
    std::mt19937_64 rng = substream(83, "w0");
    const auto [verdict, row] = run_verified_dqc(inst, params, ServerBehavior::honest(), rng);
    CHECK(!verdict.accepted);
    CHECK(row.trap_failures == 0);
}

TEST_CASE("real computation rounds vote the circuit outcome") {
    VerifierInstance inst;
    inst.structure = wire_structure(1);
    inst.structure.layers[0].append(gate1(GateKind::X, 0));
    inst.rho_labels = {StateLabel::parse("0")};
    inst.tests = test_rounds_of(singleton_family(inst.structure));
    inst.z_star = 1;

    MonteCarloConfig config;
    config.instance = inst;
    config.params.d = 3;
    config.params.s = 3;
    config.params.w = 1;
    config.master_seed = 99;
    config.trials = 20;
    const RunStats stats = monte_carlo(config);
    stats.validate();
    CHECK(stats.trials == 20);
    CHECK(stats.accept_count == 20);
    CHECK(stats.accept_and_wrong_count == 0);

    // Flipping the reference makes every accepted trial wrong.
    config.instance.z_star = 0;
    const RunStats wrong = monte_carlo(config);
    CHECK(wrong.accept_count == 20);
    CHECK(wrong.accept_and_wrong_count == 20);
}

TEST_CASE("histogram accounts for every trial") {
    MonteCarloConfig config;
    config.instance = zero_instance();
    config.params.d = 4;
    config.params.s = 4;
    config.params.w = 2;
    config.master_seed = 17;
    config.trials = 30;
    config.attacked_rounds = 3;
    config.attack_e = PauliString::parse("+X");
    const RunStats stats = monte_carlo(config);
    stats.validate();
    CHECK(std::accumulate(stats.trap_failure_histogram.begin(),
                          stats.trap_failure_histogram.end(), 0) == stats.trials);
    for (const TrialRow& row : stats.rows) {
        CHECK(row.attacked_rounds == 3);
        CHECK(static_cast<int>(row.failed_slots.size()) == row.trap_failures);
    }
}

TEST_CASE("saturating attacks are always caught, absent attacks never") {
    MonteCarloConfig config;
    config.instance = zero_instance();
    config.params.d = 3;
    config.params.s = 3;
    config.params.w = 1;
    config.master_seed = 7;
    config.trials = 15;
    config.attack_e = PauliString::parse("+X");

    config.attacked_rounds = config.params.big_n();  // every slot flipped
    const RunStats all = monte_carlo(config);
    CHECK(all.accept_count == 0);

    config.attacked_rounds = 0;
    const RunStats none = monte_carlo(config);
    CHECK(none.accept_count == none.trials);
    CHECK(none.accept_and_wrong_count == 0);
    for (const TrialRow& row : none.rows) CHECK(row.z == 0);
}

TEST_CASE("monte carlo replays bit for bit") {
    MonteCarloConfig config;
    config.instance = zero_instance();
    config.instance.synthetic = true;
    config.instance.c = 0.3;
    config.params.d = 9;
    config.params.s = 5;
    config.params.w = 1;
    config.master_seed = 4242;
    config.trials = 25;
    const RunStats a = monte_carlo(config);
    const RunStats b = monte_carlo(config);
    CHECK(stats_csv(a) == stats_csv(b));
    CHECK(a.accept_count == b.accept_count);

    config.master_seed = 4243;
    const RunStats c = monte_carlo(config);
    // A different seed reshuffles at least some synthetic coin flips.
    CHECK(stats_csv(a) != stats_csv(c));
}

TEST_CASE("adversary sweeps report rates against the analytic envelope") {
    MonteCarloConfig config;
    config.instance = zero_instance();
    config.params.d = 5;
    config.params.s = 5;
    config.params.w = 1;
    config.master_seed = 11;
    config.trials = 40;

    BoundParams bp;
    bp.d = 5;
    bp.s = 5;
    bp.w = 1;
    bp.k = 1;
    bp.c = 0.0;
    const SecurityBreakdown breakdown = security_error(bp);

    const PauliString e = PauliString::parse("+X");
    std::vector<RunStats> per_m;
    const std::vector<int> m_grid = {0, 5, 10};
    const auto rows = adversary_sweep(config, m_grid, e, breakdown, &per_m);
    REQUIRE(rows.size() == 3);
    REQUIRE(per_m.size() == 3);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        CHECK(rows[i].m == m_grid[i]);
        CHECK(per_m[i].trials == config.trials);
        const double rate =
            static_cast<double>(per_m[i].accept_and_wrong_count) / config.trials;
        CHECK(std::abs(rows[i].accept_and_wrong_rate - rate) < 1e-12);
        const double frac = static_cast<double>(rows[i].m) / bp.big_n();
        const double want_env =
            frac >= breakdown.m0_over_n - 1e-12 ? breakdown.eps_phi : breakdown.nu_phi;
        CHECK(rows[i].envelope == want_env);
        CHECK(rows[i].stderr_wrong >= 0.0);
    }
    // z_star = 0 and the attack flips the output, so no accepted trial is
    // ever wrong at m = 0 and the saturated attack must reject everything.
    CHECK(rows[0].accept_and_wrong_rate == 0.0);
    CHECK(rows[2].accept_rate == 0.0);
}

TEST_CASE("csv rendering is stable") {
    RunStats stats;
    TrialRow r0;
    r0.trial = 0;
    r0.accepted = true;
    r0.z = 1;
    r0.trap_failures = 0;
    r0.wrong = false;
    r0.attacked_rounds = 3;
    TrialRow r1;
    r1.trial = 1;
    r1.accepted = false;
    r1.z = 0;
    r1.trap_failures = 2;
    r1.wrong = false;
    r1.attacked_rounds = 5;
    r1.failed_slots = {1, 4};
    stats.add(r0);
    stats.add(r1);
    CHECK(stats_csv(stats) ==
          "trial,verdict,decision_bit,trap_failures,wrong,attacked_rounds\n"
          "0,accept,1,0,0,3\n"
          "1,reject,0,2,0,5\n");
    CHECK(stats.trials == 2);
    CHECK(stats.accept_count == 1);
    CHECK(stats.trap_failure_histogram.size() >= 3);
    CHECK(stats.trap_failure_histogram[0] == 1);
    CHECK(stats.trap_failure_histogram[2] == 1);
}

TEST_CASE("instance validation") {
    VerifierInstance inst = zero_instance();
    inst.validate();

    VerifierInstance no_tests = inst;
    no_tests.tests.clear();
    no_tests.validate();  // legal: s = 0 setups carry no test rounds

    VerifierInstance biased = inst;
    biased.synthetic = true;
    biased.c = 0.7;  // any bias below one is a legal synthetic instance
    biased.validate();
    biased.c = 1.5;
    CHECK_THROWS_AS(biased.validate(), std::invalid_argument);

    VerifierInstance no_star = inst;
    no_star.synthetic = true;
    no_star.z_star.reset();
    CHECK_THROWS_AS(no_star.validate(), std::invalid_argument);
}

}  // TEST_SUITE
