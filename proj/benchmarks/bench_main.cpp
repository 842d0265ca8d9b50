// Microbenchmarks for the hot paths: stabilizer evolution, one full protocol
// session, the security-error grid search and trap merging.

#include <benchmark/benchmark.h>

#include <random>

#include "mbdqc/bounds.hpp"
#include "mbdqc/protocol.hpp"
#include "mbdqc/rng.hpp"
#include "mbdqc/stabilizer_sim.hpp"
#include "mbdqc/traps.hpp"

namespace {

using namespace mbdqc;

CliffordCircuit dense_clifford(int k, int len, std::mt19937_64& rng) {
    CliffordCircuit c(k);
    for (int i = 0; i < len; ++i) {
        if (k >= 2 && rand_index(rng, 3) == 0) {
            const int a = static_cast<int>(rand_index(rng, k));
            int b = a;
            while (b == a) b = static_cast<int>(rand_index(rng, k));
            c.append(gate2(GateKind::CNOT, a, b));
        } else {
            c.append(gate1(rand_bit(rng) ? GateKind::H : GateKind::S,
                           static_cast<int>(rand_index(rng, k))));
        }
    }
    return c;
}

void bm_stabilizer_evolve(benchmark::State& state) {
    const int k = static_cast<int>(state.range(0));
    std::mt19937_64 rng = substream(1, "bench-stab");
    const CliffordCircuit c = dense_clifford(k, 8 * k, rng);
    const std::vector<SinglePauliLabel> labels(k, SinglePauliLabel{Axis::Z, +1});
    for (auto _ : state) {
        StabilizerState st = apply_clifford(prepare_product(labels), c);
        benchmark::DoNotOptimize(st);
    }
}
BENCHMARK(bm_stabilizer_evolve)->Arg(4)->Arg(16)->Arg(64);

void bm_protocol_session(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    const int t = static_cast<int>(state.range(1));
    std::mt19937_64 gen = substream(2, "bench-proto");
    CliffordStructure s(n, t);
    for (auto& layer : s.layers) layer = dense_clifford(n, 4, gen);
    const MbdqcClient client{s, std::vector<StateLabel>(n, StateLabel::parse("0")),
                             std::vector<StateLabel>(t, StateLabel::magic())};
    MbdqcOptions opts;
    opts.record_transcript = false;
    std::uint64_t trial = 0;
    for (auto _ : state) {
        std::mt19937_64 rng = substream(2, "bench-proto-run", trial++);
        benchmark::DoNotOptimize(run_mbdqc(client, ServerBehavior::honest(), rng, opts));
    }
}
BENCHMARK(bm_protocol_session)->Args({2, 0})->Args({2, 2})->Args({3, 2});

void bm_security_grid(benchmark::State& state) {
    BoundParams p;
    p.d = 400;
    p.s = 400;
    p.w = 4;
    p.k = 2;
    p.c = 0.05;
    for (auto _ : state) benchmark::DoNotOptimize(security_error(p));
}
BENCHMARK(bm_security_grid);

void bm_trap_merge(benchmark::State& state) {
    const int k = static_cast<int>(state.range(0));
    std::mt19937_64 gen = substream(3, "bench-traps");
    CliffordStructure s(k, 0);
    s.layers[0] = dense_clifford(k, 4 * k, gen);
    TrapFamily family = singleton_family(s);
    for (int i = 1; i < k; ++i) family.traps.push_back(design_trap(s, {i, i + 1}));
    for (auto _ : state)
        benchmark::DoNotOptimize(merge_traps(family, MergeStrategy::GreedyLargestFirst));
}
BENCHMARK(bm_trap_merge)->Arg(4)->Arg(8);

}  // namespace

BENCHMARK_MAIN();
