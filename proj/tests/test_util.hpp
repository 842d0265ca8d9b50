#pragma once

// Shared test helpers: seeded random circuits/structures/labels and a few
// metric shims. Everything is driven by explicit generators so test runs
// replay bit-for-bit.

#include <cmath>
#include <complex>
#include <random>
#include <vector>

#include "mbdqc/circuit.hpp"
#include "mbdqc/dense_sim.hpp"
#include "mbdqc/pauli.hpp"
#include "mbdqc/rng.hpp"

namespace mbdqc::testutil {

inline CliffordGate random_gate(int k, std::mt19937_64& rng) {
    static const GateKind kOne[] = {GateKind::H, GateKind::S, GateKind::X, GateKind::Y,
                                    GateKind::Z};
    if (k >= 2 && rand_index(rng, 3) == 0) {
        const int a = static_cast<int>(rand_index(rng, k));
        int b = a;
        while (b == a) b = static_cast<int>(rand_index(rng, k));
        return gate2(rand_bit(rng) ? GateKind::CNOT : GateKind::SWAP, a, b);
    }
    return gate1(kOne[rand_index(rng, 5)], static_cast<int>(rand_index(rng, k)));
}

inline CliffordCircuit random_circuit(int k, int len, std::mt19937_64& rng) {
    CliffordCircuit c(k);
    for (int i = 0; i < len; ++i) c.append(random_gate(k, rng));
    return c;
}

inline CliffordStructure random_structure(int n, int t, int layer_len,
                                          std::mt19937_64& rng) {
    CliffordStructure s(n, t);
    for (auto& layer : s.layers) layer = random_circuit(n, layer_len, rng);
    return s;
}

inline SinglePauliLabel random_stab_label(std::mt19937_64& rng) {
    static const Axis kAxes[] = {Axis::X, Axis::Y, Axis::Z};
    return {kAxes[rand_index(rng, 3)], rand_bit(rng) ? +1 : -1};
}

inline std::vector<StateLabel> random_product_input(int n, std::mt19937_64& rng) {
    std::vector<StateLabel> labels;
    labels.reserve(n);
    for (int i = 0; i < n; ++i) labels.push_back(StateLabel::of(random_stab_label(rng)));
    return labels;
}

// Largest absolute entry difference between two distributions.
inline double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) return 1.0;
    double m = 0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

// Phase-insensitive pure-state mismatch: 1 - |<a|b>|.
inline double state_mismatch(const StateVector& a, const StateVector& b) {
    if (a.dim() != b.dim()) return 1.0;
    std::complex<double> ip = 0;
    for (std::size_t i = 0; i < a.dim(); ++i) ip += std::conj(a.amp[i]) * b.amp[i];
    return 1.0 - std::abs(ip);
}

}  // namespace mbdqc::testutil
