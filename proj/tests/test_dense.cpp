#include <cmath>
#include <complex>

#include "doctest.h"
#include "mbdqc/dense_sim.hpp"
#include "mbdqc/rng.hpp"
#include "test_util.hpp"

using namespace mbdqc;
using mbdqc::testutil::max_abs_diff;
using mbdqc::testutil::random_circuit;
using mbdqc::testutil::random_product_input;

namespace {

constexpr std::complex<double> kI{0.0, 1.0};

double vec_mismatch(const StateVector& a, const StateVector& b) {
    return mbdqc::testutil::state_mismatch(a, b);
}

}  // namespace

TEST_SUITE("dense") {

TEST_CASE("single gates match their matrices") {
    std::mt19937_64 rng = substream(41, "gates-vs-matrices");
    const GateKind kinds[] = {GateKind::H, GateKind::S, GateKind::X,
                              GateKind::Y, GateKind::Z};
    for (int rep = 0; rep < 30; ++rep) {
        const int k = 2;
        StateVector psi = prepare(random_product_input(k, rng));
        for (GateKind kind : kinds) {
            const int q = static_cast<int>(rand_index(rng, k));
            const StateVector via_gate = apply_gate(psi, gate1(kind, q));
            const Eigen::MatrixXcd m = gate_matrix(gate1(kind, 0), 1);
            const StateVector via_matrix = apply_unitary(psi, m, {q});
            CHECK(vec_mismatch(via_gate, via_matrix) < 1e-12);
        }
        const StateVector via_gate = apply_gate(psi, gate2(GateKind::CNOT, 1, 0));
        // Control first in the matrix's own wire order.
        const Eigen::MatrixXcd m4 = gate_matrix(gate2(GateKind::CNOT, 0, 1), 2);
        const StateVector via_matrix = apply_unitary(psi, m4, {1, 0});
        CHECK(vec_mismatch(via_gate, via_matrix) < 1e-12);
    }
}

TEST_CASE("hadamard matrix is frozen") {
    const Eigen::MatrixXcd h = gate_matrix(gate1(GateKind::H, 0), 1);
    const double r = 1.0 / std::sqrt(2.0);
    CHECK(std::abs(h(0, 0) - r) < 1e-15);
    CHECK(std::abs(h(0, 1) - r) < 1e-15);
    CHECK(std::abs(h(1, 0) - r) < 1e-15);
    CHECK(std::abs(h(1, 1) + r) < 1e-15);
}

TEST_CASE("t gate on plus state") {
    StateVector psi = prepare({StateLabel::of(Axis::X, +1)});
    psi = apply_t(psi, 0);
    CHECK(std::abs(psi.amp[0] - std::complex<double>(0.7071067811865476, 0.0)) < 1e-15);
    CHECK(std::abs(psi.amp[1] - std::complex<double>(0.5, 0.5)) < 1e-15);

    // T then T-dagger restores the input.
    const StateVector back = apply_t(psi, 0, true);
    CHECK(std::abs(back.amp[0] - back.amp[1]) < 1e-15);
}

TEST_CASE("quarter-turn rotations compose like the integers mod 4") {
    StateVector psi = prepare({StateLabel::of(Axis::X, +1)});
    StateVector turned = psi;
    for (int i = 0; i < 4; ++i) turned = apply_zrot(turned, 0, Angle(1));
    CHECK(vec_mismatch(turned, psi) < 1e-12);

    const StateVector two_turns = apply_zrot(apply_zrot(psi, 0, Angle(3)), 0, Angle(5));
    CHECK(vec_mismatch(two_turns, psi) < 1e-12);

    // Angle(1) is the S gate: a pi/2 rotation about Z.
    const StateVector s1 = apply_zrot(psi, 0, Angle(1));
    const StateVector s2 = apply_gate(psi, gate1(GateKind::S, 0));
    CHECK(vec_mismatch(s1, s2) < 1e-12);

    // ... so its dagger undoes S.
    const StateVector undone = apply_zrot(s2, 0, Angle(1), true);
    CHECK(vec_mismatch(undone, psi) < 1e-12);
}

TEST_CASE("angle phase factors are the powers of i") {
    CHECK(Angle().quarter_turns == 0);
    CHECK(std::abs(Angle(0).phase_factor() - 1.0) < 1e-15);
    CHECK(std::abs(Angle(1).phase_factor() - kI) < 1e-15);
    CHECK(std::abs(Angle(2).phase_factor() + 1.0) < 1e-15);
    CHECK(std::abs(Angle(3).phase_factor() + kI) < 1e-15);
    CHECK(Angle(4).quarter_turns == 0);
    CHECK(Angle(-1).quarter_turns == 3);
}

TEST_CASE("bell state measurement correlations") {
    CliffordCircuit c(2);
    c.append(gate1(GateKind::H, 0));
    c.append(gate2(GateKind::CNOT, 0, 1));
    const StateVector bell = apply_circuit(prepare({StateLabel::parse("0"), StateLabel::parse("0")}), c);

    CHECK(std::abs(measure_prob_one(bell, 0) - 0.5) < 1e-12);
    const StateVector collapsed = collapse(bell, 0, 1);
    CHECK(std::abs(measure_prob_one(collapsed, 1) - 1.0) < 1e-12);

    std::mt19937_64 rng = substream(42, "bell-measure");
    for (int i = 0; i < 40; ++i) {
        auto [bit0, after0] = measure(bell, 0, rng);
        auto [bit1, after1] = measure(after0, 1, rng);
        CHECK(bit0 == bit1);
        (void)after1;
    }
}

TEST_CASE("tensor equals preparing concatenated labels") {
    const auto a = std::vector<StateLabel>{StateLabel::parse("+X"), StateLabel::parse("1")};
    const auto b = std::vector<StateLabel>{StateLabel::parse("-Y")};
    auto both = a;
    both.insert(both.end(), b.begin(), b.end());
    CHECK(vec_mismatch(tensor(prepare(a), prepare(b)), prepare(both)) < 1e-14);
}

TEST_CASE("dropping a collapsed wire inverts tensoring") {
    std::mt19937_64 rng = substream(43, "drop-wire");
    for (int rep = 0; rep < 20; ++rep) {
        const auto labels = random_product_input(3, rng);
        StateVector psi = apply_circuit(prepare(labels), random_circuit(3, 6, rng));
        const int q = static_cast<int>(rand_index(rng, 3));
        const double p1 = measure_prob_one(psi, q);
        const int bit = p1 > 0.5 ? 1 : (p1 < 0.5 ? 0 : static_cast<int>(rand_bit(rng)));
        const StateVector reduced = drop_collapsed_wire(collapse(psi, q, bit), q, bit);
        CHECK(reduced.k == 2);
        CHECK(std::abs(reduced.norm_sq() - 1.0) < 1e-12);
    }

    // Deterministic check: |0>|psi> with wire 0 dropped gives back |psi>.
    const auto inner = std::vector<StateLabel>{StateLabel::parse("+Y")};
    const StateVector joint = tensor(prepare({StateLabel::parse("0")}), prepare(inner));
    const StateVector back = drop_collapsed_wire(joint, 0, 0);
    CHECK(vec_mismatch(back, prepare(inner)) < 1e-14);
}

TEST_CASE("trace distance landmarks") {
    const DensityMatrix zero = density_of(prepare({StateLabel::parse("0")}));
    const DensityMatrix one = density_of(prepare({StateLabel::parse("1")}));
    const DensityMatrix plus = density_of(prepare({StateLabel::parse("+X")}));
    CHECK(trace_distance(zero, zero) < 1e-14);
    CHECK(std::abs(trace_distance(zero, one) - 1.0) < 1e-12);
    CHECK(std::abs(trace_distance(zero, plus) - 0.7071067811865476) < 1e-12);
}

TEST_CASE("pauli twirled channels are diagonal") {
    std::mt19937_64 rng = substream(44, "twirl");
    const DensityMatrix rho = density_of(prepare({StateLabel::parse("+Y")}));
    const auto paulis = enumerate_paulis(1);
    for (const PauliString& e1 : paulis)
        for (const PauliString& e2 : paulis) {
            const Eigen::MatrixXcd got = pauli_twirl_check(e1, e2, rho).m;
            if (e1.str() != e2.str()) {
                CHECK(got.norm() < 1e-12);
            } else {
                const Eigen::MatrixXcd em = pauli_matrix(e1);
                const Eigen::MatrixXcd want = 4.0 * em * rho.m * em.adjoint();
                CHECK((got - want).norm() < 1e-12);
            }
        }
    (void)rng;
}

TEST_CASE("averaging over keys scrambles a one-qubit register to the maximally mixed state") {
    const DensityMatrix avg = key_averaged_view(
        1, 1,
        [](const std::vector<std::uint8_t>& a, const std::vector<std::uint8_t>& r,
           const std::vector<Angle>&) {
            StateVector psi = prepare({StateLabel::parse("0")});
            PauliString pad = PauliString::identity(1);
            pad.x[0] = a[0] != 0;
            pad.z[0] = r[0] != 0;
            return density_of(apply_pauli(psi, pad));
        });
    Eigen::MatrixXcd half = Eigen::MatrixXcd::Identity(2, 2) * 0.5;
    CHECK((avg.m - half).norm() < 1e-12);
}

TEST_CASE("unitary of a circuit reproduces its action") {
    std::mt19937_64 rng = substream(45, "unitary-of-circuit");
    for (int rep = 0; rep < 15; ++rep) {
        const int k = 1 + static_cast<int>(rand_index(rng, 3));
        const CliffordCircuit c = random_circuit(k, 7, rng);
        const auto labels = random_product_input(k, rng);
        const StateVector direct = apply_circuit(prepare(labels), c);
        std::vector<int> wires(k);
        for (int q = 0; q < k; ++q) wires[q] = q;
        const StateVector via_u = apply_unitary(prepare(labels), unitary_of_circuit(c), wires);
        CHECK(vec_mismatch(direct, via_u) < 1e-12);
    }
}

TEST_CASE("random unitaries are unitary and seed-stable") {
    std::mt19937_64 rng = substream(46, "haar");
    for (int dim : {2, 4, 8}) {
        const Eigen::MatrixXcd u = random_unitary(dim, rng);
        const Eigen::MatrixXcd gram = u.adjoint() * u;
        CHECK((gram - Eigen::MatrixXcd::Identity(dim, dim)).norm() < 1e-12);
    }
    std::mt19937_64 r1 = substream(47, "haar-replay");
    std::mt19937_64 r2 = substream(47, "haar-replay");
    CHECK((random_unitary(4, r1) - random_unitary(4, r2)).norm() == 0.0);
    CHECK_THROWS_AS(random_unitary(0, rng), std::invalid_argument);
}

TEST_CASE("validation rejects malformed states") {
    StateVector psi = prepare({StateLabel::parse("0")});
    psi.amp[0] = 2.0;
    CHECK_THROWS_AS(psi.validate(), std::runtime_error);

    DensityMatrix rho = density_of(prepare({StateLabel::parse("0")}));
    rho.m(0, 0) = 0.2;
    CHECK_THROWS_AS(rho.validate(), std::runtime_error);

    CHECK_THROWS_AS(prepare(std::vector<StateLabel>(kDenseStateCap + 1, StateLabel::parse("0"))),
                    std::invalid_argument);
}

TEST_CASE("wire zero is the most significant index bit") {
    // |1>|0>: index with wire 0 set is index 2 of 4.
    const StateVector psi = prepare({StateLabel::parse("1"), StateLabel::parse("0")});
    CHECK(std::abs(psi.amp[2] - 1.0) < 1e-15);
    CHECK(bit_of(2, 0, 2) == 1);
    CHECK(bit_of(2, 1, 2) == 0);
    const auto dist = z_distribution(psi);
    CHECK(std::abs(dist[2] - 1.0) < 1e-15);
}

}  // TEST_SUITE
