#include "doctest.h"
#include "mbdqc/circuit.hpp"
#include "mbdqc/dense_sim.hpp"
#include "mbdqc/rng.hpp"
#include "mbdqc/tableau.hpp"
#include "test_util.hpp"

using namespace mbdqc;
using mbdqc::testutil::random_circuit;
using mbdqc::testutil::random_structure;

namespace {

PauliString random_pauli(int k, std::mt19937_64& rng) {
    PauliString p(k);
    for (int i = 0; i < k; ++i) {
        p.x[i] = static_cast<uint8_t>(rand_bit(rng));
        p.z[i] = static_cast<uint8_t>(rand_bit(rng));
    }
    p.phase = static_cast<int>(rand_index(rng, 4));
    return p;
}

// || U p U^dag - q || in the dense representation.
double conjugation_residual(const CliffordCircuit& c, const PauliString& p,
                            const PauliString& q) {
    const Eigen::MatrixXcd u = unitary_of_circuit(c);
    return (u * pauli_matrix(p) * u.adjoint() - pauli_matrix(q)).cwiseAbs().maxCoeff();
}

}  // namespace

TEST_SUITE("clifford") {

TEST_CASE("gate names round trip") {
    for (GateKind kind : {GateKind::H, GateKind::S, GateKind::CNOT, GateKind::SWAP,
                          GateKind::X, GateKind::Y, GateKind::Z})
        CHECK(gate_from_name(gate_name(kind)) == kind);
    CHECK_THROWS_AS(gate_from_name("TOFFOLI"), std::invalid_argument);
}

TEST_CASE("known conjugation table") {
    // H: X <-> Z.  S: X -> Y -> -X.  CNOT: X_c -> X_c X_t, Z_t -> Z_c Z_t.
    auto conj = [](const CliffordGate& g, const char* in) {
        PauliString p = PauliString::parse(in);
        conjugate_by_gate(p, g);
        return p.str();
    };
    CHECK(conj(gate1(GateKind::H, 0), "+X") == "+Z");
    CHECK(conj(gate1(GateKind::H, 0), "+Z") == "+X");
    CHECK(conj(gate1(GateKind::H, 0), "+Y") == "-Y");
    CHECK(conj(gate1(GateKind::S, 0), "+X") == "+Y");
    CHECK(conj(gate1(GateKind::S, 0), "+Y") == "-X");
    CHECK(conj(gate1(GateKind::S, 0), "+Z") == "+Z");
    CHECK(conj(gate2(GateKind::CNOT, 0, 1), "+XI") == "+XX");
    CHECK(conj(gate2(GateKind::CNOT, 0, 1), "+IZ") == "+ZZ");
    CHECK(conj(gate2(GateKind::CNOT, 0, 1), "+IX") == "+IX");
    CHECK(conj(gate2(GateKind::CNOT, 0, 1), "+ZI") == "+ZI");
    CHECK(conj(gate2(GateKind::SWAP, 0, 1), "+XZ") == "+ZX");
    CHECK(conj(gate1(GateKind::X, 0), "+Z") == "-Z");
    CHECK(conj(gate1(GateKind::Z, 0), "+X") == "-X");
    CHECK(conj(gate1(GateKind::Y, 0), "+X") == "-X");
    CHECK(conj(gate1(GateKind::Y, 0), "+Y") == "+Y");
}

TEST_CASE("every gate conjugation matches the dense oracle exactly") {
    const CliffordGate gates[] = {gate1(GateKind::H, 0),  gate1(GateKind::S, 1),
                                  gate1(GateKind::X, 0),  gate1(GateKind::Y, 1),
                                  gate1(GateKind::Z, 0),  gate2(GateKind::CNOT, 0, 1),
                                  gate2(GateKind::CNOT, 1, 0), gate2(GateKind::SWAP, 0, 1)};
    for (const CliffordGate& g : gates) {
        CliffordCircuit c(2);
        c.append(g);
        for (const PauliString& base : enumerate_paulis(2))
            for (int phase = 0; phase < 4; ++phase) {
                PauliString p = base;
                p.phase = phase;
                PauliString q = p;
                conjugate_by_gate(q, g);
                CHECK(conjugation_residual(c, p, q) < 1e-12);
            }
    }
}

TEST_CASE("tableau equals gate-by-gate conjugation on random circuits") {
    std::mt19937_64 rng = substream(21, "tableau-vs-gates");
    for (int rep = 0; rep < 40; ++rep) {
        const int k = 1 + static_cast<int>(rand_index(rng, 4));
        const CliffordCircuit c = random_circuit(k, 12, rng);
        const CliffordTableau tab = tableau_from_circuit(c);
        tab.validate();
        const PauliString p = random_pauli(k, rng);
        PauliString seq = p;
        for (const CliffordGate& g : c.gates) conjugate_by_gate(seq, g);
        CHECK(conjugate_pauli(tab, p) == seq);
    }
}

TEST_CASE("tableau conjugation matches the dense oracle") {
    std::mt19937_64 rng = substream(22, "tableau-vs-dense");
    for (int rep = 0; rep < 25; ++rep) {
        const int k = 1 + static_cast<int>(rand_index(rng, 3));
        const CliffordCircuit c = random_circuit(k, 10, rng);
        const PauliString p = random_pauli(k, rng);
        CHECK(conjugation_residual(c, p, conjugate_pauli(tableau_from_circuit(c), p)) <
              1e-12);
    }
}

TEST_CASE("circuit inverse undoes the conjugation") {
    std::mt19937_64 rng = substream(23, "circuit-inverse");
    for (int rep = 0; rep < 30; ++rep) {
        const int k = 1 + static_cast<int>(rand_index(rng, 3));
        CliffordCircuit c = random_circuit(k, 10, rng);
        CliffordCircuit round = c;
        round.append(inverse(c));
        const PauliString p = random_pauli(k, rng);
        CHECK(conjugate_pauli(tableau_from_circuit(round), p) == p);
    }
}

TEST_CASE("tableau inverse and compose are consistent") {
    std::mt19937_64 rng = substream(24, "tableau-inverse");
    for (int rep = 0; rep < 30; ++rep) {
        const int k = 1 + static_cast<int>(rand_index(rng, 3));
        const CliffordTableau tab = tableau_from_circuit(random_circuit(k, 10, rng));
        const CliffordTableau inv = inverse(tab);
        inv.validate();
        const PauliString p = random_pauli(k, rng);
        CHECK(conjugate_pauli(inv, conjugate_pauli(tab, p)) == p);

        const CliffordTableau both = compose(tab, inv);  // tab first, then inv
        CHECK(conjugate_pauli(both, p) == p);
    }
}

TEST_CASE("compose applies first then second") {
    std::mt19937_64 rng = substream(25, "tableau-compose");
    for (int rep = 0; rep < 20; ++rep) {
        const int k = 2;
        const CliffordTableau f = tableau_from_circuit(random_circuit(k, 8, rng));
        const CliffordTableau s = tableau_from_circuit(random_circuit(k, 8, rng));
        const PauliString p = random_pauli(k, rng);
        CHECK(conjugate_pauli(compose(f, s), p) == conjugate_pauli(s, conjugate_pauli(f, p)));
    }
}

TEST_CASE("key updates track pad conjugation with real signs") {
    std::mt19937_64 rng = substream(26, "key-update");
    for (int rep = 0; rep < 40; ++rep) {
        const int k = 1 + static_cast<int>(rand_index(rng, 4));
        const CliffordTableau tab = tableau_from_circuit(random_circuit(k, 10, rng));
        std::vector<uint8_t> a(k), r(k);
        for (int i = 0; i < k; ++i) {
            a[i] = static_cast<uint8_t>(rand_bit(rng));
            r[i] = static_cast<uint8_t>(rand_bit(rng));
        }
        const KeyUpdate up = update_keys(tab, a, r);

        PauliString pad(k);
        pad.x = a;
        pad.z = r;
        const PauliString image = conjugate_pauli(tab, pad);
        CHECK(up.a == image.x);
        CHECK(up.r == image.z);
        CHECK((up.sign == +1 || up.sign == -1));
    }
}

TEST_CASE("injection gadget wiring: ancilla controls, then swaps into place") {
    const CliffordCircuit g = injection_gadget(1, 2);
    CHECK(g.k == 3);
    REQUIRE(g.gates.size() == 2);
    CHECK(g.gates[0].kind == GateKind::CNOT);
    CHECK(g.gates[0].a == 2);  // ancilla wire n+i-1 is the control
    CHECK(g.gates[0].b == 1);  // data wire n-1 is the target
    CHECK(g.gates[1].kind == GateKind::SWAP);
    const CliffordCircuit g2 = injection_gadget(2, 1);
    CHECK(g2.k == 3);
    CHECK(g2.gates[0].a == 2);
    CHECK(g2.gates[0].b == 0);
}

TEST_CASE("structure flattening matches the assembled tableau") {
    std::mt19937_64 rng = substream(27, "structure-flatten");
    for (int rep = 0; rep < 20; ++rep) {
        const int n = 1 + static_cast<int>(rand_index(rng, 3));
        const int t = static_cast<int>(rand_index(rng, 3));
        const CliffordStructure s = random_structure(n, t, 6, rng);
        s.validate();
        const CliffordCircuit flat = flatten_structure(s);
        CHECK(flat.k == n + t);
        const CliffordTableau via_circuit = tableau_from_circuit(flat);
        const CliffordTableau assembled = assemble_G(s);
        const PauliString p = random_pauli(n + t, rng);
        CHECK(conjugate_pauli(via_circuit, p) == conjugate_pauli(assembled, p));
    }
}

TEST_CASE("validation rejects malformed circuits and structures") {
    CHECK_THROWS_AS(gate2(GateKind::CNOT, 1, 1), std::invalid_argument);
    CliffordCircuit c(2);
    c.append(gate1(GateKind::H, 0));
    CHECK_NOTHROW(c.validate());
    c.gates.push_back(CliffordGate{GateKind::H, 5, -1});
    CHECK_THROWS(c.validate());

    CliffordStructure s(2, 1);
    CHECK_NOTHROW(s.validate());
    s.layers.pop_back();
    CHECK_THROWS(s.validate());
}

}  // TEST_SUITE
