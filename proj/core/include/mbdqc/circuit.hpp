#pragma once

#include <string>
#include <vector>

#include "mbdqc/pauli.hpp"

namespace mbdqc {

enum class GateKind : uint8_t { H, S, CNOT, SWAP, X, Y, Z };

const char* gate_name(GateKind g);
GateKind gate_from_name(const std::string& name);

// Qubit indices are 0-based internally; error messages also carry the
// 1-based wire label used in protocol descriptions.
struct CliffordGate {
    GateKind kind;
    int a = 0;       // sole target, or CNOT control / first SWAP wire
    int b = -1;      // CNOT target / second SWAP wire, -1 for 1-qubit gates

    bool two_qubit() const { return kind == GateKind::CNOT || kind == GateKind::SWAP; }
    std::string str() const;
};

CliffordGate gate1(GateKind kind, int q);
CliffordGate gate2(GateKind kind, int a, int b);

struct CliffordCircuit {
    int k = 0;
    std::vector<CliffordGate> gates;

    CliffordCircuit() = default;
    explicit CliffordCircuit(int k_) : k(k_) {}

    void append(const CliffordGate& g);
    void append(const CliffordCircuit& other);  // same width
    void validate() const;
};

// Inverse circuit: gates reversed, each gate inverted (S^-1 = S S S; all
// other generators are self-inverse).
CliffordCircuit inverse(const CliffordCircuit& c);

// Conjugation action of a single gate on a Pauli string, p -> U p U^dag,
// applied in place with exact phase tracking.
void conjugate_by_gate(PauliString& p, const CliffordGate& g);

// Magic-state-injection gadget for injection index i >= 1 on an n-wire data
// register: CNOT(control = ancilla wire n+i-1, target = data wire n-1)
// followed by SWAP(n+i-1, n-1), as a circuit on n+i qubits. The ancilla is
// the CNOT control; the data wire (where the injected gate lands) is the
// target.
CliffordCircuit injection_gadget(int i, int n);

// Clifford structure: t+1 layers on n data wires; layer i runs before the
// i-th injection.
struct CliffordStructure {
    int n = 0;
    int t = 0;
    std::vector<CliffordCircuit> layers;  // size t+1, each with k = n

    CliffordStructure() = default;
    CliffordStructure(int n_, int t_) : n(n_), t(t_), layers(t_ + 1, CliffordCircuit(n_)) {}

    int total_wires() const { return n + t; }
    void validate() const;
};

// The full magic-free Clifford G = C_{t+1} . F_t . C_t ... F_1 . C_1 as a
// flat gate list on n+t wires (layers extended by identity on ancillas).
CliffordCircuit flatten_structure(const CliffordStructure& s);

}  // namespace mbdqc
