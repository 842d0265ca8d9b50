#include "mbdqc/circuit.hpp"

#include <stdexcept>

namespace mbdqc {

const char* gate_name(GateKind g) {
    switch (g) {
        case GateKind::H: return "H";
        case GateKind::S: return "S";
        case GateKind::CNOT: return "CNOT";
        case GateKind::SWAP: return "SWAP";
        case GateKind::X: return "X";
        case GateKind::Y: return "Y";
        case GateKind::Z: return "Z";
    }
    return "?";
}

GateKind gate_from_name(const std::string& name) {
    if (name == "H") return GateKind::H;
    if (name == "S") return GateKind::S;
    if (name == "CNOT" || name == "CX") return GateKind::CNOT;
    if (name == "SWAP") return GateKind::SWAP;
    if (name == "X") return GateKind::X;
    if (name == "Y") return GateKind::Y;
    if (name == "Z") return GateKind::Z;
    throw std::invalid_argument("unknown gate kind '" + name + "'");
}

std::string CliffordGate::str() const {
    std::string s = gate_name(kind);
    s += "(" + std::to_string(a);
    if (two_qubit()) s += "," + std::to_string(b);
    s += ")";
    return s;
}

CliffordGate gate1(GateKind kind, int q) {
    CliffordGate g{kind, q, -1};
    if (g.two_qubit()) throw std::invalid_argument(std::string(gate_name(kind)) + " needs two targets");
    return g;
}

CliffordGate gate2(GateKind kind, int a, int b) {
    CliffordGate g{kind, a, b};
    if (!g.two_qubit()) throw std::invalid_argument(std::string(gate_name(kind)) + " takes one target");
    if (a == b) throw std::invalid_argument(std::string(gate_name(kind)) + " targets must be distinct");
    return g;
}

static void check_index(int q, int k) {
    if (q < 0 || q >= k)
        throw std::out_of_range("gate target " + std::to_string(q) + " out of range for " +
                                std::to_string(k) + " wires (0-based; paper wire " +
                                std::to_string(q + 1) + ")");
}

void CliffordCircuit::append(const CliffordGate& g) {
    check_index(g.a, k);
    if (g.two_qubit()) {
        check_index(g.b, k);
        if (g.a == g.b) throw std::invalid_argument("two-qubit gate with equal targets");
    }
    gates.push_back(g);
}

void CliffordCircuit::append(const CliffordCircuit& other) {
    if (other.k != k) throw std::invalid_argument("appending circuit of different width");
    for (const auto& g : other.gates) gates.push_back(g);
}

void CliffordCircuit::validate() const {
    for (const auto& g : gates) {
        check_index(g.a, k);
        if (g.two_qubit()) {
            check_index(g.b, k);
            if (g.a == g.b) throw std::invalid_argument("two-qubit gate with equal targets");
        }
    }
}

CliffordCircuit inverse(const CliffordCircuit& c) {
    CliffordCircuit inv(c.k);
    for (auto it = c.gates.rbegin(); it != c.gates.rend(); ++it) {
        if (it->kind == GateKind::S) {
            // S^dag = Z S
            inv.gates.push_back(gate1(GateKind::Z, it->a));
            inv.gates.push_back(gate1(GateKind::S, it->a));
        } else {
            inv.gates.push_back(*it);
        }
    }
    return inv;
}

void conjugate_by_gate(PauliString& p, const CliffordGate& g) {
    check_index(g.a, p.k);
    uint8_t& xa = p.x[g.a];
    uint8_t& za = p.z[g.a];
    switch (g.kind) {
        case GateKind::H: {
            p.phase = (p.phase + 2 * (xa & za)) % 4;
            std::swap(xa, za);
            break;
        }
        case GateKind::S: {
            p.phase = (p.phase + xa) % 4;  // X -> Y = iXZ
            za ^= xa;
            break;
        }
        case GateKind::X: {
            p.phase = (p.phase + 2 * za) % 4;
            break;
        }
        case GateKind::Y: {
            p.phase = (p.phase + 2 * (xa ^ za)) % 4;
            break;
        }
        case GateKind::Z: {
            p.phase = (p.phase + 2 * xa) % 4;
            break;
        }
        case GateKind::CNOT: {
            // In the i^e X^x Z^z encoding the X- and Z-part propagation is
            // phase free: every X factor still precedes every Z factor on
            // both wires after substituting X_c -> X_c X_t, Z_t -> Z_c Z_t.
            check_index(g.b, p.k);
            p.x[g.b] ^= xa;
            za ^= p.z[g.b];
            break;
        }
        case GateKind::SWAP: {
            check_index(g.b, p.k);
            std::swap(p.x[g.a], p.x[g.b]);
            std::swap(p.z[g.a], p.z[g.b]);
            break;
        }
    }
}

CliffordCircuit injection_gadget(int i, int n) {
    if (i < 1) throw std::invalid_argument("injection index must be >= 1, got " + std::to_string(i));
    if (n < 1) throw std::invalid_argument("data width must be >= 1");
    CliffordCircuit c(n + i);
    c.append(gate2(GateKind::CNOT, n + i - 1, n - 1));  // ancilla controls, data wire is target
    c.append(gate2(GateKind::SWAP, n + i - 1, n - 1));
    return c;
}

void CliffordStructure::validate() const {
    if (n < 1) throw std::invalid_argument("structure needs n >= 1");
    if (t < 0) throw std::invalid_argument("structure needs t >= 0");
    if (static_cast<int>(layers.size()) != t + 1)
        throw std::invalid_argument("structure with t=" + std::to_string(t) + " needs " +
                                    std::to_string(t + 1) + " layers, got " +
                                    std::to_string(layers.size()));
    for (const auto& layer : layers) {
        if (layer.k != n)
            throw std::invalid_argument("every layer must act on the n=" + std::to_string(n) +
                                        " data wires");
        layer.validate();
    }
}

CliffordCircuit flatten_structure(const CliffordStructure& s) {
    s.validate();
    CliffordCircuit full(s.n + s.t);
    for (int i = 0; i <= s.t; ++i) {
        for (const auto& g : s.layers[i].gates) full.append(g);
        // The gadget uses absolute wire indices (ancilla n+i-1, data n-1), so
        // its gates embed directly into the full-width circuit.
        if (i < s.t)
            for (const auto& g : injection_gadget(i + 1, s.n).gates) full.append(g);
    }
    return full;
}

}  // namespace mbdqc
