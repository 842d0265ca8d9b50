#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace mbdqc {

enum class Axis : uint8_t { X, Y, Z };

// One of the six single-qubit stabilizer states, named by its stabilizer:
// e.g. {Axis::Z, +1} is |0>, {Axis::X, -1} is |->.
struct SinglePauliLabel {
    Axis axis = Axis::Z;
    int sign = +1;  // +1 or -1

    std::string str() const;
    static SinglePauliLabel parse(const std::string& s);
    bool operator==(const SinglePauliLabel&) const = default;
};

// A single-qubit preparation: one of the six stabilizer states, or the
// magic state |T> = T|+>. This is also the injection alphabet of the
// delegation protocols.
struct StateLabel {
    bool is_magic = false;
    SinglePauliLabel stab{};  // meaningful when !is_magic

    static StateLabel magic() { return StateLabel{true, {}}; }
    static StateLabel of(SinglePauliLabel l) { return StateLabel{false, l}; }
    static StateLabel of(Axis axis, int sign) { return StateLabel{false, {axis, sign}}; }

    std::string str() const;
    // Accepts "T", the six signed labels, and computational-basis aliases
    // "0" (= +Z) and "1" (= -Z).
    static StateLabel parse(const std::string& s);
    bool operator==(const StateLabel&) const = default;
};

// k-qubit Pauli operator in the symplectic bitstring representation:
//
//   operator = i^phase * prod_j X_j^{x[j]} Z_j^{z[j]}
//
// The factor at qubit j is read off (x[j], z[j]): (0,0)=I, (1,0)=X,
// (0,1)=Z, (1,1)=Y (as the operator XZ = -iY; the i of Y = iXZ lives in
// `phase`). Global phase is tracked exactly mod 4: decryption never needs
// it, but the twirl and conjugation oracles do.
struct PauliString {
    int k = 0;
    std::vector<uint8_t> x;
    std::vector<uint8_t> z;
    int phase = 0;  // exponent of i, mod 4

    PauliString() = default;
    explicit PauliString(int k_) : k(k_), x(k_, 0), z(k_, 0) {}

    static PauliString identity(int k) { return PauliString(k); }
    // Single-qubit X/Y/Z embedded at qubit q of k wires, with sign +1/-1.
    static PauliString single(int k, int q, Axis axis, int sign = +1);
    // Hermitian Pauli from per-qubit factors 'I','X','Y','Z' and a +/-1 sign.
    static PauliString from_axes(const std::string& axes, int sign = +1);

    char factor_char(int i) const;   // 'I','X','Y','Z'
    bool is_identity_bits() const;   // all-zero bit vectors (any phase)

    // Number of qubits with factor Y, i.e. x[j]=z[j]=1.
    int y_count() const;
    // True iff the operator is +/-1 times a Hermitian Pauli tensor
    // (phase == y_count mod 2). Stabilizer generators must satisfy this.
    bool is_hermitian_sign() const;
    // For Hermitian-sign strings: +1 or -1.
    int sign() const;
    PauliString negated() const;

    bool operator==(const PauliString&) const = default;

    // Compact form "+XIZY", "-Y", "+iXZ" (prefix is the Hermitian-tensor
    // sign i^e with Y factors printed as Y).
    std::string str() const;
    static PauliString parse(const std::string& s);
};

// Group product p*q with exact phase accumulation.
PauliString multiply(const PauliString& p, const PauliString& q);

// Symplectic inner product test: true iff [p, q] = 0.
bool commutes(const PauliString& p, const PauliString& q);

// A deviation is harmful iff some factor is X or Y (it can flip a
// computational-basis outcome); Z/I-only deviations commute with all
// Z-measurements.
bool is_harmful(const PauliString& e);

// Tensor factor at qubit i ignoring sign/phase.
Axis axis_at(const PauliString& p, int i);  // precondition: factor is not I
char factor_at(const PauliString& p, int i);

// All 4^k phase-0 strings, qubit 0 most significant, per-qubit order
// I, X, Z, Y (the bit encoding read as a 2-bit code).
std::vector<PauliString> enumerate_paulis(int k, bool include_identity = true);

// "i^m X:bits Z:bits" raw dump for logs.
std::string raw_string(const PauliString& p);

}  // namespace mbdqc
