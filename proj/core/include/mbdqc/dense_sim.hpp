#pragma once

#include <Eigen/Dense>
#include <complex>
#include <functional>
#include <random>
#include <vector>

#include "mbdqc/circuit.hpp"
#include "mbdqc/pauli.hpp"

namespace mbdqc {

// Hard caps for the dense backend. 2^14 complex doubles is ~256 KiB per
// statevector; density matrices square that, and secret-enumeration loops
// multiply it again, hence the tighter limits.
inline constexpr int kDenseStateCap = 14;
inline constexpr int kDenseDensityCap = 6;
inline constexpr int kSecretBitCap = 24;

// Rotation angle restricted to multiples of pi/2 (Z(theta) with theta in
// {0, pi/2, pi, 3pi/2}). The T gate is deliberately a separate named gate so
// the stabilizer/non-stabilizer boundary stays visible in call sites.
struct Angle {
    int quarter_turns = 0;

    Angle() = default;
    explicit Angle(int q);
    std::complex<double> phase_factor() const;  // i^quarter_turns
    bool operator==(const Angle&) const = default;
};

// Dense complex statevector over k qubits. Wire 0 is the most significant
// index bit: basis state |b_0 b_1 ... b_{k-1}> lives at index
// b_0*2^{k-1} + ... + b_{k-1}.
struct StateVector {
    int k = 0;
    std::vector<std::complex<double>> amp;

    StateVector() = default;
    explicit StateVector(int k_);

    std::size_t dim() const { return amp.size(); }
    double norm_sq() const;
    void validate() const;  // norm within 1e-9 of 1
};

inline int bit_of(std::size_t index, int q, int k) {
    return static_cast<int>((index >> (k - 1 - q)) & 1u);
}

struct DensityMatrix {
    int k = 0;
    Eigen::MatrixXcd m;

    DensityMatrix() = default;
    explicit DensityMatrix(int k_);

    // Hermitian and unit-trace within 1e-9; PSD within 1e-7 (eigenvalue
    // check, only run at k <= 4 where it is cheap).
    void validate() const;
};

StateVector prepare(const std::vector<StateLabel>& labels);

StateVector apply_gate(const StateVector& psi, const CliffordGate& g);
StateVector apply_t(const StateVector& psi, int q, bool dagger = false);
StateVector apply_zrot(const StateVector& psi, int q, Angle angle, bool dagger = false);
StateVector apply_circuit(const StateVector& psi, const CliffordCircuit& c);
StateVector apply_pauli(const StateVector& psi, const PauliString& p);

double measure_prob_one(const StateVector& psi, int q);
StateVector collapse(const StateVector& psi, int q, int outcome);
std::pair<int, StateVector> measure(const StateVector& psi, int q, std::mt19937_64& rng);

std::vector<double> z_distribution(const StateVector& psi);

// Tensor product; b's wires are appended after a's (less significant bits).
StateVector tensor(const StateVector& a, const StateVector& b);

// Remove wire q, which must be exactly collapsed to |bit> (all amplitudes
// with the opposite bit vanish).
StateVector drop_collapsed_wire(const StateVector& psi, int q, int bit);

DensityMatrix density_of(const StateVector& psi);
double trace_distance(const DensityMatrix& m1, const DensityMatrix& m2);

// Exact uniform average over key bits (a, r each key_qubits long) and angle
// secrets (theta_count angles, four choices each). The builder may collapse
// or extend wires but every invocation must return the same dimension.
// Enumeration size is 2^(2*key_qubits + 2*theta_count), capped at 2^24.
DensityMatrix key_averaged_view(
    int key_qubits, int theta_count,
    const std::function<DensityMatrix(const std::vector<uint8_t>& a,
                                      const std::vector<uint8_t>& r,
                                      const std::vector<Angle>& thetas)>& builder);

// Matrix oracles used by tests and by the deviation-reduction analysis.
Eigen::MatrixXcd gate_matrix(const CliffordGate& g, int k);
Eigen::MatrixXcd pauli_matrix(const PauliString& p);
Eigen::MatrixXcd unitary_of_circuit(const CliffordCircuit& c);

// Apply a dense unitary acting on the listed wires (given in order: wires[0]
// is the most significant qubit of U's own index space) to the full register.
StateVector apply_unitary(const StateVector& psi, const Eigen::MatrixXcd& u,
                          const std::vector<int>& wires);

// Sum over all 4^k phaseless Pauli strings Q of Q e1 Q . rho . Q e2^dag Q.
// Vanishes when e1 != e2 modulo phase; equals 4^k e1 rho e1^dag otherwise.
DensityMatrix pauli_twirl_check(const PauliString& e1, const PauliString& e2,
                                const DensityMatrix& rho);

// Haar-distributed dim x dim unitary (QR of a complex Gaussian matrix with
// the R diagonal phases divided out).
Eigen::MatrixXcd random_unitary(int dim, std::mt19937_64& rng);

}  // namespace mbdqc
