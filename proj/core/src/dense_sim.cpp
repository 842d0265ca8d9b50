#include "mbdqc/dense_sim.hpp"

#include <Eigen/Eigenvalues>
#include <bit>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "mbdqc/rng.hpp"

namespace mbdqc {

namespace {

using cd = std::complex<double>;
constexpr cd kI{0.0, 1.0};

}  // namespace

Angle::Angle(int q) : quarter_turns(((q % 4) + 4) % 4) {}

std::complex<double> Angle::phase_factor() const {
    static const cd table[4] = {cd{1, 0}, cd{0, 1}, cd{-1, 0}, cd{0, -1}};
    return table[quarter_turns];
}

StateVector::StateVector(int k_) : k(k_) {
    if (k < 0 || k > kDenseStateCap)
        throw std::invalid_argument("statevector width out of range: " + std::to_string(k));
    amp.assign(std::size_t{1} << k, cd{0, 0});
    amp[0] = cd{1, 0};
}

double StateVector::norm_sq() const {
    double s = 0;
    for (const auto& a : amp) s += std::norm(a);
    return s;
}

void StateVector::validate() const {
    if (amp.size() != (std::size_t{1} << k))
        throw std::runtime_error("statevector length does not match qubit count");
    if (std::abs(norm_sq() - 1.0) > 1e-9)
        throw std::runtime_error("statevector norm drifted from 1");
}

DensityMatrix::DensityMatrix(int k_) : k(k_) {
    if (k < 0 || k > kDenseDensityCap)
        throw std::invalid_argument("density matrix width out of range: " + std::to_string(k));
    const auto d = static_cast<Eigen::Index>(std::size_t{1} << k);
    m = Eigen::MatrixXcd::Zero(d, d);
}

void DensityMatrix::validate() const {
    const auto d = static_cast<Eigen::Index>(std::size_t{1} << k);
    if (m.rows() != d || m.cols() != d)
        throw std::runtime_error("density matrix dimension does not match qubit count");
    if ((m - m.adjoint()).cwiseAbs().maxCoeff() > 1e-9)
        throw std::runtime_error("density matrix is not Hermitian");
    if (std::abs(m.trace().real() - 1.0) > 1e-9 || std::abs(m.trace().imag()) > 1e-9)
        throw std::runtime_error("density matrix trace is not 1");
    if (k <= 4) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(m, Eigen::EigenvaluesOnly);
        if (es.eigenvalues().minCoeff() < -1e-7)
            throw std::runtime_error("density matrix has a negative eigenvalue");
    }
}

StateVector prepare(const std::vector<StateLabel>& labels) {
    const int k = static_cast<int>(labels.size());
    if (k > kDenseStateCap)
        throw std::invalid_argument("dense backend capped at " +
                                    std::to_string(kDenseStateCap) + " qubits");
    StateVector psi(k);
    const double s = 1.0 / std::sqrt(2.0);
    for (int q = 0; q < k; ++q) {
        cd a0, a1;
        const StateLabel& l = labels[q];
        if (l.is_magic) {
            a0 = cd{s, 0};
            a1 = std::polar(s, std::numbers::pi / 4);
        } else {
            const double sg = l.stab.sign;
            switch (l.stab.axis) {
                case Axis::Z:
                    a0 = cd{l.stab.sign > 0 ? 1.0 : 0.0, 0};
                    a1 = cd{l.stab.sign > 0 ? 0.0 : 1.0, 0};
                    break;
                case Axis::X:
                    a0 = cd{s, 0};
                    a1 = cd{sg * s, 0};
                    break;
                case Axis::Y:
                    a0 = cd{s, 0};
                    a1 = kI * sg * s;
                    break;
                default:
                    throw std::invalid_argument("bad state label");
            }
        }
        // Kronecker-extend in place: wire q becomes the next-less-significant
        // index bit of every existing amplitude.
        const std::size_t half = std::size_t{1} << q;
        for (std::size_t i = half; i-- > 0;) {
            const cd base = psi.amp[i];
            psi.amp[2 * i] = base * a0;
            psi.amp[2 * i + 1] = base * a1;
        }
    }
    return psi;
}

namespace {

void check_wire(const StateVector& psi, int q) {
    if (q < 0 || q >= psi.k)
        throw std::invalid_argument("qubit index " + std::to_string(q) +
                                    " out of range for " + std::to_string(psi.k) + " wires");
}

// Visit amplitude pairs (i0, i1) differing only in wire q's bit.
template <typename F>
void for_pairs(const StateVector& psi, int q, F&& f) {
    const std::size_t stride = std::size_t{1} << (psi.k - 1 - q);
    const std::size_t dim = psi.dim();
    for (std::size_t base = 0; base < dim; base += 2 * stride)
        for (std::size_t off = 0; off < stride; ++off) f(base + off, base + off + stride);
}

}  // namespace

StateVector apply_gate(const StateVector& psi, const CliffordGate& g) {
    check_wire(psi, g.a);
    if (g.two_qubit()) check_wire(psi, g.b);
    StateVector out = psi;
    const double s = 1.0 / std::sqrt(2.0);
    switch (g.kind) {
        case GateKind::H:
            for_pairs(out, g.a, [&](std::size_t i0, std::size_t i1) {
                const cd a = out.amp[i0], b = out.amp[i1];
                out.amp[i0] = s * (a + b);
                out.amp[i1] = s * (a - b);
            });
            break;
        case GateKind::S:
            for_pairs(out, g.a, [&](std::size_t, std::size_t i1) { out.amp[i1] *= kI; });
            break;
        case GateKind::X:
            for_pairs(out, g.a, [&](std::size_t i0, std::size_t i1) {
                std::swap(out.amp[i0], out.amp[i1]);
            });
            break;
        case GateKind::Y:
            for_pairs(out, g.a, [&](std::size_t i0, std::size_t i1) {
                const cd a = out.amp[i0];
                out.amp[i0] = -kI * out.amp[i1];
                out.amp[i1] = kI * a;
            });
            break;
        case GateKind::Z:
            for_pairs(out, g.a, [&](std::size_t, std::size_t i1) { out.amp[i1] = -out.amp[i1]; });
            break;
        case GateKind::CNOT: {
            const std::size_t cm = std::size_t{1} << (out.k - 1 - g.a);
            const std::size_t tm = std::size_t{1} << (out.k - 1 - g.b);
            for (std::size_t i = 0; i < out.dim(); ++i)
                if ((i & cm) && !(i & tm)) std::swap(out.amp[i], out.amp[i | tm]);
            break;
        }
        case GateKind::SWAP: {
            const std::size_t am = std::size_t{1} << (out.k - 1 - g.a);
            const std::size_t bm = std::size_t{1} << (out.k - 1 - g.b);
            for (std::size_t i = 0; i < out.dim(); ++i)
                if ((i & am) && !(i & bm)) std::swap(out.amp[i], out.amp[(i ^ am) | bm]);
            break;
        }
        default:
            throw std::invalid_argument("unknown gate kind");
    }
    return out;
}

StateVector apply_t(const StateVector& psi, int q, bool dagger) {
    check_wire(psi, q);
    StateVector out = psi;
    const cd ph = std::polar(1.0, (dagger ? -1.0 : 1.0) * std::numbers::pi / 4);
    for_pairs(out, q, [&](std::size_t, std::size_t i1) { out.amp[i1] *= ph; });
    return out;
}

StateVector apply_zrot(const StateVector& psi, int q, Angle angle, bool dagger) {
    check_wire(psi, q);
    StateVector out = psi;
    cd ph = angle.phase_factor();
    if (dagger) ph = std::conj(ph);
    for_pairs(out, q, [&](std::size_t, std::size_t i1) { out.amp[i1] *= ph; });
    return out;
}

StateVector apply_circuit(const StateVector& psi, const CliffordCircuit& c) {
    if (c.k != psi.k)
        throw std::invalid_argument("circuit width does not match statevector");
    StateVector out = psi;
    for (const auto& g : c.gates) out = apply_gate(out, g);
    return out;
}

StateVector apply_pauli(const StateVector& psi, const PauliString& p) {
    if (p.k != psi.k)
        throw std::invalid_argument("pauli width does not match statevector");
    StateVector out = psi;
    for (int q = 0; q < p.k; ++q) {
        // X^x Z^z written with Z acting first.
        if (p.z[q]) out = apply_gate(out, gate1(GateKind::Z, q));
        if (p.x[q]) out = apply_gate(out, gate1(GateKind::X, q));
    }
    const cd ph = Angle(p.phase).phase_factor();
    if (ph != cd{1, 0})
        for (auto& a : out.amp) a *= ph;
    return out;
}

double measure_prob_one(const StateVector& psi, int q) {
    check_wire(psi, q);
    double p1 = 0;
    for (std::size_t i = 0; i < psi.dim(); ++i)
        if (bit_of(i, q, psi.k)) p1 += std::norm(psi.amp[i]);
    return p1;
}

StateVector collapse(const StateVector& psi, int q, int outcome) {
    check_wire(psi, q);
    StateVector out = psi;
    double kept = 0;
    for (std::size_t i = 0; i < out.dim(); ++i) {
        if (bit_of(i, q, out.k) != outcome)
            out.amp[i] = cd{0, 0};
        else
            kept += std::norm(out.amp[i]);
    }
    if (kept < 1e-12)
        throw std::runtime_error("collapse onto an outcome of probability ~0");
    const double scale = 1.0 / std::sqrt(kept);
    for (auto& a : out.amp) a *= scale;
    return out;
}

std::pair<int, StateVector> measure(const StateVector& psi, int q, std::mt19937_64& rng) {
    const double p1 = measure_prob_one(psi, q);
    const int outcome = rand_double(rng) < p1 ? 1 : 0;
    return {outcome, collapse(psi, q, outcome)};
}

std::vector<double> z_distribution(const StateVector& psi) {
    std::vector<double> out(psi.dim());
    for (std::size_t i = 0; i < psi.dim(); ++i) out[i] = std::norm(psi.amp[i]);
    return out;
}

StateVector tensor(const StateVector& a, const StateVector& b) {
    if (a.k + b.k > kDenseStateCap)
        throw std::invalid_argument("tensor product exceeds dense cap");
    StateVector out(a.k + b.k);
    for (std::size_t i = 0; i < a.dim(); ++i)
        for (std::size_t j = 0; j < b.dim(); ++j)
            out.amp[(i << b.k) | j] = a.amp[i] * b.amp[j];
    return out;
}

StateVector drop_collapsed_wire(const StateVector& psi, int q, int bit) {
    check_wire(psi, q);
    StateVector out(psi.k - 1);
    const std::size_t mask = std::size_t{1} << (psi.k - 1 - q);
    const std::size_t low = mask - 1;
    double dropped = 0;
    for (std::size_t i = 0; i < psi.dim(); ++i) {
        if (bit_of(i, q, psi.k) != bit) {
            dropped += std::norm(psi.amp[i]);
            continue;
        }
        out.amp[((i >> 1) & ~low) | (i & low)] = psi.amp[i];
    }
    if (dropped > 1e-18)
        throw std::invalid_argument("wire is not collapsed to the stated outcome");
    return out;
}

DensityMatrix density_of(const StateVector& psi) {
    if (psi.k > kDenseDensityCap)
        throw std::invalid_argument("density matrices capped at " +
                                    std::to_string(kDenseDensityCap) + " qubits");
    DensityMatrix rho(psi.k);
    const auto d = static_cast<Eigen::Index>(psi.dim());
    Eigen::VectorXcd v(d);
    for (Eigen::Index i = 0; i < d; ++i) v(i) = psi.amp[i];
    rho.m = v * v.adjoint();
    return rho;
}

double trace_distance(const DensityMatrix& m1, const DensityMatrix& m2) {
    if (m1.k != m2.k)
        throw std::invalid_argument("trace distance between different widths");
    Eigen::MatrixXcd diff = m1.m - m2.m;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(diff, Eigen::EigenvaluesOnly);
    return 0.5 * es.eigenvalues().cwiseAbs().sum();
}

DensityMatrix key_averaged_view(
    int key_qubits, int theta_count,
    const std::function<DensityMatrix(const std::vector<uint8_t>&,
                                      const std::vector<uint8_t>&,
                                      const std::vector<Angle>&)>& builder) {
    if (key_qubits < 0 || theta_count < 0)
        throw std::invalid_argument("negative secret counts");
    const int bits = 2 * key_qubits + 2 * theta_count;
    if (bits > kSecretBitCap)
        throw std::invalid_argument("secret enumeration needs " + std::to_string(bits) +
                                    " bits, cap is " + std::to_string(kSecretBitCap));
    const std::uint64_t total = std::uint64_t{1} << bits;
    DensityMatrix acc;
    bool first = true;
    std::vector<uint8_t> a(key_qubits), r(key_qubits);
    std::vector<Angle> thetas(theta_count);
    for (std::uint64_t code = 0; code < total; ++code) {
        std::uint64_t c = code;
        for (int i = 0; i < key_qubits; ++i, c >>= 1) a[i] = c & 1;
        for (int i = 0; i < key_qubits; ++i, c >>= 1) r[i] = c & 1;
        for (int i = 0; i < theta_count; ++i, c >>= 2) thetas[i] = Angle(static_cast<int>(c & 3));
        DensityMatrix term = builder(a, r, thetas);
        if (first) {
            acc = std::move(term);
            first = false;
        } else {
            if (term.k != acc.k)
                throw std::runtime_error("builder returned inconsistent dimensions");
            acc.m += term.m;
        }
    }
    acc.m /= static_cast<double>(total);
    return acc;
}

Eigen::MatrixXcd gate_matrix(const CliffordGate& g, int k) {
    CliffordCircuit c(k);
    c.append(g);
    return unitary_of_circuit(c);
}

Eigen::MatrixXcd pauli_matrix(const PauliString& p) {
    if (p.k > kDenseDensityCap + 2)
        throw std::invalid_argument("pauli matrix width too large");
    const auto d = static_cast<Eigen::Index>(std::size_t{1} << p.k);
    // Row r has a single nonzero column r ^ x; its value is the phase
    // i^p.phase * prod_q (-1)^{z_q * bit_q(r)} picked up from X^x Z^z.
    Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(d, d);
    std::size_t xmask = 0, zmask = 0;
    for (int q = 0; q < p.k; ++q) {
        if (p.x[q]) xmask |= std::size_t{1} << (p.k - 1 - q);
        if (p.z[q]) zmask |= std::size_t{1} << (p.k - 1 - q);
    }
    const cd global = Angle(p.phase).phase_factor();
    for (std::size_t col = 0; col < static_cast<std::size_t>(d); ++col) {
        const int zbits = std::popcount(col & zmask);
        m(static_cast<Eigen::Index>(col ^ xmask), static_cast<Eigen::Index>(col)) =
            global * (zbits % 2 ? -1.0 : 1.0);
    }
    return m;
}

Eigen::MatrixXcd unitary_of_circuit(const CliffordCircuit& c) {
    if (c.k > kDenseDensityCap + 2)
        throw std::invalid_argument("circuit unitary width too large");
    const auto d = static_cast<Eigen::Index>(std::size_t{1} << c.k);
    Eigen::MatrixXcd u(d, d);
    // Columns are the images of basis states.
    for (Eigen::Index col = 0; col < d; ++col) {
        StateVector e(c.k);
        e.amp[0] = cd{0, 0};
        e.amp[static_cast<std::size_t>(col)] = cd{1, 0};
        const StateVector img = apply_circuit(e, c);
        for (Eigen::Index row = 0; row < d; ++row) u(row, col) = img.amp[row];
    }
    return u;
}

StateVector apply_unitary(const StateVector& psi, const Eigen::MatrixXcd& u,
                          const std::vector<int>& wires) {
    const int w = static_cast<int>(wires.size());
    const auto ud = static_cast<Eigen::Index>(std::size_t{1} << w);
    if (u.rows() != ud || u.cols() != ud)
        throw std::invalid_argument("unitary dimension does not match wire count");
    for (int q : wires) check_wire(psi, q);

    StateVector out = psi;
    const std::size_t dim = psi.dim();
    // For each assignment of the untouched wires, gather the 2^w amplitudes,
    // multiply, scatter back.
    std::vector<std::size_t> masks(w);
    for (int j = 0; j < w; ++j) masks[j] = std::size_t{1} << (psi.k - 1 - wires[j]);
    std::size_t touched = 0;
    for (auto m : masks) touched |= m;

    std::vector<std::size_t> offsets(std::size_t{1} << w, 0);
    for (std::size_t sub = 0; sub < offsets.size(); ++sub)
        for (int j = 0; j < w; ++j)
            if ((sub >> (w - 1 - j)) & 1) offsets[sub] |= masks[j];

    Eigen::VectorXcd block(ud);
    for (std::size_t base = 0; base < dim; ++base) {
        if (base & touched) continue;
        for (Eigen::Index s = 0; s < ud; ++s)
            block(s) = out.amp[base | offsets[static_cast<std::size_t>(s)]];
        Eigen::VectorXcd res = u * block;
        for (Eigen::Index s = 0; s < ud; ++s)
            out.amp[base | offsets[static_cast<std::size_t>(s)]] = res(s);
    }
    return out;
}

DensityMatrix pauli_twirl_check(const PauliString& e1, const PauliString& e2,
                                const DensityMatrix& rho) {
    if (e1.k != rho.k || e2.k != rho.k)
        throw std::invalid_argument("twirl operands must share width");
    if (rho.k > 3)
        throw std::invalid_argument("twirl check capped at 3 qubits");
    const Eigen::MatrixXcd me1 = pauli_matrix(e1);
    const Eigen::MatrixXcd me2 = pauli_matrix(e2);
    DensityMatrix out(rho.k);
    for (const PauliString& q : enumerate_paulis(rho.k)) {
        const Eigen::MatrixXcd mq = pauli_matrix(q);
        // Phaseless Paulis are Hermitian and self-inverse, so Q^dag = Q.
        out.m += (mq * me1 * mq) * rho.m * (mq * me2.adjoint() * mq);
    }
    return out;
}

Eigen::MatrixXcd random_unitary(int dim, std::mt19937_64& rng) {
    if (dim < 1) throw std::invalid_argument("unitary dimension must be positive");
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::MatrixXcd g(dim, dim);
    for (int r = 0; r < dim; ++r)
        for (int c = 0; c < dim; ++c) g(r, c) = std::complex<double>(gauss(rng), gauss(rng));
    Eigen::HouseholderQR<Eigen::MatrixXcd> qr(g);
    Eigen::MatrixXcd q = qr.householderQ();
    const Eigen::MatrixXcd r = qr.matrixQR().triangularView<Eigen::Upper>();
    // Fix the phase ambiguity of QR so the result is Haar, not just unitary.
    for (int c = 0; c < dim; ++c) {
        const std::complex<double> d = r(c, c);
        q.col(c) *= std::abs(d) > 0 ? d / std::abs(d) : 1.0;
    }
    return q;
}

}  // namespace mbdqc
