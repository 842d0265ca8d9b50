#include "mbdqc/stabilizer_sim.hpp"

#include <stdexcept>

#include "mbdqc/rng.hpp"

namespace mbdqc {

namespace {

// GF(2) rank of the stabilizer rows' (x|z) bit matrix.
int symplectic_rank(const std::vector<PauliString>& rows, int k) {
    std::vector<std::vector<uint8_t>> m;
    m.reserve(rows.size());
    for (const auto& r : rows) {
        std::vector<uint8_t> v(2 * k);
        for (int j = 0; j < k; ++j) {
            v[j] = r.x[j];
            v[k + j] = r.z[j];
        }
        m.push_back(std::move(v));
    }
    int rank = 0;
    for (int col = 0; col < 2 * k && rank < static_cast<int>(m.size()); ++col) {
        int pivot = -1;
        for (int i = rank; i < static_cast<int>(m.size()); ++i)
            if (m[i][col]) {
                pivot = i;
                break;
            }
        if (pivot < 0) continue;
        std::swap(m[rank], m[pivot]);
        for (int i = 0; i < static_cast<int>(m.size()); ++i)
            if (i != rank && m[i][col])
                for (int j = 0; j < 2 * k; ++j) m[i][j] ^= m[rank][j];
        ++rank;
    }
    return rank;
}

}  // namespace

void StabilizerState::validate() const {
    if (static_cast<int>(stab.size()) != k || static_cast<int>(destab.size()) != k)
        throw std::runtime_error("stabilizer tableau must hold k+k rows");
    for (int i = 0; i < k; ++i) {
        if (stab[i].k != k || destab[i].k != k)
            throw std::runtime_error("tableau row width mismatch");
        if (!stab[i].is_hermitian_sign())
            throw std::runtime_error("stabilizer generator with imaginary sign: " +
                                     stab[i].str());
        for (int j = 0; j < k; ++j) {
            if (!commutes(stab[i], stab[j]))
                throw std::runtime_error("stabilizer generators do not commute");
            if (!commutes(destab[i], destab[j]))
                throw std::runtime_error("destabilizer rows do not commute");
            const bool anti = !commutes(destab[i], stab[j]);
            if (anti != (i == j))
                throw std::runtime_error("destabilizer pairing broken");
        }
    }
    if (symplectic_rank(stab, k) != k)
        throw std::runtime_error("stabilizer generators are not independent");
}

StabilizerState prepare_product(const std::vector<SinglePauliLabel>& labels) {
    StabilizerState st;
    st.k = static_cast<int>(labels.size());
    st.destab.reserve(st.k);
    st.stab.reserve(st.k);
    for (int q = 0; q < st.k; ++q) {
        st.stab.push_back(PauliString::single(st.k, q, labels[q].axis, labels[q].sign));
        // Any fixed anticommuting partner works as the destabilizer.
        const Axis partner = labels[q].axis == Axis::X ? Axis::Z : Axis::X;
        st.destab.push_back(PauliString::single(st.k, q, partner, +1));
    }
    return st;
}

StabilizerState apply_clifford(const StabilizerState& st, const CliffordCircuit& c) {
    if (c.k != st.k) throw std::invalid_argument("circuit width does not match state");
    StabilizerState out = st;
    for (const auto& g : c.gates) {
        for (auto& row : out.destab) conjugate_by_gate(row, g);
        for (auto& row : out.stab) conjugate_by_gate(row, g);
    }
    return out;
}

StabilizerState apply_clifford(const StabilizerState& st, const CliffordTableau& t) {
    if (t.k != st.k) throw std::invalid_argument("tableau width does not match state");
    StabilizerState out = st;
    for (auto& row : out.destab) row = conjugate_pauli(t, row);
    for (auto& row : out.stab) row = conjugate_pauli(t, row);
    return out;
}

StabilizerState apply_pauli(const StabilizerState& st, const PauliString& p) {
    if (p.k != st.k) throw std::invalid_argument("pauli width does not match state");
    StabilizerState out = st;
    // p s p^dag = -s exactly when p and s anticommute; bits never change.
    for (auto& row : out.destab)
        if (!commutes(row, p)) row.phase = (row.phase + 2) % 4;
    for (auto& row : out.stab)
        if (!commutes(row, p)) row.phase = (row.phase + 2) % 4;
    return out;
}

namespace {

int check_wire(const StabilizerState& st, int q) {
    if (q < 0 || q >= st.k)
        throw std::invalid_argument("measured qubit " + std::to_string(q) +
                                    " out of range for " + std::to_string(st.k) + " wires");
    return q;
}

// Row index of a stabilizer generator anticommuting with Z_q, or -1 when the
// outcome is deterministic.
int random_pivot(const StabilizerState& st, int q) {
    for (int i = 0; i < st.k; ++i)
        if (st.stab[i].x[q]) return i;
    return -1;
}

int forced_outcome(const StabilizerState& st, int q) {
    // Accumulate the stabilizer group element whose destabilizer syndrome
    // matches Z_q; it must be +/-Z_q and its sign is the outcome.
    PauliString acc = PauliString::identity(st.k);
    for (int i = 0; i < st.k; ++i)
        if (st.destab[i].x[q]) acc = multiply(acc, st.stab[i]);
    const PauliString zq = PauliString::single(st.k, q, Axis::Z, +1);
    if (acc.x != zq.x || acc.z != zq.z)
        throw std::runtime_error("deterministic measurement did not reduce to +/-Z");
    return acc.sign() < 0 ? 1 : 0;
}

}  // namespace

std::optional<int> deterministic_z(const StabilizerState& st, int q) {
    check_wire(st, q);
    if (random_pivot(st, q) >= 0) return std::nullopt;
    return forced_outcome(st, q);
}

StabilizerState collapse_z(const StabilizerState& st, int q, int outcome) {
    check_wire(st, q);
    const int p = random_pivot(st, q);
    if (p < 0) {
        if (forced_outcome(st, q) != outcome)
            throw std::invalid_argument("collapse onto an outcome of probability 0");
        return st;
    }
    StabilizerState out = st;
    const PauliString old = out.stab[p];
    for (int i = 0; i < out.k; ++i) {
        if (i != p && out.stab[i].x[q]) out.stab[i] = multiply(old, out.stab[i]);
        if (out.destab[i].x[q]) out.destab[i] = multiply(old, out.destab[i]);
    }
    out.destab[p] = old;
    out.stab[p] = PauliString::single(out.k, q, Axis::Z, outcome ? -1 : +1);
    return out;
}

MeasureResult measure_z(const StabilizerState& st, int q, std::mt19937_64& rng) {
    check_wire(st, q);
    if (auto forced = deterministic_z(st, q))
        return {*forced, true, st};
    const int outcome = rand_bit(rng);
    return {outcome, false, collapse_z(st, q, outcome)};
}

bool is_stabilized_by(const StabilizerState& st, const PauliString& p) {
    if (p.k != st.k) throw std::invalid_argument("pauli width does not match state");
    // The destabilizer syndrome singles out the only group element that
    // could equal p; compare bits and phase exactly.
    PauliString acc = PauliString::identity(st.k);
    for (int i = 0; i < st.k; ++i)
        if (!commutes(p, st.destab[i])) acc = multiply(acc, st.stab[i]);
    return acc == p;
}

StabilizerState extend_with(const StabilizerState& st, SinglePauliLabel label) {
    StabilizerState out;
    out.k = st.k + 1;
    out.destab.reserve(out.k);
    out.stab.reserve(out.k);
    for (int i = 0; i < st.k; ++i) {
        PauliString d = st.destab[i], s = st.stab[i];
        d.k = s.k = out.k;
        d.x.push_back(0);
        d.z.push_back(0);
        s.x.push_back(0);
        s.z.push_back(0);
        out.destab.push_back(std::move(d));
        out.stab.push_back(std::move(s));
    }
    out.stab.push_back(PauliString::single(out.k, st.k, label.axis, label.sign));
    const Axis partner = label.axis == Axis::X ? Axis::Z : Axis::X;
    out.destab.push_back(PauliString::single(out.k, st.k, partner, +1));
    return out;
}

namespace {

void z_rec(const StabilizerState& st, int q, double prob, std::size_t prefix,
           std::vector<double>& out) {
    if (q == st.k) {
        out[prefix] += prob;
        return;
    }
    if (auto forced = deterministic_z(st, q)) {
        z_rec(collapse_z(st, q, *forced), q + 1, prob, (prefix << 1) | *forced, out);
        return;
    }
    for (int b = 0; b < 2; ++b)
        z_rec(collapse_z(st, q, b), q + 1, prob / 2, (prefix << 1) | b, out);
}

}  // namespace

std::vector<double> z_distribution_exact(const StabilizerState& st) {
    if (st.k > 12)
        throw std::invalid_argument("exact branch enumeration capped at 12 qubits");
    std::vector<double> out(std::size_t{1} << st.k, 0.0);
    z_rec(st, 0, 1.0, 0, out);
    return out;
}

std::string dump(const StabilizerState& st) {
    std::string s;
    for (int i = 0; i < st.k; ++i)
        s += "destab[" + std::to_string(i) + "] = " + st.destab[i].str() + "\n";
    for (int i = 0; i < st.k; ++i)
        s += "stab[" + std::to_string(i) + "]   = " + st.stab[i].str() + "\n";
    return s;
}

}  // namespace mbdqc
