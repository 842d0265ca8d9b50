#include "mbdqc/pauli.hpp"

#include <stdexcept>

namespace mbdqc {

std::string SinglePauliLabel::str() const {
    std::string s(1, sign >= 0 ? '+' : '-');
    s += (axis == Axis::X ? 'X' : axis == Axis::Y ? 'Y' : 'Z');
    return s;
}

SinglePauliLabel SinglePauliLabel::parse(const std::string& s) {
    if (s.size() != 2 || (s[0] != '+' && s[0] != '-'))
        throw std::invalid_argument("bad single-qubit label '" + s + "' (expect e.g. +Z, -X)");
    Axis ax;
    switch (s[1]) {
        case 'X': ax = Axis::X; break;
        case 'Y': ax = Axis::Y; break;
        case 'Z': ax = Axis::Z; break;
        default: throw std::invalid_argument("bad axis in label '" + s + "'");
    }
    return {ax, s[0] == '+' ? +1 : -1};
}

std::string StateLabel::str() const { return is_magic ? "T" : stab.str(); }

StateLabel StateLabel::parse(const std::string& s) {
    if (s == "T") return magic();
    if (s == "0") return of(Axis::Z, +1);
    if (s == "1") return of(Axis::Z, -1);
    return of(SinglePauliLabel::parse(s));
}

PauliString PauliString::single(int k, int q, Axis axis, int sign) {
    if (q < 0 || q >= k) throw std::out_of_range("qubit index " + std::to_string(q) +
                                                 " out of range for " + std::to_string(k) + " wires");
    PauliString p(k);
    switch (axis) {
        case Axis::X: p.x[q] = 1; break;
        case Axis::Z: p.z[q] = 1; break;
        case Axis::Y: p.x[q] = 1; p.z[q] = 1; p.phase = 1; break;  // Y = i XZ
    }
    if (sign < 0) p.phase = (p.phase + 2) % 4;
    return p;
}

PauliString PauliString::from_axes(const std::string& axes, int sign) {
    if (axes.empty()) throw std::invalid_argument("Pauli string needs at least one factor");
    PauliString p(static_cast<int>(axes.size()));
    for (size_t i = 0; i < axes.size(); ++i) {
        switch (axes[i]) {
            case 'I': break;
            case 'X': p.x[i] = 1; break;
            case 'Z': p.z[i] = 1; break;
            case 'Y': p.x[i] = 1; p.z[i] = 1; p.phase = (p.phase + 1) % 4; break;
            default: throw std::invalid_argument("bad factor '" + std::string(1, axes[i]) + "'");
        }
    }
    if (sign < 0) p.phase = (p.phase + 2) % 4;
    return p;
}

char PauliString::factor_char(int i) const {
    if (i < 0 || i >= k) throw std::out_of_range("factor index out of range");
    int code = x[i] | (z[i] << 1);
    return "IXZY"[code];
}

bool PauliString::is_identity_bits() const {
    for (int i = 0; i < k; ++i)
        if (x[i] || z[i]) return false;
    return true;
}

int PauliString::y_count() const {
    int c = 0;
    for (int i = 0; i < k; ++i) c += (x[i] & z[i]);
    return c;
}

bool PauliString::is_hermitian_sign() const { return ((phase + y_count()) % 2) == 0; }

int PauliString::sign() const {
    // operator = i^{phase} (XZ)^{..} = i^{phase + 3*y_count} * HermitianTensor
    int e = (phase + 3 * y_count()) % 4;
    if (e == 0) return +1;
    if (e == 2) return -1;
    throw std::logic_error("sign() on a non-Hermitian Pauli (phase " + std::to_string(phase) + ")");
}

PauliString PauliString::negated() const {
    PauliString p = *this;
    p.phase = (p.phase + 2) % 4;
    return p;
}

std::string PauliString::str() const {
    int e = (phase + 3 * y_count()) % 4;
    static const char* prefix[4] = {"+", "+i", "-", "-i"};
    std::string s = prefix[e];
    for (int i = 0; i < k; ++i) s += factor_char(i);
    return s;
}

PauliString PauliString::parse(const std::string& s) {
    size_t pos = 0;
    int e = 0;
    if (pos < s.size() && (s[pos] == '+' || s[pos] == '-')) {
        if (s[pos] == '-') e = 2;
        ++pos;
    }
    if (pos < s.size() && s[pos] == 'i') {
        e = (e + 1) % 4;
        ++pos;
    }
    PauliString p = from_axes(s.substr(pos));
    p.phase = (p.phase + e) % 4;
    return p;
}

PauliString multiply(const PauliString& p, const PauliString& q) {
    if (p.k != q.k)
        throw std::invalid_argument("Pauli product on mismatched widths " +
                                    std::to_string(p.k) + " vs " + std::to_string(q.k));
    PauliString r(p.k);
    int ph = p.phase + q.phase;
    for (int i = 0; i < p.k; ++i) {
        // X^a Z^b * X^c Z^d = (-1)^{bc} X^{a^c} Z^{b^d}
        ph += 2 * (p.z[i] & q.x[i]);
        r.x[i] = p.x[i] ^ q.x[i];
        r.z[i] = p.z[i] ^ q.z[i];
    }
    r.phase = ph % 4;
    return r;
}

bool commutes(const PauliString& p, const PauliString& q) {
    if (p.k != q.k)
        throw std::invalid_argument("commutation test on mismatched widths " +
                                    std::to_string(p.k) + " vs " + std::to_string(q.k));
    int acc = 0;
    for (int i = 0; i < p.k; ++i) acc ^= (p.x[i] & q.z[i]) ^ (p.z[i] & q.x[i]);
    return acc == 0;
}

bool is_harmful(const PauliString& e) {
    for (int i = 0; i < e.k; ++i)
        if (e.x[i]) return true;
    return false;
}

char factor_at(const PauliString& p, int i) { return p.factor_char(i); }

Axis axis_at(const PauliString& p, int i) {
    switch (p.factor_char(i)) {
        case 'X': return Axis::X;
        case 'Y': return Axis::Y;
        case 'Z': return Axis::Z;
    }
    throw std::invalid_argument("axis_at on identity factor at index " + std::to_string(i));
}

std::vector<PauliString> enumerate_paulis(int k, bool include_identity) {
    if (k < 1 || k > 10)
        throw std::length_error("Pauli enumeration capped at k <= 10, got " + std::to_string(k));
    uint64_t total = 1ull << (2 * k);
    std::vector<PauliString> out;
    out.reserve(total);
    for (uint64_t m = 0; m < total; ++m) {
        PauliString p(k);
        for (int q = 0; q < k; ++q) {
            // qubit 0 is the most significant 2-bit digit; per-qubit code
            // 0,1,2,3 -> I,X,Z,Y
            int code = static_cast<int>((m >> (2 * (k - 1 - q))) & 3ull);
            p.x[q] = static_cast<uint8_t>(code & 1);
            p.z[q] = static_cast<uint8_t>(code >> 1);
        }
        if (!include_identity && p.is_identity_bits()) continue;
        out.push_back(std::move(p));
    }
    return out;
}

std::string raw_string(const PauliString& p) {
    std::string s = "i^" + std::to_string(p.phase) + " X:";
    for (int i = 0; i < p.k; ++i) s += char('0' + p.x[i]);
    s += " Z:";
    for (int i = 0; i < p.k; ++i) s += char('0' + p.z[i]);
    return s;
}

}  // namespace mbdqc
