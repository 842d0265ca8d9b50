#include "mbdqc/tableau.hpp"

#include <stdexcept>

namespace mbdqc {

CliffordTableau CliffordTableau::identity(int k) {
    CliffordTableau t;
    t.k = k;
    t.x_images.reserve(k);
    t.z_images.reserve(k);
    for (int j = 0; j < k; ++j) {
        t.x_images.push_back(PauliString::single(k, j, Axis::X));
        t.z_images.push_back(PauliString::single(k, j, Axis::Z));
    }
    return t;
}

void CliffordTableau::validate() const {
    if (static_cast<int>(x_images.size()) != k || static_cast<int>(z_images.size()) != k)
        throw std::logic_error("tableau with wrong generator count");
    for (int j = 0; j < k; ++j) {
        if (!x_images[j].is_hermitian_sign() || !z_images[j].is_hermitian_sign())
            throw std::logic_error("tableau image with imaginary sign at generator " +
                                   std::to_string(j));
        if (commutes(x_images[j], z_images[j]))
            throw std::logic_error("tableau images of X_" + std::to_string(j) + ", Z_" +
                                   std::to_string(j) + " must anticommute");
        for (int i = 0; i < j; ++i) {
            if (!commutes(x_images[i], x_images[j]) || !commutes(z_images[i], z_images[j]) ||
                !commutes(x_images[i], z_images[j]) || !commutes(z_images[i], x_images[j]))
                throw std::logic_error("tableau violates the symplectic condition at (" +
                                       std::to_string(i) + "," + std::to_string(j) + ")");
        }
    }
}

CliffordTableau tableau_from_circuit(const CliffordCircuit& c) {
    c.validate();
    CliffordTableau t = CliffordTableau::identity(c.k);
    for (const auto& g : c.gates) {
        for (auto& img : t.x_images) conjugate_by_gate(img, g);
        for (auto& img : t.z_images) conjugate_by_gate(img, g);
    }
    return t;
}

PauliString conjugate_pauli(const CliffordTableau& tab, const PauliString& p) {
    if (tab.k != p.k)
        throw std::invalid_argument("conjugating width-" + std::to_string(p.k) +
                                    " Pauli by width-" + std::to_string(tab.k) + " tableau");
    // P = i^phase * prod_j X_j^{x_j} Z_j^{z_j}; substitute generator images
    // in the same order.
    PauliString out = PauliString::identity(tab.k);
    out.phase = p.phase;
    for (int j = 0; j < tab.k; ++j) {
        if (p.x[j]) out = multiply(out, tab.x_images[j]);
        if (p.z[j]) out = multiply(out, tab.z_images[j]);
    }
    return out;
}

CliffordTableau compose(const CliffordTableau& first, const CliffordTableau& second) {
    if (first.k != second.k) throw std::invalid_argument("composing tableaux of different widths");
    CliffordTableau t;
    t.k = first.k;
    t.x_images.reserve(t.k);
    t.z_images.reserve(t.k);
    for (int j = 0; j < t.k; ++j) {
        t.x_images.push_back(conjugate_pauli(second, first.x_images[j]));
        t.z_images.push_back(conjugate_pauli(second, first.z_images[j]));
    }
    return t;
}

CliffordTableau inverse(const CliffordTableau& tab) {
    // Bits: the conjugation action is linear on symplectic vectors
    // v = (x | z); a Clifford matrix M satisfies M^T J M = J with
    // J = [[0,I],[I,0]], so M^{-1} = J M^T J.
    const int k = tab.k;
    const int d = 2 * k;
    auto vec_of = [&](const PauliString& p) {
        std::vector<uint8_t> v(d);
        for (int i = 0; i < k; ++i) {
            v[i] = p.x[i];
            v[k + i] = p.z[i];
        }
        return v;
    };
    // M columns: image of X_j at column j, image of Z_j at column k+j.
    std::vector<std::vector<uint8_t>> M(d, std::vector<uint8_t>(d, 0));
    for (int j = 0; j < k; ++j) {
        auto vx = vec_of(tab.x_images[j]);
        auto vz = vec_of(tab.z_images[j]);
        for (int row = 0; row < d; ++row) {
            M[row][j] = vx[row];
            M[row][k + j] = vz[row];
        }
    }
    auto swap_halves = [&](int idx) { return idx < k ? idx + k : idx - k; };
    // Minv[row][col] = (J M^T J)[row][col] = M[swap(col)][swap(row)]
    auto inv_column = [&](int col) {
        std::vector<uint8_t> v(d);
        for (int row = 0; row < d; ++row) v[row] = M[swap_halves(col)][swap_halves(row)];
        return v;
    };
    CliffordTableau out;
    out.k = k;
    auto build = [&](int col) {
        auto v = inv_column(col);
        PauliString p(k);
        for (int i = 0; i < k; ++i) {
            p.x[i] = v[i];
            p.z[i] = v[k + i];
        }
        // Fix the phase so that tab maps the candidate back to the exact
        // generator (phase 0).
        PauliString roundtrip = conjugate_pauli(tab, p);
        p.phase = (4 - roundtrip.phase) % 4;
        return p;
    };
    for (int j = 0; j < k; ++j) out.x_images.push_back(build(j));
    for (int j = 0; j < k; ++j) out.z_images.push_back(build(k + j));
    return out;
}

KeyUpdate update_keys(const CliffordTableau& tab, const std::vector<uint8_t>& a,
                      const std::vector<uint8_t>& r) {
    if (static_cast<int>(a.size()) != tab.k || static_cast<int>(r.size()) != tab.k)
        throw std::invalid_argument("key vectors must have length " + std::to_string(tab.k));
    PauliString pad(tab.k);
    pad.x = a;
    pad.z = r;
    PauliString img = conjugate_pauli(tab, pad);
    // C X^a Z^r C^dag = i^m X^{a'} Z^{r'}; the global phase is irrelevant for
    // decryption. sign folds m to +/-1 (odd m means a prefactor +/-i, which
    // only occurs for pads that are not Hermitian to begin with); tests that
    // need the exact m use conjugate_pauli directly.
    int sign = (img.phase == 2 || img.phase == 3) ? -1 : +1;
    return KeyUpdate{img.x, img.z, sign};
}

CliffordTableau assemble_G(const CliffordStructure& s) {
    return tableau_from_circuit(flatten_structure(s));
}

std::string dump(const CliffordTableau& tab) {
    std::string s;
    for (int j = 0; j < tab.k; ++j) {
        s += "X_" + std::to_string(j) + " -> " + tab.x_images[j].str() + "\n";
        s += "Z_" + std::to_string(j) + " -> " + tab.z_images[j].str() + "\n";
    }
    return s;
}

}  // namespace mbdqc
