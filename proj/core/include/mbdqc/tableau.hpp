#pragma once

#include "mbdqc/circuit.hpp"
#include "mbdqc/pauli.hpp"

namespace mbdqc {

// Conjugation action of a Clifford unitary, stored as the images of the
// generators: x_images[j] = C X_j C^dag, z_images[j] = C Z_j C^dag, with
// signs folded into the image phases.
struct CliffordTableau {
    int k = 0;
    std::vector<PauliString> x_images;
    std::vector<PauliString> z_images;

    static CliffordTableau identity(int k);
    // Symplectic + anticommutation invariants; throws on violation.
    void validate() const;
};

CliffordTableau tableau_from_circuit(const CliffordCircuit& c);

// C P C^dag with exact phase.
PauliString conjugate_pauli(const CliffordTableau& tab, const PauliString& p);

// Composition: result acts as "first, then second" (apply(first) followed
// by apply(second), i.e. the unitary second*first).
CliffordTableau compose(const CliffordTableau& first, const CliffordTableau& second);

// Inverse tableau via the symplectic transpose identity plus phase fixup.
CliffordTableau inverse(const CliffordTableau& tab);

struct KeyUpdate {
    std::vector<uint8_t> a;
    std::vector<uint8_t> r;
    int sign;  // +1/-1; exposed for tests, never needed for decryption
};

// The key-update map (a', r') with X^{a'}Z^{r'} ~ C X^a Z^r C^dag.
KeyUpdate update_keys(const CliffordTableau& tab, const std::vector<uint8_t>& a,
                      const std::vector<uint8_t>& r);

// Tableau of G = C_{t+1} . F_t . C_t ... F_1 . C_1 on n+t wires.
CliffordTableau assemble_G(const CliffordStructure& s);

std::string dump(const CliffordTableau& tab);

}  // namespace mbdqc
