#pragma once

#include <optional>
#include <random>
#include <vector>

#include "mbdqc/circuit.hpp"
#include "mbdqc/pauli.hpp"
#include "mbdqc/tableau.hpp"

namespace mbdqc {

// Pure stabilizer state on k qubits in tableau form. Row i of `stab` is the
// i-th stabilizer generator; row i of `destab` is its destabilizer partner
// (anticommutes with stab[i], commutes with every other generator), kept so
// measurements cost O(k^2) instead of O(k^3).
struct StabilizerState {
    int k = 0;
    std::vector<PauliString> destab;
    std::vector<PauliString> stab;

    StabilizerState() = default;

    // Full invariant check: commutation pattern, GF(2) rank, and real signs
    // on all stabilizer generators (an i*(+/-1) sign cannot stabilize).
    void validate() const;
};

StabilizerState prepare_product(const std::vector<SinglePauliLabel>& labels);

StabilizerState apply_clifford(const StabilizerState& st, const CliffordCircuit& c);
StabilizerState apply_clifford(const StabilizerState& st, const CliffordTableau& t);
StabilizerState apply_pauli(const StabilizerState& st, const PauliString& p);

struct MeasureResult {
    int outcome = 0;
    bool deterministic = false;
    StabilizerState state;
};

MeasureResult measure_z(const StabilizerState& st, int q, std::mt19937_64& rng);

// Forced outcome when +/-Z_q lies in the stabilizer group, nullopt otherwise.
std::optional<int> deterministic_z(const StabilizerState& st, int q);

// Post-measurement state for a prescribed outcome. For the random branch
// either bit is reachable; for the deterministic branch the prescribed bit
// must be the forced one.
StabilizerState collapse_z(const StabilizerState& st, int q, int outcome);

bool is_stabilized_by(const StabilizerState& st, const PauliString& p);

// Append one fresh wire (index = previous k) in the given single-qubit
// stabilizer state.
StabilizerState extend_with(const StabilizerState& st, SinglePauliLabel label);

// Exact Z-basis outcome distribution over all k qubits (qubit 0 is the most
// significant output bit). Every entry is a dyadic rational represented
// exactly in double precision. Branches on every non-deterministic
// measurement, so this is exponential and capped at k <= 12.
std::vector<double> z_distribution_exact(const StabilizerState& st);

std::string dump(const StabilizerState& st);

}  // namespace mbdqc
