#pragma once

#include <optional>
#include <random>
#include <string>
#include <vector>

#include "mbdqc/circuit.hpp"
#include "mbdqc/pauli.hpp"

namespace mbdqc {

// A trap instance: a parity set Q over the n+t output indices (1-based), the
// back-propagated stabilizer the input must satisfy, and a product input
// realizing it. Honest runs make the XOR of outcomes over Q deterministically
// zero; a Pauli deviation flips that parity exactly when it anticommutes with
// Z_Q.
struct Trap {
    std::vector<int> q_set;                       // sorted, 1-based output indices
    PauliString stabilizer;                       // signed, on n+t qubits
    std::vector<SinglePauliLabel> input_labels;   // first n = data, last t = injections

    void validate() const;  // labels realize the stabilizer, Q sane
};

struct TrapFamily {
    CliffordStructure structure;
    std::vector<Trap> traps;

    void validate() const;
};

// Vertices are family trap indices; edges join *incompatible* pairs.
struct CompatibilityGraph {
    int vertex_count = 0;
    std::vector<std::pair<int, int>> edges;  // i < j

    std::vector<std::vector<int>> adjacency() const;
    void validate() const;
};

// S_Q = G^dag Z_Q G for the structure's overall Clifford G.
PauliString backpropagate(const CliffordStructure& structure, const std::vector<int>& q_set);

// Product eigenstate labels realizing `stab`: identity factors default to +Z
// (or a random stabilizer label when free_rng is given), non-identity factors
// get the +1 eigenstate except the last one, which absorbs the sign.
std::vector<SinglePauliLabel> synthesize_input(const PauliString& stab,
                                               std::mt19937_64* free_rng = nullptr);

Trap design_trap(const CliffordStructure& structure, const std::vector<int>& q_set);

// True iff e anticommutes with Z_Q, i.e. e has an odd number of X/Y factors
// inside Q.
bool detects(const Trap& trap, const PauliString& e);

struct TrapRun {
    int parity = 0;
    std::vector<int> outcomes;
};

// Backend-level run: prepare the trap input, apply the flattened structure,
// apply the deviation (if any), measure every wire in the Z basis.
TrapRun simulate_trap(const CliffordStructure& structure, const Trap& trap,
                      const std::optional<PauliString>& deviation, std::mt19937_64& rng);

// One single-qubit trap per output index 1..n+t.
TrapFamily singleton_family(const CliffordStructure& structure);

enum class CoverageMode : uint8_t { Exhaustive, SingletonProof };

struct CoverageReport {
    bool covered = false;
    std::optional<PauliString> witness;  // an undetected harmful deviation
};

CoverageReport covers_all_harmful(const TrapFamily& family, CoverageMode mode);

// Per-index criterion: at every qubit the two stabilizer factors are equal or
// at least one is identity. Strictly stronger than operator commutation.
bool compatible(const Trap& t1, const Trap& t2);

CompatibilityGraph incompatibility_graph(const TrapFamily& family);

bool is_bipartite(const CompatibilityGraph& graph);

enum class MergeStrategy : uint8_t { GreedyLargestFirst, ExactSmall };

struct MergedGroup {
    std::vector<int> trap_indices;               // into family.traps
    std::vector<SinglePauliLabel> input_labels;  // joint input satisfying every member
};

struct MergePlan {
    std::vector<MergedGroup> groups;
};

// Partition the family into pairwise-compatible groups (graph coloring of the
// incompatibility graph) and synthesize one joint input per group. Exact mode
// computes the chromatic number and is capped at 14 traps.
MergePlan merge_traps(const TrapFamily& family, MergeStrategy strategy);

// Input language of broadbent_compile: H, S, CNOT plus T gates.
struct UGate {
    bool t = false;        // when set, a T gate on wire `g.a`
    CliffordGate g{};

    std::string str() const;
};

struct UniversalCircuit {
    int k = 0;
    std::vector<UGate> gates;

    UniversalCircuit() = default;
    explicit UniversalCircuit(int k_) : k(k_) {}
    void append_clifford(const CliffordGate& g);
    void append_t(int q);
    void validate() const;
};

// Literal rewrite S -> TT and H -> H TT H TT H TT H, route every T to the
// last wire by SWAP conjugation, and split the Clifford remainder into the
// layers of a CliffordStructure (one layer boundary per T).
CliffordStructure broadbent_compile(const UniversalCircuit& circuit);

std::string trap_table(const TrapFamily& family);

}  // namespace mbdqc
