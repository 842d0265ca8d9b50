#include "mbdqc/traps.hpp"

#include <algorithm>
#include <array>
#include <set>
#include <sstream>
#include <stdexcept>

#include "mbdqc/rng.hpp"
#include "mbdqc/stabilizer_sim.hpp"
#include "mbdqc/tableau.hpp"

namespace mbdqc {

namespace {

std::vector<int> checked_q_set(const std::vector<int>& q_set, int k) {
    if (q_set.empty()) throw std::invalid_argument("trap index set is empty");
    std::vector<int> q = q_set;
    std::sort(q.begin(), q.end());
    if (std::adjacent_find(q.begin(), q.end()) != q.end())
        throw std::invalid_argument("trap index set has duplicates");
    if (q.front() < 1 || q.back() > k)
        throw std::invalid_argument("trap index outside 1..n+t");
    return q;
}

}  // namespace

void Trap::validate() const {
    const int k = stabilizer.k;
    checked_q_set(q_set, k);
    if (stabilizer.is_identity_bits())
        throw std::runtime_error("trap stabilizer is the identity");
    if (static_cast<int>(input_labels.size()) != k)
        throw std::runtime_error("trap input label count mismatch");
    if (!is_stabilized_by(prepare_product(input_labels), stabilizer))
        throw std::runtime_error("trap input is not stabilized by its stabilizer");
}

void TrapFamily::validate() const {
    structure.validate();
    const int k = structure.total_wires();
    for (const auto& trap : traps) {
        if (trap.stabilizer.k != k)
            throw std::runtime_error("trap width differs from the structure");
        trap.validate();
    }
}

std::vector<std::vector<int>> CompatibilityGraph::adjacency() const {
    std::vector<std::vector<int>> adj(vertex_count);
    for (auto [i, j] : edges) {
        adj[i].push_back(j);
        adj[j].push_back(i);
    }
    return adj;
}

void CompatibilityGraph::validate() const {
    std::set<std::pair<int, int>> seen;
    for (auto [i, j] : edges) {
        if (i < 0 || j < 0 || i >= vertex_count || j >= vertex_count)
            throw std::runtime_error("graph edge endpoint out of range");
        if (i >= j) throw std::runtime_error("graph edges must satisfy i < j");
        if (!seen.insert({i, j}).second)
            throw std::runtime_error("duplicate graph edge");
    }
}

PauliString backpropagate(const CliffordStructure& structure,
                          const std::vector<int>& q_set) {
    structure.validate();
    const int k = structure.total_wires();
    const std::vector<int> q = checked_q_set(q_set, k);
    PauliString zq(k);
    for (int idx : q) zq.z[idx - 1] = 1;
    const CliffordTableau g = assemble_G(structure);
    return conjugate_pauli(inverse(g), zq);
}

std::vector<SinglePauliLabel> synthesize_input(const PauliString& stab,
                                               std::mt19937_64* free_rng) {
    if (stab.is_identity_bits())
        throw std::invalid_argument("cannot synthesize an input for the identity");
    const int sign = stab.sign();  // also rejects non-hermitian phases

    int last = -1;
    for (int q = 0; q < stab.k; ++q)
        if (stab.x[q] || stab.z[q]) last = q;

    std::vector<SinglePauliLabel> labels;
    labels.reserve(stab.k);
    for (int q = 0; q < stab.k; ++q) {
        if (!stab.x[q] && !stab.z[q]) {
            if (free_rng) {
                static constexpr Axis kAxes[3] = {Axis::X, Axis::Y, Axis::Z};
                labels.push_back({kAxes[rand_index(*free_rng, 3)],
                                  rand_bit(*free_rng) ? -1 : +1});
            } else {
                labels.push_back({Axis::Z, +1});
            }
            continue;
        }
        labels.push_back({axis_at(stab, q), q == last ? sign : +1});
    }
    return labels;
}

Trap design_trap(const CliffordStructure& structure, const std::vector<int>& q_set) {
    Trap trap;
    trap.q_set = checked_q_set(q_set, structure.total_wires());
    trap.stabilizer = backpropagate(structure, trap.q_set);
    trap.input_labels = synthesize_input(trap.stabilizer);
    return trap;
}

bool detects(const Trap& trap, const PauliString& e) {
    if (e.k != trap.stabilizer.k)
        throw std::invalid_argument("deviation width differs from the trap");
    int overlap = 0;
    for (int idx : trap.q_set) overlap += e.x[idx - 1];
    return overlap % 2 == 1;
}

TrapRun simulate_trap(const CliffordStructure& structure, const Trap& trap,
                      const std::optional<PauliString>& deviation,
                      std::mt19937_64& rng) {
    const int k = structure.total_wires();
    if (trap.stabilizer.k != k)
        throw std::invalid_argument("trap width differs from the structure");
    StabilizerState st = prepare_product(trap.input_labels);
    st = apply_clifford(st, flatten_structure(structure));
    if (deviation) {
        if (deviation->k != k)
            throw std::invalid_argument("deviation width differs from the structure");
        st = apply_pauli(st, *deviation);
    }
    TrapRun run;
    run.outcomes.resize(k);
    for (int q = 0; q < k; ++q) {
        MeasureResult mr = measure_z(st, q, rng);
        run.outcomes[q] = mr.outcome;
        st = std::move(mr.state);
    }
    for (int idx : trap.q_set) run.parity ^= run.outcomes[idx - 1];
    return run;
}

TrapFamily singleton_family(const CliffordStructure& structure) {
    TrapFamily family;
    family.structure = structure;
    const int k = structure.total_wires();
    family.traps.reserve(k);
    for (int q = 1; q <= k; ++q) family.traps.push_back(design_trap(structure, {q}));
    return family;
}

CoverageReport covers_all_harmful(const TrapFamily& family, CoverageMode mode) {
    const int k = family.structure.total_wires();
    CoverageReport report;
    if (mode == CoverageMode::SingletonProof) {
        // Every harmful deviation has an X or Y factor at some index q; the
        // singleton trap at q flips on it. Structural, no enumeration.
        std::vector<char> have(k + 1, 0);
        for (const auto& trap : family.traps)
            if (trap.q_set.size() == 1) have[trap.q_set[0]] = 1;
        report.covered =
            std::all_of(have.begin() + 1, have.end(), [](char c) { return c != 0; });
        return report;
    }
    if (k > 10) throw std::invalid_argument("exhaustive coverage is capped at n+t <= 10");
    for (const PauliString& e : enumerate_paulis(k, false)) {
        if (!is_harmful(e)) continue;
        bool hit = false;
        for (const auto& trap : family.traps)
            if (detects(trap, e)) {
                hit = true;
                break;
            }
        if (!hit) {
            report.covered = false;
            report.witness = e;
            return report;
        }
    }
    report.covered = true;
    return report;
}

bool compatible(const Trap& t1, const Trap& t2) {
    if (t1.stabilizer.k != t2.stabilizer.k)
        throw std::invalid_argument("traps have different widths");
    for (int q = 0; q < t1.stabilizer.k; ++q) {
        const bool id1 = !t1.stabilizer.x[q] && !t1.stabilizer.z[q];
        const bool id2 = !t2.stabilizer.x[q] && !t2.stabilizer.z[q];
        if (id1 || id2) continue;
        if (axis_at(t1.stabilizer, q) != axis_at(t2.stabilizer, q)) return false;
    }
    return true;
}

CompatibilityGraph incompatibility_graph(const TrapFamily& family) {
    CompatibilityGraph graph;
    graph.vertex_count = static_cast<int>(family.traps.size());
    for (int i = 0; i < graph.vertex_count; ++i)
        for (int j = i + 1; j < graph.vertex_count; ++j)
            if (!compatible(family.traps[i], family.traps[j])) graph.edges.push_back({i, j});
    return graph;
}

bool is_bipartite(const CompatibilityGraph& graph) {
    const auto adj = graph.adjacency();
    std::vector<int> side(graph.vertex_count, -1);
    for (int start = 0; start < graph.vertex_count; ++start) {
        if (side[start] != -1) continue;
        side[start] = 0;
        std::vector<int> stack = {start};
        while (!stack.empty()) {
            const int v = stack.back();
            stack.pop_back();
            for (int u : adj[v]) {
                if (side[u] == -1) {
                    side[u] = side[v] ^ 1;
                    stack.push_back(u);
                } else if (side[u] == side[v]) {
                    return false;
                }
            }
        }
    }
    return true;
}

namespace {

// Greedy coloring, largest degree first with lowest-index tie break.
std::vector<int> greedy_coloring(const CompatibilityGraph& graph) {
    const auto adj = graph.adjacency();
    std::vector<int> order(graph.vertex_count);
    for (int i = 0; i < graph.vertex_count; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        if (adj[a].size() != adj[b].size()) return adj[a].size() > adj[b].size();
        return a < b;
    });
    std::vector<int> color(graph.vertex_count, -1);
    for (int v : order) {
        std::vector<char> used(graph.vertex_count + 1, 0);
        for (int u : adj[v])
            if (color[u] >= 0) used[color[u]] = 1;
        int c = 0;
        while (used[c]) ++c;
        color[v] = c;
    }
    return color;
}

// Exact chromatic coloring by branch and bound over the greedy order.
struct ExactColoring {
    const std::vector<std::vector<int>>& adj;
    std::vector<int> order;
    std::vector<int> color, best;
    int best_count;

    void search(std::size_t pos, int used) {
        if (used >= best_count) return;  // cannot improve
        if (pos == order.size()) {
            best = color;
            best_count = used;
            return;
        }
        const int v = order[pos];
        for (int c = 0; c < std::min(used + 1, best_count - 1); ++c) {
            bool ok = true;
            for (int u : adj[v])
                if (color[u] == c) {
                    ok = false;
                    break;
                }
            if (!ok) continue;
            color[v] = c;
            search(pos + 1, std::max(used, c + 1));
            color[v] = -1;
        }
    }
};

std::vector<int> exact_coloring(const CompatibilityGraph& graph) {
    if (graph.vertex_count > 14)
        throw std::invalid_argument("exact merge strategy is capped at 14 traps");
    const auto adj = graph.adjacency();
    ExactColoring ec{adj, {}, {}, {}, 0};
    ec.order.resize(graph.vertex_count);
    for (int i = 0; i < graph.vertex_count; ++i) ec.order[i] = i;
    std::sort(ec.order.begin(), ec.order.end(), [&](int a, int b) {
        if (adj[a].size() != adj[b].size()) return adj[a].size() > adj[b].size();
        return a < b;
    });
    ec.best = greedy_coloring(graph);
    ec.best_count = ec.best.empty()
                        ? 0
                        : 1 + *std::max_element(ec.best.begin(), ec.best.end());
    ec.color.assign(graph.vertex_count, -1);
    ec.search(0, 0);
    return ec.best;
}

// Joint input for a pairwise-compatible group: fix the per-qubit axis from
// the union support, then solve the product-of-signs system over GF(2).
std::vector<SinglePauliLabel> merge_inputs(const TrapFamily& family,
                                           const std::vector<int>& members) {
    const int k = family.structure.total_wires();
    std::vector<std::optional<Axis>> axes(k);
    for (int m : members) {
        const PauliString& s = family.traps[m].stabilizer;
        for (int q = 0; q < k; ++q) {
            if (!s.x[q] && !s.z[q]) continue;
            const Axis a = axis_at(s, q);
            if (axes[q] && *axes[q] != a)
                throw std::runtime_error("incompatible traps grouped together");
            axes[q] = a;
        }
    }

    // Rows: support mask (k bits) + sign bit. Gaussian elimination.
    std::vector<std::vector<uint8_t>> rows;
    for (int m : members) {
        const PauliString& s = family.traps[m].stabilizer;
        std::vector<uint8_t> row(k + 1, 0);
        for (int q = 0; q < k; ++q) row[q] = s.x[q] || s.z[q];
        row[k] = s.sign() < 0;
        rows.push_back(std::move(row));
    }
    std::vector<int> pivot_of_row;
    std::size_t rank = 0;
    for (int col = 0; col < k && rank < rows.size(); ++col) {
        std::size_t p = rank;
        while (p < rows.size() && !rows[p][col]) ++p;
        if (p == rows.size()) continue;
        std::swap(rows[rank], rows[p]);
        for (std::size_t r = 0; r < rows.size(); ++r)
            if (r != rank && rows[r][col])
                for (int j = col; j <= k; ++j) rows[r][j] ^= rows[rank][j];
        pivot_of_row.push_back(col);
        ++rank;
    }
    for (std::size_t r = rank; r < rows.size(); ++r)
        if (rows[r][k])
            throw std::runtime_error(
                "merged trap sign system is infeasible for this group");

    std::vector<uint8_t> sign_bit(k, 0);
    for (std::size_t r = 0; r < rank; ++r) sign_bit[pivot_of_row[r]] = rows[r][k];

    std::vector<SinglePauliLabel> labels(k);
    for (int q = 0; q < k; ++q) {
        labels[q].axis = axes[q].value_or(Axis::Z);
        labels[q].sign = sign_bit[q] ? -1 : +1;
    }

    // Defensive: every member must stabilize the joint input.
    const StabilizerState probe = prepare_product(labels);
    for (int m : members)
        if (!is_stabilized_by(probe, family.traps[m].stabilizer))
            throw std::runtime_error("merged input fails a member stabilizer");
    return labels;
}

}  // namespace

MergePlan merge_traps(const TrapFamily& family, MergeStrategy strategy) {
    family.validate();
    const CompatibilityGraph graph = incompatibility_graph(family);
    const std::vector<int> color = strategy == MergeStrategy::ExactSmall
                                       ? exact_coloring(graph)
                                       : greedy_coloring(graph);
    const int count =
        color.empty() ? 0 : 1 + *std::max_element(color.begin(), color.end());
    MergePlan plan;
    plan.groups.resize(count);
    for (int v = 0; v < graph.vertex_count; ++v)
        plan.groups[color[v]].trap_indices.push_back(v);
    for (auto& group : plan.groups)
        group.input_labels = merge_inputs(family, group.trap_indices);
    return plan;
}

// ---------------------------------------------------------------------------
// Broadbent-style compilation

std::string UGate::str() const {
    if (t) return "T " + std::to_string(g.a);
    return g.str();
}

void UniversalCircuit::append_clifford(const CliffordGate& g) {
    gates.push_back({false, g});
}

void UniversalCircuit::append_t(int q) {
    UGate u;
    u.t = true;
    u.g.a = q;
    gates.push_back(u);
}

void UniversalCircuit::validate() const {
    if (k < 1) throw std::runtime_error("circuit needs at least one wire");
    for (const auto& u : gates) {
        if (u.g.a < 0 || u.g.a >= k) throw std::runtime_error("gate target out of range");
        if (u.t) continue;
        if (u.g.two_qubit()) {
            if (u.g.b < 0 || u.g.b >= k || u.g.b == u.g.a)
                throw std::runtime_error("two-qubit gate targets invalid");
        }
    }
}

CliffordStructure broadbent_compile(const UniversalCircuit& circuit) {
    circuit.validate();
    const int n = circuit.k;

    // Pass 1: literal rewrite into the {H, CNOT, T} gate set.
    std::vector<UGate> stream;
    const auto push_t = [&](int q) {
        UGate u;
        u.t = true;
        u.g.a = q;
        stream.push_back(u);
    };
    for (const auto& u : circuit.gates) {
        if (u.t) {
            push_t(u.g.a);
            continue;
        }
        switch (u.g.kind) {
            case GateKind::S:
                push_t(u.g.a);
                push_t(u.g.a);
                break;
            case GateKind::H:
                for (int rep = 0; rep < 3; ++rep) {
                    stream.push_back({false, gate1(GateKind::H, u.g.a)});
                    push_t(u.g.a);
                    push_t(u.g.a);
                }
                stream.push_back({false, gate1(GateKind::H, u.g.a)});
                break;
            case GateKind::CNOT:
                stream.push_back(u);
                break;
            default:
                throw std::invalid_argument(
                    "compile input must use only H, S, CNOT and T gates");
        }
    }

    // Pass 2+3: route T gates to the last wire by SWAP conjugation and cut
    // the Clifford remainder into layers at each T.
    std::vector<CliffordCircuit> layers;
    CliffordCircuit current(n);
    for (const auto& u : stream) {
        if (!u.t) {
            current.append(u.g);
            continue;
        }
        if (u.g.a != n - 1) current.append(gate2(GateKind::SWAP, u.g.a, n - 1));
        layers.push_back(current);
        current = CliffordCircuit(n);
        if (u.g.a != n - 1) current.append(gate2(GateKind::SWAP, u.g.a, n - 1));
    }
    layers.push_back(current);

    CliffordStructure out;
    out.n = n;
    out.t = static_cast<int>(layers.size()) - 1;
    out.layers = std::move(layers);
    out.validate();
    return out;
}

std::string trap_table(const TrapFamily& family) {
    std::vector<std::array<std::string, 4>> rows{{"trap", "Q", "stabilizer", "input"}};
    for (std::size_t i = 0; i < family.traps.size(); ++i) {
        const Trap& trap = family.traps[i];
        std::ostringstream qs;
        qs << '{';
        for (std::size_t j = 0; j < trap.q_set.size(); ++j)
            qs << (j ? "," : "") << trap.q_set[j];
        qs << '}';
        std::ostringstream in;
        for (std::size_t j = 0; j < trap.input_labels.size(); ++j)
            in << (j ? " " : "") << trap.input_labels[j].str();
        rows.push_back({std::to_string(i), qs.str(), trap.stabilizer.str(), in.str()});
    }
    std::array<std::size_t, 4> width{};
    for (const auto& row : rows)
        for (int c = 0; c < 4; ++c) width[c] = std::max(width[c], row[c].size());
    std::ostringstream os;
    for (const auto& row : rows) {
        for (int c = 0; c < 4; ++c) {
            os << row[c];
            if (c < 3) os << std::string(width[c] - row[c].size() + 2, ' ');
        }
        os << '\n';
    }
    return os.str();
}

}  // namespace mbdqc
