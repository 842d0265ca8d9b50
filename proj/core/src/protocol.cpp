#include "mbdqc/protocol.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>
#include <stdexcept>

#include "mbdqc/rng.hpp"
#include "mbdqc/tableau.hpp"

namespace mbdqc {

// ---------------------------------------------------------------------------
// KeyState

KeyState KeyState::zeros(int k) {
    KeyState ks;
    ks.a.assign(k, 0);
    ks.r.assign(k, 0);
    return ks;
}

KeyState KeyState::random(int k, std::mt19937_64& rng) {
    KeyState ks;
    ks.a.resize(k);
    ks.r.resize(k);
    for (int i = 0; i < k; ++i) ks.a[i] = static_cast<uint8_t>(rand_bit(rng));
    for (int i = 0; i < k; ++i) ks.r[i] = static_cast<uint8_t>(rand_bit(rng));
    return ks;
}

void KeyState::validate() const {
    if (a.size() != r.size()) throw std::runtime_error("key vectors of unequal length");
}

// ---------------------------------------------------------------------------
// QuantumRegister

int QuantumRegister::wires() const {
    return backend == Backend::Dense ? dense.k : stab.k;
}

QuantumRegister QuantumRegister::product(Backend backend,
                                         const std::vector<StateLabel>& labels) {
    QuantumRegister reg;
    reg.backend = backend;
    if (backend == Backend::Dense) {
        reg.dense = prepare(labels);
    } else {
        std::vector<SinglePauliLabel> ls;
        ls.reserve(labels.size());
        for (const auto& l : labels) {
            if (l.is_magic)
                throw std::invalid_argument(
                    "magic state requested on the stabilizer backend");
            ls.push_back(l.stab);
        }
        reg.stab = prepare_product(ls);
    }
    return reg;
}

void reg_apply_circuit(QuantumRegister& reg, const CliffordCircuit& c) {
    if (reg.backend == Backend::Dense)
        reg.dense = apply_circuit(reg.dense, c);
    else
        reg.stab = apply_clifford(reg.stab, c);
}

void reg_apply_pauli(QuantumRegister& reg, const PauliString& p) {
    if (reg.backend == Backend::Dense)
        reg.dense = apply_pauli(reg.dense, p);
    else
        reg.stab = apply_pauli(reg.stab, p);
}

void reg_apply_zrot(QuantumRegister& reg, int q, Angle angle, bool dagger) {
    if (reg.backend == Backend::Dense) {
        reg.dense = apply_zrot(reg.dense, q, angle, dagger);
        return;
    }
    // diag(1, i^m) = S^m; the dagger is S^(4-m).
    int m = angle.quarter_turns;
    if (dagger) m = (4 - m) % 4;
    CliffordCircuit c(reg.stab.k);
    for (int rep = 0; rep < m; ++rep) c.append(gate1(GateKind::S, q));
    reg.stab = apply_clifford(reg.stab, c);
}

void reg_extend(QuantumRegister& reg, const StateLabel& label) {
    if (reg.backend == Backend::Dense)
        reg.dense = tensor(reg.dense, prepare({label}));
    else {
        if (label.is_magic)
            throw std::invalid_argument("magic state requested on the stabilizer backend");
        reg.stab = extend_with(reg.stab, label.stab);
    }
}

double reg_prob_one(const QuantumRegister& reg, int q) {
    if (reg.backend == Backend::Dense) return measure_prob_one(reg.dense, q);
    if (auto forced = deterministic_z(reg.stab, q)) return *forced ? 1.0 : 0.0;
    return 0.5;
}

void reg_collapse(QuantumRegister& reg, int q, int outcome) {
    if (reg.backend == Backend::Dense)
        reg.dense = collapse(reg.dense, q, outcome);
    else
        reg.stab = collapse_z(reg.stab, q, outcome);
}

int reg_measure(QuantumRegister& reg, int q, std::mt19937_64& rng) {
    const double p1 = reg_prob_one(reg, q);
    int outcome;
    if (p1 <= 0.0)
        outcome = 0;
    else if (p1 >= 1.0)
        outcome = 1;
    else if (reg.backend == Backend::Stabilizer)
        outcome = rand_bit(rng);  // exactly 1/2
    else
        outcome = rand_double(rng) < p1 ? 1 : 0;
    reg_collapse(reg, q, outcome);
    return outcome;
}

// ---------------------------------------------------------------------------
// Transcript

int SessionTranscript::quantum_payload_qubits() const {
    int total = 0;
    for (const auto& e : entries) {
        if (e.dir != Direction::ClientToServer) continue;
        if (e.msg.kind == MessageKind::RegisterPayload ||
            e.msg.kind == MessageKind::AncillaPayload)
            total += e.msg.qubit_count;
    }
    return total;
}

namespace {

const char* kind_name(MessageKind k) {
    switch (k) {
        case MessageKind::RegisterPayload: return "register";
        case MessageKind::AncillaPayload: return "ancilla";
        case MessageKind::ReturnPayload: return "return";
        case MessageKind::OutcomeBit: return "outcome-bit";
        case MessageKind::AngleMessage: return "angle";
        case MessageKind::OutcomeString: return "outcome-string";
        case MessageKind::KeepRegisters: return "keep-registers";
    }
    return "?";
}

}  // namespace

std::string SessionTranscript::dump() const {
    std::ostringstream os;
    int step = 0;
    for (const auto& e : entries) {
        os << step++ << ' ' << (e.dir == Direction::ClientToServer ? "C->S" : "S->C") << ' '
           << kind_name(e.msg.kind);
        switch (e.msg.kind) {
            case MessageKind::RegisterPayload:
            case MessageKind::AncillaPayload:
            case MessageKind::ReturnPayload:
                os << " qubits=" << e.msg.qubit_count;
                break;
            case MessageKind::OutcomeBit:
                os << " b=" << e.msg.bit;
                break;
            case MessageKind::AngleMessage:
                os << " delta=" << e.msg.angle.quarter_turns;
                break;
            case MessageKind::OutcomeString: {
                os << " x=";
                for (auto b : e.msg.bits) os << int(b);
                break;
            }
            case MessageKind::KeepRegisters:
                break;
        }
        os << '\n';
    }
    return os.str();
}

// ---------------------------------------------------------------------------
// Behaviors

ServerBehavior ServerBehavior::honest() { return {}; }

ServerBehavior ServerBehavior::pauli_deviation(std::map<int, PauliString> devs) {
    ServerBehavior b;
    b.kind = Kind::PauliDeviation;
    b.deviations = std::move(devs);
    return b;
}

ServerBehavior ServerBehavior::single_deviation(const PauliString& e, int n, int t) {
    if (e.k != n + t)
        throw std::invalid_argument("deviation width must be n+t");
    std::map<int, PauliString> devs;
    PauliString data(n + t);
    for (int q = 0; q < n; ++q) {
        data.x[q] = e.x[q];
        data.z[q] = e.z[q];
    }
    if (!data.is_identity_bits()) devs[0] = data;
    for (int i = 1; i <= t; ++i) {
        const int w = n + i - 1;
        if (!e.x[w] && !e.z[w]) continue;
        PauliString anc(n + t);
        anc.x[w] = e.x[w];
        anc.z[w] = e.z[w];
        devs[i] = anc;
    }
    return pauli_deviation(std::move(devs));
}

ServerBehavior ServerBehavior::unitary_deviation(Eigen::MatrixXcd u, int w_priv) {
    if (w_priv < 0) throw std::invalid_argument("negative work register");
    ServerBehavior b;
    b.kind = Kind::UnitaryDeviation;
    b.unitary = std::move(u);
    b.w_priv = w_priv;
    return b;
}

ServerBehavior ServerBehavior::noisy_uniform(double p_err) {
    if (p_err < 0 || p_err > 1) throw std::invalid_argument("p_err outside [0,1]");
    ServerBehavior b;
    b.kind = Kind::NoisyHonest;
    b.noise_kind = NoiseKind::UniformHarmful;
    b.p_err = p_err;
    return b;
}

ServerBehavior ServerBehavior::noisy_fixed(double p_err, PauliString e) {
    if (p_err < 0 || p_err > 1) throw std::invalid_argument("p_err outside [0,1]");
    ServerBehavior b;
    b.kind = Kind::NoisyHonest;
    b.noise_kind = NoiseKind::FixedPauli;
    b.p_err = p_err;
    b.fixed_e = std::move(e);
    return b;
}

ServerBehavior ServerBehavior::noisy_depolarizing(double per_qubit_p) {
    if (per_qubit_p < 0 || per_qubit_p > 1)
        throw std::invalid_argument("depolarizing probability outside [0,1]");
    ServerBehavior b;
    b.kind = Kind::NoisyHonest;
    b.noise_kind = NoiseKind::PerQubitDepolarizing;
    b.depol_p = per_qubit_p;
    return b;
}

PauliString random_harmful_pauli(int k, std::mt19937_64& rng) {
    if (k < 1) throw std::invalid_argument("need at least one wire");
    // Rejection-sample the 2-bit factor codes until some factor has an X
    // component; expected iterations 1/(1 - 2^-k) < 2.
    while (true) {
        PauliString p(k);
        bool harmful = false;
        for (int q = 0; q < k; ++q) {
            const std::uint64_t code = rand_index(rng, 4);
            p.x[q] = code & 1;
            p.z[q] = (code >> 1) & 1;
            harmful = harmful || p.x[q];
        }
        if (harmful) return p;
    }
}

// ---------------------------------------------------------------------------
// Client inputs

bool MbdqcClient::computation_mode(bool allow_mixed) const {
    bool any_t = false, any_stab = false;
    for (const auto& a : a_choices) (a.is_magic ? any_t : any_stab) = true;
    if (any_t && any_stab && !allow_mixed)
        throw std::invalid_argument(
            "mixed injection modes: choose all-T or all-stabilizer injections");
    return any_t;
}

void MbdqcClient::validate() const {
    structure.validate();
    if (static_cast<int>(rho_labels.size()) != structure.n)
        throw std::invalid_argument("need one input label per data wire");
    for (const auto& l : rho_labels)
        if (l.is_magic)
            throw std::invalid_argument("protocol inputs are stabilizer product states");
    if (static_cast<int>(a_choices.size()) != structure.t)
        throw std::invalid_argument("need one injection choice per layer");
}

// ---------------------------------------------------------------------------
// Session internals

namespace {

CliffordCircuit embed(const CliffordCircuit& c, int width) {
    if (c.k > width)
        throw std::invalid_argument("cannot embed a circuit into fewer wires");
    CliffordCircuit out(width);
    out.gates = c.gates;
    return out;
}

void conj_keys(KeyState& keys, const CliffordCircuit& c) {
    PauliString pad(keys.k());
    pad.x = keys.a;
    pad.z = keys.r;
    for (const auto& g : c.gates) conjugate_by_gate(pad, g);
    keys.a = pad.x;
    keys.r = pad.z;
}

PauliString pad_of(const KeyState& keys) {
    PauliString pad(keys.k());
    pad.x = keys.a;
    pad.z = keys.r;
    return pad;
}

// Truncate a deviation to the wires the server currently holds, rejecting
// any support beyond them.
PauliString restrict_width(const PauliString& p, int width) {
    if (p.k < width)
        throw std::invalid_argument("deviation is narrower than the session register");
    for (int q = width; q < p.k; ++q)
        if (p.x[q] || p.z[q])
            throw std::invalid_argument(
                "deviation touches a wire the server does not hold yet");
    PauliString out(width);
    std::copy(p.x.begin(), p.x.begin() + width, out.x.begin());
    std::copy(p.z.begin(), p.z.begin() + width, out.z.begin());
    return out;
}

// The per-point deviation plan of a session, all strings on n+t wires.
std::map<int, PauliString> build_deviation_plan(const ServerBehavior& behavior, int n,
                                                int t, std::mt19937_64* rng) {
    switch (behavior.kind) {
        case ServerBehavior::Kind::Honest:
        case ServerBehavior::Kind::UnitaryDeviation:
            return {};
        case ServerBehavior::Kind::PauliDeviation: {
            for (const auto& [point, e] : behavior.deviations) {
                if (point < 0 || point > t)
                    throw std::invalid_argument("deviation point outside 0..t");
                if (e.k != n + t)
                    throw std::invalid_argument("deviation width must be n+t");
            }
            return behavior.deviations;
        }
        case ServerBehavior::Kind::NoisyHonest: {
            if (!rng)
                throw std::invalid_argument(
                    "noisy behavior is sampling-only; exact enumeration cannot average it");
            PauliString e(n + t);
            switch (behavior.noise_kind) {
                case NoiseKind::UniformHarmful:
                    if (rand_double(*rng) >= behavior.p_err) return {};
                    e = random_harmful_pauli(n + t, *rng);
                    break;
                case NoiseKind::FixedPauli:
                    if (behavior.fixed_e.k != n + t)
                        throw std::invalid_argument("fixed noise width must be n+t");
                    if (rand_double(*rng) >= behavior.p_err) return {};
                    e = behavior.fixed_e;
                    break;
                case NoiseKind::PerQubitDepolarizing: {
                    for (int q = 0; q < n + t; ++q) {
                        if (rand_double(*rng) >= behavior.depol_p) continue;
                        const std::uint64_t code = rand_index(*rng, 3);
                        // 0 -> X, 1 -> Z, 2 -> Y
                        e.x[q] = code != 1;
                        e.z[q] = code != 0;
                    }
                    break;
                }
            }
            if (e.is_identity_bits()) return {};
            return ServerBehavior::single_deviation(e, n, t).deviations;
        }
    }
    return {};
}

struct Engine {
    const MbdqcClient& cl;
    const ServerBehavior& bh;
    MbdqcOptions opts;
    Backend backend;
    int n, t;
    bool computation;

    // Per-session secrets, fixed before the run.
    KeyState keys0;                 // n bits
    std::vector<uint8_t> anc_a, anc_r;
    std::vector<Angle> thetas;
    std::map<int, PauliString> plan;  // width n+t

    struct Run {
        QuantumRegister reg;
        KeyState keys;
        std::vector<int> layer_b;
        std::vector<Angle> angles_sent;
        SessionTranscript tr;
        bool record = false;

        void log(Direction dir, ProtocolMessage msg) {
            if (record) tr.entries.push_back({dir, std::move(msg)});
        }
    };

    Engine(const MbdqcClient& client, const ServerBehavior& behavior,
           const MbdqcOptions& options)
        : cl(client), bh(behavior), opts(options) {
        cl.validate();
        n = cl.n();
        t = cl.t();
        computation = cl.computation_mode(opts.allow_mixed);
        const bool needs_dense = computation || opts.back_and_forth ||
                                 bh.kind == ServerBehavior::Kind::UnitaryDeviation;
        backend = opts.backend.value_or(needs_dense ? Backend::Dense
                                                    : Backend::Stabilizer);
        if (backend == Backend::Stabilizer && needs_dense)
            throw std::invalid_argument(
                "this session needs the dense backend (magic states, unitary "
                "deviations or back-and-forth mode)");
        if (bh.kind == ServerBehavior::Kind::UnitaryDeviation) {
            const auto d = static_cast<Eigen::Index>(std::size_t{1} << (n + bh.w_priv));
            if (bh.unitary.rows() != d || bh.unitary.cols() != d)
                throw std::invalid_argument(
                    "adversary unitary must act on the data wires plus w_priv "
                    "work wires");
        }
    }

    void draw_secrets(std::mt19937_64& rng) {
        keys0 = KeyState::random(n, rng);
        anc_a.resize(t);
        anc_r.resize(t);
        thetas.resize(t);
        for (int i = 0; i < t; ++i) {
            anc_a[i] = static_cast<uint8_t>(rand_bit(rng));
            anc_r[i] = static_cast<uint8_t>(rand_bit(rng));
            thetas[i] = Angle(static_cast<int>(rand_index(rng, 4)));
        }
        plan = build_deviation_plan(bh, n, t, &rng);
    }

    // Decode secrets from an enumeration code (2n + 4t bits).
    void set_secrets(std::uint64_t code) {
        keys0 = KeyState::zeros(n);
        for (int i = 0; i < n; ++i, code >>= 1) keys0.a[i] = code & 1;
        for (int i = 0; i < n; ++i, code >>= 1) keys0.r[i] = code & 1;
        anc_a.assign(t, 0);
        anc_r.assign(t, 0);
        thetas.assign(t, Angle(0));
        for (int i = 0; i < t; ++i, code >>= 1) anc_a[i] = code & 1;
        for (int i = 0; i < t; ++i, code >>= 1) anc_r[i] = code & 1;
        for (int i = 0; i < t; ++i, code >>= 2) thetas[i] = Angle(static_cast<int>(code & 3));
        plan = build_deviation_plan(bh, n, t, nullptr);
    }

    int secret_bits() const { return 2 * n + 4 * t; }

    Run start(bool record) const {
        Run run;
        run.record = record;
        run.reg = QuantumRegister::product(backend, cl.rho_labels);
        reg_apply_pauli(run.reg, pad_of(keys0));
        run.keys = keys0;
        if (record) run.tr.initial_keys = keys0;
        run.log(Direction::ClientToServer,
                {MessageKind::RegisterPayload, n, 0, Angle{}, {}});
        return run;
    }

    // Everything of layer i (1-based) up to and excluding the ancilla
    // measurement; returns the wire to measure.
    int layer_pre(Run& run) const {
        const int i = static_cast<int>(run.layer_b.size()) + 1;
        const int anc = n + i - 1;
        // Client prepares and sends X^a Z^r Z(theta)|A>.
        const StateLabel& a_label = cl.a_choices[i - 1];
        reg_extend(run.reg, a_label);
        reg_apply_zrot(run.reg, anc, thetas[i - 1], false);
        if (anc_r[i - 1])
            reg_apply_pauli(run.reg,
                            PauliString::single(anc + 1, anc, Axis::Z, +1));
        if (anc_a[i - 1])
            reg_apply_pauli(run.reg,
                            PauliString::single(anc + 1, anc, Axis::X, +1));
        run.keys.a.push_back(anc_a[i - 1]);
        run.keys.r.push_back(anc_r[i - 1]);
        run.log(Direction::ClientToServer,
                {MessageKind::AncillaPayload, 1, 0, Angle{}, {}});
        if (run.record) run.tr.thetas.push_back(thetas[i - 1]);

        // Server: C_i on the data wires, then the injection gadget.
        CliffordCircuit server = embed(cl.structure.layers[i - 1], anc + 1);
        server.append(injection_gadget(i, n));
        reg_apply_circuit(run.reg, server);
        conj_keys(run.keys, server);

        if (auto it = plan.find(i); it != plan.end())
            reg_apply_pauli(run.reg, restrict_width(it->second, anc + 1));
        return anc;
    }

    // Decode, angle exchange, blind rotation, key fold.
    void layer_post(Run& run, int b_phys) const {
        const int i = static_cast<int>(run.layer_b.size()) + 1;
        const int anc = n + i - 1;
        run.log(Direction::ServerToClient,
                {MessageKind::OutcomeBit, 0, b_phys, Angle{}, {}});
        const int b_dec = b_phys ^ run.keys.a[anc];
        const bool magic = cl.a_choices[i - 1].is_magic;
        const int phi = magic ? b_dec : 0;
        int delta = (phi + thetas[i - 1].quarter_turns) % 4;
        if (run.keys.a[n - 1]) delta = (4 - delta) % 4;
        run.log(Direction::ClientToServer,
                {MessageKind::AngleMessage, 0, 0, Angle(delta), {}});
        run.angles_sent.push_back(Angle(delta));
        reg_apply_zrot(run.reg, n - 1, Angle(delta), true);
        if (magic) run.keys.a[n - 1] ^= static_cast<uint8_t>(b_dec);
        run.layer_b.push_back(b_dec);
        if (run.record) run.tr.decoded_bits.push_back(b_dec);
        run.log(Direction::ClientToServer, {MessageKind::KeepRegisters, 0, 0, Angle{}, {}});
    }

    // Final Clifford, key update and point-0 deviation; measurement is left
    // to the driver.
    void final_pre(Run& run) const {
        CliffordCircuit server = embed(cl.structure.layers[t], run.reg.wires());
        reg_apply_circuit(run.reg, server);
        conj_keys(run.keys, server);
        if (auto it = plan.find(0); it != plan.end())
            reg_apply_pauli(run.reg, restrict_width(it->second, run.reg.wires()));
        if (bh.kind == ServerBehavior::Kind::UnitaryDeviation) {
            const int base = run.reg.wires();
            for (int wq = 0; wq < bh.w_priv; ++wq)
                reg_extend(run.reg, StateLabel::of(Axis::Z, +1));
            std::vector<int> wires(n);
            for (int q = 0; q < n; ++q) wires[q] = q;
            for (int wq = 0; wq < bh.w_priv; ++wq) wires.push_back(base + wq);
            run.reg.dense = apply_unitary(run.reg.dense, bh.unitary, wires);
        }
    }

    std::vector<uint8_t> assemble_output(const Run& run,
                                         const std::vector<uint8_t>& x_dec) const {
        std::vector<uint8_t> out = x_dec;
        if (!computation) {
            for (int i = 0; i < t; ++i) {
                if (opts.allow_mixed && cl.a_choices[i].is_magic) continue;
                out.push_back(static_cast<uint8_t>(run.layer_b[i]));
            }
        }
        return out;
    }
};

}  // namespace

// ---------------------------------------------------------------------------
// Sampling runs

namespace {

MbdqcResult finish_sampled(const Engine& eng, Engine::Run& run, std::mt19937_64& rng) {
    MbdqcResult res;
    if (eng.opts.prefinal_probe) {
        res.layer_outcomes = run.layer_b;
        res.final_register = std::move(run.reg);
        res.final_keys = std::move(run.keys);
        res.transcript = std::move(run.tr);
        return res;
    }
    std::vector<uint8_t> x_phys(eng.n), x_dec(eng.n);
    for (int q = 0; q < eng.n; ++q) {
        x_phys[q] = static_cast<uint8_t>(reg_measure(run.reg, q, rng));
        x_dec[q] = x_phys[q] ^ run.keys.a[q];
    }
    run.log(Direction::ServerToClient,
            {MessageKind::OutcomeString, 0, 0, Angle{}, x_phys});
    res.output = eng.assemble_output(run, x_dec);
    res.layer_outcomes = run.layer_b;
    if (run.record) run.tr.final_keys = run.keys;
    res.transcript = std::move(run.tr);
    res.final_register = std::move(run.reg);
    res.final_keys = std::move(run.keys);
    return res;
}

}  // namespace

MbdqcResult run_mbdqc(const MbdqcClient& client, const ServerBehavior& behavior,
                      std::mt19937_64& rng, const MbdqcOptions& opts) {
    if (opts.back_and_forth) {
        // Protocol with re-encryption between layers: each layer is a
        // standalone n+1-wire session; the client decrypts the returned data
        // wires and re-encrypts them with fresh keys. Dense backend.
        Engine eng(client, behavior, opts);
        const int n = eng.n, t = eng.t;
        eng.draw_secrets(rng);

        Engine::Run run;
        run.record = opts.record_transcript;
        run.tr.initial_keys = eng.keys0;

        // Client-side plaintext register.
        StateVector plain = prepare(client.rho_labels);
        std::vector<int> layer_b;
        KeyState keys = eng.keys0;

        const auto send_register = [&](const KeyState& ks) {
            QuantumRegister reg;
            reg.backend = Backend::Dense;
            reg.dense = plain;
            reg_apply_pauli(reg, pad_of(ks));
            run.log(Direction::ClientToServer,
                    {MessageKind::RegisterPayload, n, 0, Angle{}, {}});
            return reg;
        };

        QuantumRegister reg = send_register(keys);
        for (int i = 1; i <= t; ++i) {
            // Ancilla always lands on wire n in a standalone session.
            const StateLabel& a_label = client.a_choices[i - 1];
            reg_extend(reg, a_label);
            reg_apply_zrot(reg, n, eng.thetas[i - 1], false);
            if (eng.anc_r[i - 1])
                reg_apply_pauli(reg, PauliString::single(n + 1, n, Axis::Z, +1));
            if (eng.anc_a[i - 1])
                reg_apply_pauli(reg, PauliString::single(n + 1, n, Axis::X, +1));
            keys.a.push_back(eng.anc_a[i - 1]);
            keys.r.push_back(eng.anc_r[i - 1]);
            run.log(Direction::ClientToServer,
                    {MessageKind::AncillaPayload, 1, 0, Angle{}, {}});
            if (run.record) run.tr.thetas.push_back(eng.thetas[i - 1]);

            CliffordCircuit server = embed(client.structure.layers[i - 1], n + 1);
            server.append(injection_gadget(1, n));
            reg_apply_circuit(reg, server);
            conj_keys(keys, server);

            if (auto it = eng.plan.find(i); it != eng.plan.end()) {
                // Remap the layer's ancilla factor from wire n+i-1 to wire n.
                const PauliString& e = it->second;
                PauliString local(n + 1);
                for (int q = 0; q < n; ++q) {
                    local.x[q] = e.x[q];
                    local.z[q] = e.z[q];
                }
                for (int q = n; q < e.k; ++q) {
                    if (!e.x[q] && !e.z[q]) continue;
                    if (q != n + i - 1)
                        throw std::invalid_argument(
                            "deviation touches a wire the server does not hold");
                    local.x[n] = e.x[q];
                    local.z[n] = e.z[q];
                }
                reg_apply_pauli(reg, local);
            }

            const int b_phys = reg_measure(reg, n, rng);
            run.log(Direction::ServerToClient,
                    {MessageKind::OutcomeBit, 0, b_phys, Angle{}, {}});
            const int b_dec = b_phys ^ keys.a[n];
            const bool magic = a_label.is_magic;
            const int phi = magic ? b_dec : 0;
            int delta = (phi + eng.thetas[i - 1].quarter_turns) % 4;
            if (keys.a[n - 1]) delta = (4 - delta) % 4;
            run.log(Direction::ClientToServer,
                    {MessageKind::AngleMessage, 0, 0, Angle(delta), {}});
            reg_apply_zrot(reg, n - 1, Angle(delta), true);
            if (magic) keys.a[n - 1] ^= static_cast<uint8_t>(b_dec);
            layer_b.push_back(b_dec);
            if (run.record) run.tr.decoded_bits.push_back(b_dec);

            // Server returns the data wires; client decrypts and re-encrypts.
            run.log(Direction::ServerToClient,
                    {MessageKind::ReturnPayload, n, 0, Angle{}, {}});
            plain = drop_collapsed_wire(reg.dense, n, b_phys);
            KeyState trunc;
            trunc.a.assign(keys.a.begin(), keys.a.begin() + n);
            trunc.r.assign(keys.r.begin(), keys.r.begin() + n);
            plain = apply_pauli(plain, pad_of(trunc));
            keys = KeyState::random(n, rng);
            reg = send_register(keys);
        }

        // Final blind measurements on the returned register.
        CliffordCircuit last = client.structure.layers[t];
        reg_apply_circuit(reg, last);
        conj_keys(keys, last);
        if (auto it = eng.plan.find(0); it != eng.plan.end())
            reg_apply_pauli(reg, restrict_width(it->second, n));
        if (behavior.kind == ServerBehavior::Kind::UnitaryDeviation) {
            for (int wq = 0; wq < behavior.w_priv; ++wq)
                reg_extend(reg, StateLabel::of(Axis::Z, +1));
            std::vector<int> wires(n);
            for (int q = 0; q < n; ++q) wires[q] = q;
            for (int wq = 0; wq < behavior.w_priv; ++wq) wires.push_back(n + wq);
            reg.dense = apply_unitary(reg.dense, behavior.unitary, wires);
        }

        MbdqcResult res;
        if (opts.prefinal_probe) {
            res.layer_outcomes = layer_b;
            res.final_register = std::move(reg);
            res.final_keys = keys;
            res.transcript = std::move(run.tr);
            return res;
        }
        std::vector<uint8_t> x_phys(n), x_dec(n);
        for (int q = 0; q < n; ++q) {
            x_phys[q] = static_cast<uint8_t>(reg_measure(reg, q, rng));
            x_dec[q] = x_phys[q] ^ keys.a[q];
        }
        run.log(Direction::ServerToClient,
                {MessageKind::OutcomeString, 0, 0, Angle{}, x_phys});
        res.output = x_dec;
        if (!eng.computation) {
            for (int i = 0; i < t; ++i) {
                if (opts.allow_mixed && client.a_choices[i].is_magic) continue;
                res.output.push_back(static_cast<uint8_t>(layer_b[i]));
            }
        }
        res.layer_outcomes = layer_b;
        if (run.record) run.tr.final_keys = keys;
        res.transcript = std::move(run.tr);
        res.final_register = std::move(reg);
        res.final_keys = keys;
        return res;
    }

    Engine eng(client, behavior, opts);
    eng.draw_secrets(rng);
    Engine::Run run = eng.start(opts.record_transcript);
    for (int i = 1; i <= eng.t; ++i) {
        const int anc = eng.layer_pre(run);
        const int b_phys = reg_measure(run.reg, anc, rng);
        eng.layer_post(run, b_phys);
    }
    eng.final_pre(run);
    return finish_sampled(eng, run, rng);
}

// ---------------------------------------------------------------------------
// Standalone sessions

InjectionResult blind_state_injection(const InjectionClientSpec& client,
                                      const std::vector<StateLabel>& rho_labels,
                                      const ServerBehavior& behavior, std::mt19937_64& rng,
                                      bool record_transcript) {
    const int n = client.c.k;
    if (static_cast<int>(rho_labels.size()) != n)
        throw std::invalid_argument("need one input label per data wire");
    if (client.index < 1)
        throw std::invalid_argument("injection index is 1-based");

    MbdqcClient mb;
    mb.structure = CliffordStructure(n, 1);
    mb.structure.layers[0] = client.c;
    mb.rho_labels = rho_labels;
    mb.a_choices = {client.a_choice};

    MbdqcOptions opts;
    opts.record_transcript = record_transcript;
    opts.prefinal_probe = true;  // no final measurement in Protocol 1
    opts.backend = Backend::Dense;

    MbdqcResult r = run_mbdqc(mb, behavior, rng, opts);

    InjectionResult out;
    out.transcript = std::move(r.transcript);
    if (record_transcript) out.transcript.final_keys = r.final_keys;

    // Final decryption: the server returns the data wires, the client strips
    // the collapsed ancilla and undoes the truncated pad.
    if (record_transcript)
        out.transcript.entries.push_back(
            {Direction::ServerToClient, {MessageKind::ReturnPayload, n, 0, Angle{}, {}}});
    const int b_dec = r.layer_outcomes.at(0);
    const int b_phys = b_dec ^ r.final_keys.a[n];
    StateVector data = drop_collapsed_wire(r.final_register.dense, n, b_phys);
    KeyState trunc;
    trunc.a.assign(r.final_keys.a.begin(), r.final_keys.a.begin() + n);
    trunc.r.assign(r.final_keys.r.begin(), r.final_keys.r.begin() + n);
    data = apply_pauli(data, pad_of(trunc));

    out.register_out.backend = Backend::Dense;
    out.register_out.dense = std::move(data);
    out.keys = KeyState::zeros(n);
    if (!client.a_choice.is_magic) out.b_prime = b_dec;
    return out;
}

BlindMeasureResult blind_measurements(const CliffordCircuit& c,
                                      const std::vector<StateLabel>& rho_labels,
                                      const ServerBehavior& behavior, std::mt19937_64& rng,
                                      bool record_transcript) {
    MbdqcClient mb;
    mb.structure = CliffordStructure(c.k, 0);
    mb.structure.layers[0] = c;
    mb.rho_labels = rho_labels;

    MbdqcOptions opts;
    opts.record_transcript = record_transcript;
    MbdqcResult r = run_mbdqc(mb, behavior, rng, opts);

    BlindMeasureResult out;
    out.x = std::move(r.output);
    out.transcript = std::move(r.transcript);
    return out;
}

// ---------------------------------------------------------------------------
// Ideal resources

StateVector ideal_computation_state(const CliffordStructure& structure,
                                    const std::vector<StateLabel>& rho_labels) {
    structure.validate();
    if (static_cast<int>(rho_labels.size()) != structure.n)
        throw std::invalid_argument("need one input label per data wire");
    StateVector psi = prepare(rho_labels);
    for (int i = 0; i < structure.t; ++i) {
        psi = apply_circuit(psi, structure.layers[i]);
        psi = apply_t(psi, structure.n - 1, false);
    }
    return apply_circuit(psi, structure.layers[structure.t]);
}

std::vector<double> ideal_magic_free_distribution(const MbdqcClient& client) {
    client.validate();
    if (client.computation_mode())
        throw std::invalid_argument("magic-free distribution needs stabilizer injections");
    std::vector<SinglePauliLabel> labels;
    for (const auto& l : client.rho_labels) labels.push_back(l.stab);
    for (const auto& a : client.a_choices) labels.push_back(a.stab);
    StabilizerState st = prepare_product(labels);
    st = apply_clifford(st, flatten_structure(client.structure));
    return z_distribution_exact(st);
}

ResourceOutput ideal_resource_oracle(ResourceKind kind, const MbdqcClient& client,
                                     std::mt19937_64& rng) {
    client.validate();
    ResourceOutput out;
    switch (kind) {
        case ResourceKind::HiddenMagicGate: {
            if (client.t() != 1)
                throw std::invalid_argument("hidden magic gate resource takes t=1");
            const int n = client.n();
            if (client.a_choices[0].is_magic) {
                StateVector psi = prepare(client.rho_labels);
                psi = apply_circuit(psi, client.structure.layers[0]);
                out.register_state = apply_t(psi, n - 1, false);
                return out;
            }
            StateVector psi = tensor(prepare(client.rho_labels),
                                     prepare({client.a_choices[0]}));
            CliffordCircuit g = embed(client.structure.layers[0], n + 1);
            g.append(injection_gadget(1, n));
            psi = apply_circuit(psi, g);
            auto [b, post] = measure(psi, n, rng);
            out.classical_bit = b;
            out.register_state = drop_collapsed_wire(post, n, b);
            return out;
        }
        case ResourceKind::BlindMeasurements: {
            if (client.t() != 0)
                throw std::invalid_argument("blind measurement resource takes t=0");
            StateVector psi = prepare(client.rho_labels);
            psi = apply_circuit(psi, client.structure.layers[0]);
            out.output_bits.resize(client.n());
            for (int q = 0; q < client.n(); ++q) {
                auto [b, post] = measure(psi, q, rng);
                out.output_bits[q] = static_cast<uint8_t>(b);
                psi = std::move(post);
            }
            return out;
        }
        case ResourceKind::MagicBlindDQC: {
            if (client.computation_mode()) {
                StateVector psi = ideal_computation_state(client.structure,
                                                          client.rho_labels);
                out.output_bits.resize(client.n());
                for (int q = 0; q < client.n(); ++q) {
                    auto [b, post] = measure(psi, q, rng);
                    out.output_bits[q] = static_cast<uint8_t>(b);
                    psi = std::move(post);
                }
                return out;
            }
            std::vector<SinglePauliLabel> labels;
            for (const auto& l : client.rho_labels) labels.push_back(l.stab);
            for (const auto& a : client.a_choices) labels.push_back(a.stab);
            StabilizerState st = prepare_product(labels);
            st = apply_clifford(st, flatten_structure(client.structure));
            const int k = client.n() + client.t();
            out.output_bits.resize(k);
            for (int q = 0; q < k; ++q) {
                MeasureResult mr = measure_z(st, q, rng);
                out.output_bits[q] = static_cast<uint8_t>(mr.outcome);
                st = std::move(mr.state);
            }
            return out;
        }
    }
    throw std::invalid_argument("unknown resource kind");
}

// ---------------------------------------------------------------------------
// Exact enumerations

namespace {

// Recursive branch walk shared by the exact analyses. Calls `leaf` with the
// run after the final measurement and the path probability.
template <typename Leaf>
void walk_branches(const Engine& eng, Engine::Run run, int next_layer, double weight,
                   double prune, const Leaf& leaf) {
    if (next_layer <= eng.t) {
        Engine::Run pre = std::move(run);
        const int anc = eng.layer_pre(pre);
        const double p1 = reg_prob_one(pre.reg, anc);
        for (int b = 0; b < 2; ++b) {
            const double pb = b ? p1 : 1.0 - p1;
            if (pb <= prune) continue;
            Engine::Run branch = pre;
            reg_collapse(branch.reg, anc, b);
            eng.layer_post(branch, b);
            walk_branches(eng, std::move(branch), next_layer + 1, weight * pb, prune,
                          leaf);
        }
        return;
    }
    Engine::Run fin = std::move(run);
    eng.final_pre(fin);
    // Fork the data-wire measurements.
    std::vector<uint8_t> x_dec(eng.n, 0);
    const std::function<void(Engine::Run&, int, double)> go =
        [&](Engine::Run& cur, int q, double w) {
            if (q == eng.n) {
                leaf(cur, x_dec, w);
                return;
            }
            const double p1 = reg_prob_one(cur.reg, q);
            for (int b = 0; b < 2; ++b) {
                const double pb = b ? p1 : 1.0 - p1;
                if (pb <= prune) continue;
                Engine::Run branch = cur;
                reg_collapse(branch.reg, q, b);
                x_dec[q] = static_cast<uint8_t>(b ^ cur.keys.a[q]);
                go(branch, q + 1, w * pb);
            }
        };
    go(fin, 0, weight);
}

}  // namespace

std::vector<double> decoded_output_distribution(const MbdqcClient& client,
                                                const ServerBehavior& behavior,
                                                const MbdqcOptions& opts) {
    if (opts.back_and_forth)
        throw std::invalid_argument("exact enumeration runs the no-back-and-forth protocol");
    Engine eng(client, behavior, opts);
    if (eng.secret_bits() > kSecretBitCap)
        throw std::invalid_argument("secret enumeration exceeds the bit cap");
    const int out_bits = eng.computation ? eng.n : eng.n + eng.t;
    std::vector<double> dist(std::size_t{1} << out_bits, 0.0);
    const std::uint64_t total = std::uint64_t{1} << eng.secret_bits();
    const double secret_w = 1.0 / static_cast<double>(total);
    for (std::uint64_t code = 0; code < total; ++code) {
        eng.set_secrets(code);
        Engine::Run run = eng.start(false);
        walk_branches(eng, std::move(run), 1, secret_w, 1e-15,
                      [&](const Engine::Run& fin, const std::vector<uint8_t>& x_dec,
                          double w) {
                          const std::vector<uint8_t> out = eng.assemble_output(fin, x_dec);
                          std::size_t idx = 0;
                          for (uint8_t b : out) idx = (idx << 1) | b;
                          dist[idx] += w;
                      });
    }
    return dist;
}

int server_view_step_count(int t) { return 3 * t + 2; }

namespace {

// Statevector of the server's holdings: quantum wires, then each received
// angle as two classical bits.
StateVector view_vector(const Engine::Run& run, int upto_angles) {
    StateVector v = run.reg.dense;
    for (int j = 0; j < upto_angles; ++j) {
        const int qt = run.angles_sent[j].quarter_turns;
        std::vector<StateLabel> bits = {
            StateLabel::of(Axis::Z, (qt >> 1) & 1 ? -1 : +1),
            StateLabel::of(Axis::Z, qt & 1 ? -1 : +1)};
        v = tensor(v, prepare(bits));
    }
    return v;
}

void accumulate(Eigen::MatrixXcd& acc, const StateVector& v, double w) {
    const auto d = static_cast<Eigen::Index>(v.dim());
    if (acc.rows() == 0) acc = Eigen::MatrixXcd::Zero(d, d);
    if (acc.rows() != d)
        throw std::runtime_error("server view dimension changed between branches");
    Eigen::VectorXcd col(d);
    for (Eigen::Index i = 0; i < d; ++i) col(i) = v.amp[i];
    acc += w * (col * col.adjoint());
}

}  // namespace

DensityMatrix server_view(const MbdqcClient& client, int step) {
    MbdqcOptions opts;
    opts.record_transcript = false;
    opts.backend = Backend::Dense;  // views need amplitudes in either mode
    const ServerBehavior honest = ServerBehavior::honest();
    Engine eng(client, honest, opts);
    const int t = eng.t;
    if (step < 0 || step >= server_view_step_count(t))
        throw std::invalid_argument("interception step out of range");
    if (eng.secret_bits() > kSecretBitCap)
        throw std::invalid_argument("secret enumeration exceeds the bit cap");

    Eigen::MatrixXcd acc;
    const std::uint64_t total = std::uint64_t{1} << eng.secret_bits();
    const double secret_w = 1.0 / static_cast<double>(total);

    // Walk the protocol, capturing at the requested step. Capture points:
    // 0: initial register; 3i-2: ancilla i received (pre-gates);
    // 3i-1: layer-i measurement done; 3i: angle i received (pre-rotation);
    // 3t+1: final measurement done.
    const std::function<void(const Engine&, Engine::Run, int, double)> walk =
        [&](const Engine& e, Engine::Run run, int layer, double w) {
            const int angles = static_cast<int>(run.angles_sent.size());
            if (layer <= t) {
                // Ancilla arrival happens inside layer_pre; to capture the
                // pre-gate view we rebuild that prefix manually.
                if (step == 3 * layer - 2) {
                    Engine::Run probe = run;
                    const int anc = e.n + layer - 1;
                    reg_extend(probe.reg, e.cl.a_choices[layer - 1]);
                    reg_apply_zrot(probe.reg, anc, e.thetas[layer - 1], false);
                    if (e.anc_r[layer - 1])
                        reg_apply_pauli(probe.reg,
                                        PauliString::single(anc + 1, anc, Axis::Z, +1));
                    if (e.anc_a[layer - 1])
                        reg_apply_pauli(probe.reg,
                                        PauliString::single(anc + 1, anc, Axis::X, +1));
                    accumulate(acc, view_vector(probe, angles), w);
                    return;
                }
                Engine::Run pre = std::move(run);
                const int anc = e.layer_pre(pre);
                const double p1 = reg_prob_one(pre.reg, anc);
                for (int b = 0; b < 2; ++b) {
                    const double pb = b ? p1 : 1.0 - p1;
                    if (pb <= 1e-15) continue;
                    Engine::Run branch = pre;
                    reg_collapse(branch.reg, anc, b);
                    if (step == 3 * layer - 1) {
                        accumulate(acc, view_vector(branch, angles), w * pb);
                        continue;
                    }
                    // Compute the angle message without yet rotating.
                    Engine::Run post = branch;
                    e.layer_post(post, b);
                    if (step == 3 * layer) {
                        // Angle received, rotation not yet applied: use the
                        // pre-rotation register with the new angle appended.
                        branch.angles_sent = post.angles_sent;
                        accumulate(acc, view_vector(branch, angles + 1), w * pb);
                        continue;
                    }
                    walk(e, std::move(post), layer + 1, w * pb);
                }
                return;
            }
            // step == 3t+1: final Clifford, then measure the data wires.
            Engine::Run fin = std::move(run);
            e.final_pre(fin);
            const std::function<void(Engine::Run&, int, double)> go =
                [&](Engine::Run& cur, int q, double wq) {
                    if (q == e.n) {
                        accumulate(acc, view_vector(cur, angles), wq);
                        return;
                    }
                    const double p1 = reg_prob_one(cur.reg, q);
                    for (int b = 0; b < 2; ++b) {
                        const double pb = b ? p1 : 1.0 - p1;
                        if (pb <= 1e-15) continue;
                        Engine::Run branch = cur;
                        reg_collapse(branch.reg, q, b);
                        go(branch, q + 1, wq * pb);
                    }
                };
            go(fin, 0, w);
        };

    for (std::uint64_t code = 0; code < total; ++code) {
        eng.set_secrets(code);
        Engine::Run run = eng.start(false);
        if (step == 0) {
            accumulate(acc, view_vector(run, 0), secret_w);
            continue;
        }
        walk(eng, std::move(run), 1, secret_w);
    }

    DensityMatrix view;
    view.k = static_cast<int>(std::lround(std::log2(static_cast<double>(acc.rows()))));
    view.m = std::move(acc);
    return view;
}

ReductionReport pauli_reduction_check(const MbdqcClient& client, const Eigen::MatrixXcd& u,
                                      int w_priv) {
    client.validate();
    const int n = client.n(), t = client.t();
    if (n != 1 || t > 1)
        throw std::invalid_argument("reduction check is implemented for n=1, t<=1");
    const auto d_data = static_cast<Eigen::Index>(std::size_t{1} << n);
    const auto d_work = static_cast<Eigen::Index>(std::size_t{1} << w_priv);
    if (u.rows() != d_data * d_work || u.cols() != d_data * d_work)
        throw std::invalid_argument("unitary must act on data wires + work wires");
    if ((u * u.adjoint() - Eigen::MatrixXcd::Identity(u.rows(), u.cols()))
            .cwiseAbs()
            .maxCoeff() > 1e-9)
        throw std::invalid_argument("adversary operator is not unitary");

    ReductionReport rep;
    rep.malicious = decoded_output_distribution(
        client, ServerBehavior::unitary_deviation(u, w_priv), {});

    const std::vector<PauliString> paulis = enumerate_paulis(n);
    rep.alpha_sq.resize(paulis.size());
    rep.predicted.assign(rep.malicious.size(), 0.0);
    for (std::size_t pi = 0; pi < paulis.size(); ++pi) {
        // M_E = Tr_data[(E^dag x 1) U] / 2^n; the weight is |M_E|0..0>|^2.
        const Eigen::MatrixXcd me = pauli_matrix(paulis[pi]);
        Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(d_work, d_work);
        for (Eigen::Index j = 0; j < d_work; ++j)
            for (Eigen::Index jp = 0; jp < d_work; ++jp) {
                std::complex<double> sum = 0;
                for (Eigen::Index d = 0; d < d_data; ++d)
                    for (Eigen::Index dp = 0; dp < d_data; ++dp)
                        sum += std::conj(me(dp, d)) * u(dp * d_work + j, d * d_work + jp);
                m(j, jp) = sum / static_cast<double>(d_data);
            }
        const double weight = m.col(0).squaredNorm();
        rep.alpha_sq[pi] = weight;
        if (weight < 1e-15) continue;

        PauliString e_full(n + t);
        for (int q = 0; q < n; ++q) {
            e_full.x[q] = paulis[pi].x[q];
            e_full.z[q] = paulis[pi].z[q];
        }
        const std::vector<double> dist = decoded_output_distribution(
            client, ServerBehavior::single_deviation(e_full, n, t), {});
        for (std::size_t i = 0; i < dist.size(); ++i)
            rep.predicted[i] += weight * dist[i];
    }

    double tv = 0;
    for (std::size_t i = 0; i < rep.malicious.size(); ++i)
        tv += std::abs(rep.malicious[i] - rep.predicted[i]);
    rep.distance = 0.5 * tv;
    rep.pass = rep.distance < 1e-6;
    return rep;
}

}  // namespace mbdqc
