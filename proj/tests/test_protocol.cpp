#include <cmath>
#include <map>

#include "doctest.h"
#include "mbdqc/dense_sim.hpp"
#include "mbdqc/protocol.hpp"
#include "mbdqc/rng.hpp"
#include "test_util.hpp"

using namespace mbdqc;
using mbdqc::testutil::max_abs_diff;
using mbdqc::testutil::random_circuit;
using mbdqc::testutil::random_product_input;
using mbdqc::testutil::random_structure;
using mbdqc::testutil::state_mismatch;

namespace {

// n=1, t=1 session whose decoded law is frozen below: H,S before the
// injection and H after it, on input |0>.
MbdqcClient frozen_client() {
    CliffordStructure s(1, 1);
    s.layers[0].append(gate1(GateKind::H, 0));
    s.layers[0].append(gate1(GateKind::S, 0));
    s.layers[1].append(gate1(GateKind::H, 0));
    return MbdqcClient{s, {StateLabel::parse("0")}, {StateLabel::magic()}};
}

constexpr double kFrozenP0 = 0.1464466094067262;
constexpr double kFrozenP1 = 0.8535533905932737;

int count_kind(const SessionTranscript& tr, MessageKind kind) {
    int c = 0;
    for (const auto& e : tr.entries) c += e.msg.kind == kind;
    return c;
}

}  // namespace

TEST_SUITE("protocol") {

TEST_CASE("key state basics") {
    const KeyState z = KeyState::zeros(3);
    CHECK(z.k() == 3);
    for (int i = 0; i < 3; ++i) {
        CHECK(z.a[i] == 0);
        CHECK(z.r[i] == 0);
    }
    z.validate();

    std::mt19937_64 r1 = substream(51, "keys");
    std::mt19937_64 r2 = substream(51, "keys");
    const KeyState k1 = KeyState::random(4, r1);
    const KeyState k2 = KeyState::random(4, r2);
    CHECK(k1.a == k2.a);
    CHECK(k1.r == k2.r);

    KeyState bad = KeyState::zeros(2);
    bad.r.push_back(0);
    CHECK_THROWS_AS(bad.validate(), std::runtime_error);
}

TEST_CASE("register backends agree") {
    std::mt19937_64 rng = substream(52, "reg-backends");
    for (int rep = 0; rep < 25; ++rep) {
        const int k = 1 + static_cast<int>(rand_index(rng, 3));
        const auto labels = random_product_input(k, rng);
        QuantumRegister rs = QuantumRegister::product(Backend::Stabilizer, labels);
        QuantumRegister rd = QuantumRegister::product(Backend::Dense, labels);
        CHECK(rs.wires() == k);
        CHECK(rd.wires() == k);

        const CliffordCircuit c = random_circuit(k, 6, rng);
        reg_apply_circuit(rs, c);
        reg_apply_circuit(rd, c);
        const Angle a(static_cast<int>(rand_index(rng, 4)));
        reg_apply_zrot(rs, 0, a, false);
        reg_apply_zrot(rd, 0, a, false);
        const PauliString pad = enumerate_paulis(k)[rand_index(rng, std::size_t{1} << (2 * k))];
        reg_apply_pauli(rs, pad);
        reg_apply_pauli(rd, pad);

        for (int q = 0; q < k; ++q)
            CHECK(std::abs(reg_prob_one(rs, q) - reg_prob_one(rd, q)) < 1e-12);

        // Collapse the first wire the same way on both and compare again.
        const double p1 = reg_prob_one(rs, 0);
        const int bit = p1 > 0.5 ? 1 : (p1 < 0.5 ? 0 : 1);
        reg_collapse(rs, 0, bit);
        reg_collapse(rd, 0, bit);
        for (int q = 0; q < k; ++q)
            CHECK(std::abs(reg_prob_one(rs, q) - reg_prob_one(rd, q)) < 1e-12);
    }
}

TEST_CASE("register extension appends a fresh wire") {
    QuantumRegister reg = QuantumRegister::product(Backend::Stabilizer,
                                                   {StateLabel::parse("0")});
    reg_extend(reg, StateLabel::parse("+X"));
    CHECK(reg.wires() == 2);
    CHECK(reg_prob_one(reg, 0) == 0.0);
    CHECK(reg_prob_one(reg, 1) == 0.5);
}

TEST_CASE("frozen computation law") {
    const auto dist = decoded_output_distribution(frozen_client(), ServerBehavior::honest());
    REQUIRE(dist.size() == 2);
    CHECK(std::abs(dist[0] - kFrozenP0) < 1e-12);
    CHECK(std::abs(dist[1] - kFrozenP1) < 1e-12);
}

TEST_CASE("an ancilla bit flip at the injection flips the frozen law") {
    const PauliString e = PauliString::single(2, 1, Axis::X);
    const auto behavior = ServerBehavior::single_deviation(e, 1, 1);
    const auto dist = decoded_output_distribution(frozen_client(), behavior);
    REQUIRE(dist.size() == 2);
    CHECK(std::abs(dist[0] - kFrozenP1) < 1e-12);
    CHECK(std::abs(dist[1] - kFrozenP0) < 1e-12);
}

TEST_CASE("unitary deviation by a pauli matrix equals the pauli deviation") {
    const MbdqcClient client = frozen_client();
    const PauliString e = PauliString::single(2, 0, Axis::Y);  // data wire only
    const auto as_pauli =
        decoded_output_distribution(client, ServerBehavior::single_deviation(e, 1, 1));
    // The unitary attacker acts on the n data wires (plus w_priv work wires).
    const Eigen::MatrixXcd u = pauli_matrix(PauliString::single(1, 0, Axis::Y));
    const auto as_unitary =
        decoded_output_distribution(client, ServerBehavior::unitary_deviation(u, 0));
    CHECK(max_abs_diff(as_pauli, as_unitary) < 1e-12);
}

TEST_CASE("magic-free sessions reproduce the plain circuit law") {
    std::mt19937_64 rng = substream(53, "magic-free");
    for (int rep = 0; rep < 8; ++rep) {
        const int n = 1 + static_cast<int>(rand_index(rng, 2));
        const int t = static_cast<int>(rand_index(rng, 2));
        const CliffordStructure s = random_structure(n, t, 4, rng);
        std::vector<StateLabel> a_choices;
        for (int i = 0; i < t; ++i)
            a_choices.push_back(StateLabel::of(testutil::random_stab_label(rng)));
        const MbdqcClient client{s, random_product_input(n, rng), a_choices};
        const auto law = decoded_output_distribution(client, ServerBehavior::honest());
        const auto ideal = ideal_magic_free_distribution(client);
        REQUIRE(law.size() == (std::size_t{1} << (n + t)));
        CHECK(max_abs_diff(law, ideal) < 1e-12);
    }
}

TEST_CASE("ideal computation state applies the hidden gate to the last data wire") {
    std::mt19937_64 rng = substream(54, "ideal-state");
    for (int rep = 0; rep < 10; ++rep) {
        const int n = 1 + static_cast<int>(rand_index(rng, 2));
        const int t = 1 + static_cast<int>(rand_index(rng, 2));
        const CliffordStructure s = random_structure(n, t, 4, rng);
        const auto labels = random_product_input(n, rng);

        StateVector psi = prepare(labels);
        for (int i = 0; i < t; ++i) {
            psi = apply_circuit(psi, s.layers[i]);
            psi = apply_t(psi, n - 1);
        }
        psi = apply_circuit(psi, s.layers[t]);

        CHECK(state_mismatch(psi, ideal_computation_state(s, labels)) < 1e-12);
    }
}

TEST_CASE("transcript shape and quantum cost") {
    std::mt19937_64 rng = substream(55, "transcript");
    const int n = 2, t = 2;
    const CliffordStructure s = random_structure(n, t, 3, rng);
    const MbdqcClient client{s, random_product_input(n, rng),
                             {StateLabel::magic(), StateLabel::magic()}};

    const MbdqcResult res = run_mbdqc(client, ServerBehavior::honest(), rng);
    const SessionTranscript& tr = res.transcript;
    CHECK(count_kind(tr, MessageKind::RegisterPayload) == 1);
    CHECK(count_kind(tr, MessageKind::AncillaPayload) == t);
    CHECK(count_kind(tr, MessageKind::OutcomeBit) == t);
    CHECK(count_kind(tr, MessageKind::AngleMessage) == t);
    CHECK(count_kind(tr, MessageKind::KeepRegisters) == t);
    CHECK(count_kind(tr, MessageKind::OutcomeString) == 1);
    CHECK(count_kind(tr, MessageKind::ReturnPayload) == 0);
    CHECK(tr.quantum_payload_qubits() == n + t);
    CHECK(static_cast<int>(tr.thetas.size()) == t);
    CHECK(static_cast<int>(tr.decoded_bits.size()) == t);
    CHECK(static_cast<int>(res.output.size()) == n);

    MbdqcOptions bf;
    bf.back_and_forth = true;
    const MbdqcResult res_bf = run_mbdqc(client, ServerBehavior::honest(), rng, bf);
    CHECK(res_bf.transcript.quantum_payload_qubits() == n + t * (1 + n));
    CHECK(count_kind(res_bf.transcript, MessageKind::ReturnPayload) > 0);
    CHECK(count_kind(res_bf.transcript, MessageKind::KeepRegisters) == 0);
}

TEST_CASE("session replay is deterministic in the seed") {
    std::mt19937_64 rng = substream(56, "replay");
    const CliffordStructure s = random_structure(2, 1, 4, rng);
    const MbdqcClient client{s, random_product_input(2, rng), {StateLabel::magic()}};

    std::mt19937_64 r1 = substream(57, "replay-run");
    std::mt19937_64 r2 = substream(57, "replay-run");
    const MbdqcResult a = run_mbdqc(client, ServerBehavior::honest(), r1);
    const MbdqcResult b = run_mbdqc(client, ServerBehavior::honest(), r2);
    CHECK(a.transcript.dump() == b.transcript.dump());
    CHECK(a.output == b.output);
    CHECK(a.layer_outcomes == b.layer_outcomes);
}

TEST_CASE("blind injection of a magic gate matches the ideal resource") {
    std::mt19937_64 rng = substream(58, "injection");
    CliffordCircuit c(1);
    c.append(gate1(GateKind::H, 0));

    InjectionClientSpec spec{c, StateLabel::magic(), 1};
    const InjectionResult got =
        blind_state_injection(spec, {StateLabel::parse("0")}, ServerBehavior::honest(), rng);
    CHECK(!got.b_prime.has_value());
    CHECK(got.register_out.wires() == 1);
    for (uint8_t bit : got.keys.a) CHECK(bit == 0);
    for (uint8_t bit : got.keys.r) CHECK(bit == 0);

    // T H |0> = T |+>, frozen amplitudes up to global phase.
    CliffordStructure s(1, 1);
    s.layers[0] = c;
    const MbdqcClient oracle_client{s, {StateLabel::parse("0")}, {StateLabel::magic()}};
    const ResourceOutput want =
        ideal_resource_oracle(ResourceKind::HiddenMagicGate, oracle_client, rng);
    CHECK(state_mismatch(got.register_out.dense, want.register_state) < 1e-9);
}

TEST_CASE("blind injection of a z eigenstate yields a classical bit") {
    std::mt19937_64 rng = substream(59, "injection-classical");
    CliffordCircuit c(1);
    c.append(gate1(GateKind::X, 0));  // data becomes |1> deterministically

    InjectionClientSpec spec{c, StateLabel::parse("0"), 1};
    const InjectionResult got =
        blind_state_injection(spec, {StateLabel::parse("0")}, ServerBehavior::honest(), rng);
    REQUIRE(got.b_prime.has_value());
    CHECK(*got.b_prime == 1);
    // The injected |0> now sits on the data wire.
    CHECK(reg_prob_one(got.register_out, 0) < 1e-12);
}

TEST_CASE("blind measurements decode the circuit outcome") {
    std::mt19937_64 rng = substream(60, "blind-measure");
    CliffordCircuit c(2);
    c.append(gate1(GateKind::X, 0));
    for (int rep = 0; rep < 20; ++rep) {
        const BlindMeasureResult res = blind_measurements(
            c, {StateLabel::parse("0"), StateLabel::parse("1")}, ServerBehavior::honest(), rng);
        REQUIRE(res.x.size() == 2);
        CHECK(res.x[0] == 1);
        CHECK(res.x[1] == 1);
    }

    // A Hadamard output really is random.
    CliffordCircuit h(1);
    h.append(gate1(GateKind::H, 0));
    int ones = 0;
    for (int rep = 0; rep < 200; ++rep)
        ones += blind_measurements(h, {StateLabel::parse("0")}, ServerBehavior::honest(), rng)
                    .x[0];
    CHECK(ones > 50);
    CHECK(ones < 150);
}

TEST_CASE("server view is maximally mixed at every step") {
    const MbdqcClient client = frozen_client();
    const int steps = server_view_step_count(client.t());
    CHECK(steps == 5);
    for (int step = 0; step < steps; ++step) {
        const DensityMatrix view = server_view(client, step);
        const auto d = view.m.rows();
        const Eigen::MatrixXcd mixed =
            Eigen::MatrixXcd::Identity(d, d) / static_cast<double>(d);
        CHECK((view.m - mixed).norm() < 1e-12);
    }
}

TEST_CASE("reduction report on plain deviations") {
    CliffordStructure s(1, 0);
    s.layers[0].append(gate1(GateKind::H, 0));
    const MbdqcClient client{s, {StateLabel::parse("0")}, {}};

    const ReductionReport id_report =
        pauli_reduction_check(client, Eigen::MatrixXcd::Identity(2, 2), 0);
    CHECK(id_report.pass);
    CHECK(std::abs(id_report.alpha_sq[0] - 1.0) < 1e-12);
    CHECK(id_report.distance < 1e-12);

    // A pure X attack concentrates all weight on the X coefficient.
    const PauliString x = PauliString::single(1, 0, Axis::X);
    const ReductionReport x_report = pauli_reduction_check(client, pauli_matrix(x), 0);
    CHECK(x_report.pass);
    double weight_on_x = 0;
    const auto paulis = enumerate_paulis(1);
    for (std::size_t i = 0; i < paulis.size(); ++i)
        if (paulis[i].str() == x.str()) weight_on_x = x_report.alpha_sq[i];
    CHECK(std::abs(weight_on_x - 1.0) < 1e-12);
}

TEST_CASE("random harmful paulis always carry a bit flip") {
    std::mt19937_64 rng = substream(61, "harmful");
    for (int rep = 0; rep < 200; ++rep) {
        const PauliString e = random_harmful_pauli(3, rng);
        CHECK(e.k == 3);
        CHECK(is_harmful(e));
        CHECK(e.phase == 0);
    }
}

TEST_CASE("noisy behaviors are sampling only") {
    const MbdqcClient client = frozen_client();
    CHECK_THROWS_AS(
        decoded_output_distribution(client, ServerBehavior::noisy_uniform(0.1)),
        std::invalid_argument);

    // But sampled sessions run fine and stay within the output alphabet.
    std::mt19937_64 rng = substream(62, "noisy-run");
    const auto behavior = ServerBehavior::noisy_fixed(0.5, PauliString::from_axes("XI"));
    for (int rep = 0; rep < 10; ++rep) {
        const MbdqcResult res = run_mbdqc(client, behavior, rng);
        REQUIRE(res.output.size() == 1);
        CHECK((res.output[0] == 0 || res.output[0] == 1));
    }
}

TEST_CASE("prefinal probe stops before the output measurement") {
    std::mt19937_64 rng = substream(63, "probe");
    MbdqcOptions opts;
    opts.prefinal_probe = true;
    opts.backend = Backend::Dense;
    const MbdqcResult res = run_mbdqc(frozen_client(), ServerBehavior::honest(), rng, opts);
    CHECK(res.output.empty());
    CHECK(res.final_register.wires() == 2);
    CHECK(res.final_keys.k() == 2);

    // Decrypting with the final keys must reproduce the ideal state on the
    // data wire (the measured ancilla wire is collapsed in place).
    QuantumRegister reg = res.final_register;
    PauliString pad = PauliString::identity(2);
    for (int q = 0; q < 2; ++q) {
        pad.x[q] = res.final_keys.a[q] != 0;
        pad.z[q] = res.final_keys.r[q] != 0;
    }
    reg_apply_pauli(reg, pad);
    const MbdqcClient client = frozen_client();
    const StateVector ideal = ideal_computation_state(client.structure, client.rho_labels);
    // Strip the collapsed ancilla wire and compare.
    const double p1 = reg_prob_one(reg, 1);
    REQUIRE((p1 < 1e-9 || p1 > 1 - 1e-9));
    const StateVector data = drop_collapsed_wire(reg.dense, 1, p1 > 0.5 ? 1 : 0);
    CHECK(state_mismatch(data, ideal) < 1e-9);
}

}  // TEST_SUITE
