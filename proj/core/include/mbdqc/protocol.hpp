#pragma once

#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "mbdqc/circuit.hpp"
#include "mbdqc/dense_sim.hpp"
#include "mbdqc/pauli.hpp"
#include "mbdqc/stabilizer_sim.hpp"

namespace mbdqc {

// The injection alphabet: the magic state T|+>, or one of the six
// single-qubit stabilizer states.
using InjectionChoice = StateLabel;

struct KeyState {
    std::vector<uint8_t> a;
    std::vector<uint8_t> r;

    int k() const { return static_cast<int>(a.size()); }
    static KeyState zeros(int k);
    static KeyState random(int k, std::mt19937_64& rng);
    void validate() const;
};

enum class Backend : uint8_t { Stabilizer, Dense };

// A simulated quantum register held by one party; exactly one backend slot
// is active. Measured wires stay in place (collapsed), so wire indices are
// stable for a whole session.
struct QuantumRegister {
    Backend backend = Backend::Stabilizer;
    StabilizerState stab;
    StateVector dense;

    int wires() const;
    static QuantumRegister product(Backend backend, const std::vector<StateLabel>& labels);
};

void reg_apply_circuit(QuantumRegister& reg, const CliffordCircuit& c);
void reg_apply_pauli(QuantumRegister& reg, const PauliString& p);
// Z(theta) = diag(1, i^theta) on wire q; exactly S^theta, so it exists on
// both backends.
void reg_apply_zrot(QuantumRegister& reg, int q, Angle angle, bool dagger);
// Append one fresh wire in the given state (wire index = previous width).
void reg_extend(QuantumRegister& reg, const StateLabel& label);
// Exact probability of outcome 1 on wire q (0, 1 or 1/2 on the stabilizer
// backend).
double reg_prob_one(const QuantumRegister& reg, int q);
void reg_collapse(QuantumRegister& reg, int q, int outcome);
int reg_measure(QuantumRegister& reg, int q, std::mt19937_64& rng);

// ---------------------------------------------------------------------------
// Messages and transcripts

enum class MessageKind : uint8_t {
    RegisterPayload,  // quantum, client -> server (qubit_count wires)
    AncillaPayload,   // quantum, client -> server (one wire)
    ReturnPayload,    // quantum, server -> client (back-and-forth mode only)
    OutcomeBit,       // classical, server -> client
    AngleMessage,     // classical, client -> server
    OutcomeString,    // classical, server -> client
    KeepRegisters     // classical marker, client -> server (no-back-and-forth)
};

enum class Direction : uint8_t { ClientToServer, ServerToClient };

struct ProtocolMessage {
    MessageKind kind = MessageKind::KeepRegisters;
    int qubit_count = 0;        // RegisterPayload / AncillaPayload / ReturnPayload
    int bit = 0;                // OutcomeBit
    Angle angle{};              // AngleMessage
    std::vector<uint8_t> bits;  // OutcomeString
};

struct TranscriptEntry {
    Direction dir = Direction::ClientToServer;
    ProtocolMessage msg;
};

struct SessionTranscript {
    std::vector<TranscriptEntry> entries;
    // Client-side secret log (never sent): sampled angles, decoded outcome
    // bits per layer, and the key trajectory endpoints.
    std::vector<Angle> thetas;
    std::vector<int> decoded_bits;
    KeyState initial_keys;
    KeyState final_keys;

    // Total qubits sent client -> server (the quantum communication cost).
    int quantum_payload_qubits() const;
    std::string dump() const;
};

// ---------------------------------------------------------------------------
// Server behaviors

enum class NoiseKind : uint8_t { UniformHarmful, FixedPauli, PerQubitDepolarizing };

// Deviation points: point i in 1..t means "immediately before the layer-i
// ancilla measurement" (the string must be identity on wires not yet sent);
// point 0 means "immediately before the final measurement layer" (after the
// last Clifford), where factors on already-measured ancilla wires act on
// collapsed wires and change no recorded outcome.
struct ServerBehavior {
    enum class Kind : uint8_t { Honest, PauliDeviation, UnitaryDeviation, NoisyHonest };
    Kind kind = Kind::Honest;

    std::map<int, PauliString> deviations;  // PauliDeviation, width n+t each

    // UnitaryDeviation: dense-only unitary applied at point 0 on the n data
    // wires plus w_priv private work wires appended in |0...0>; data wires
    // are the most significant index bits of `unitary`.
    Eigen::MatrixXcd unitary;
    int w_priv = 0;

    // NoisyHonest: with probability p_err per session, one deviation drawn by
    // noise_kind is applied (split across points like a single_deviation).
    // PerQubitDepolarizing instead draws, each session, an independent
    // uniform X/Y/Z on each wire with probability depol_p (p_err unused).
    double p_err = 0.0;
    NoiseKind noise_kind = NoiseKind::UniformHarmful;
    PauliString fixed_e;
    double depol_p = 0.0;

    static ServerBehavior honest();
    static ServerBehavior pauli_deviation(std::map<int, PauliString> devs);
    // Split one (n+t)-wire Pauli into per-point deviations: the factor on
    // ancilla wire n+i-1 lands at point i, data-wire factors at point 0.
    // This realizes the deferred-measurement normal form of a single E.
    static ServerBehavior single_deviation(const PauliString& e, int n, int t);
    static ServerBehavior unitary_deviation(Eigen::MatrixXcd u, int w_priv);
    static ServerBehavior noisy_uniform(double p_err);
    static ServerBehavior noisy_fixed(double p_err, PauliString e);
    static ServerBehavior noisy_depolarizing(double per_qubit_p);
};

// Uniform draw from the 4^k - 2^k strings with at least one X/Y factor.
PauliString random_harmful_pauli(int k, std::mt19937_64& rng);

// ---------------------------------------------------------------------------
// Protocol sessions

struct MbdqcClient {
    CliffordStructure structure;
    std::vector<StateLabel> rho_labels;       // n entries, stabilizer labels
    std::vector<InjectionChoice> a_choices;   // t entries

    int n() const { return structure.n; }
    int t() const { return structure.t; }
    // True iff every injection is T (computation mode); throws on a mixed
    // alphabet unless allow_mixed.
    bool computation_mode(bool allow_mixed = false) const;
    void validate() const;
};

struct MbdqcOptions {
    bool back_and_forth = false;     // re-encrypt and re-send between layers
    bool record_transcript = true;   // off for high-volume Monte Carlo
    bool allow_mixed = false;        // exploration only, no correctness contract
    bool prefinal_probe = false;     // stop before the final measurements
    // Stabilizer when possible, dense when anything requires it.
    std::optional<Backend> backend{};
};

struct MbdqcResult {
    // Decoded output: n bits (computation mode) or n+t bits (magic-free,
    // data bits then ancilla bits); empty when prefinal_probe stops early.
    std::vector<uint8_t> output;
    std::vector<int> layer_outcomes;  // decoded b' per layer
    SessionTranscript transcript;
    // Server-held register and current keys at the end (or at the probe
    // point); wire i is decrypted by the pad of key bit i.
    QuantumRegister final_register;
    KeyState final_keys;
};

MbdqcResult run_mbdqc(const MbdqcClient& client, const ServerBehavior& behavior,
                      std::mt19937_64& rng, const MbdqcOptions& opts = {});

// Standalone single-gadget session (full encrypt/decrypt cycle) on a fresh
// product input. The returned register is the decrypted n-wire output.
struct InjectionClientSpec {
    CliffordCircuit c;          // width n
    InjectionChoice a_choice;
    int index = 1;              // labels the classical output register n+index
};

struct InjectionResult {
    QuantumRegister register_out;      // decrypted, n wires
    KeyState keys;                     // final keys (all zero after decryption)
    std::optional<int> b_prime;        // classical output when A != T
    SessionTranscript transcript;
};

InjectionResult blind_state_injection(const InjectionClientSpec& client,
                                      const std::vector<StateLabel>& rho_labels,
                                      const ServerBehavior& behavior, std::mt19937_64& rng,
                                      bool record_transcript = true);

// Standalone blind-measurement session on a fresh product input.
struct BlindMeasureResult {
    std::vector<uint8_t> x;  // decoded
    SessionTranscript transcript;
};

BlindMeasureResult blind_measurements(const CliffordCircuit& c,
                                      const std::vector<StateLabel>& rho_labels,
                                      const ServerBehavior& behavior, std::mt19937_64& rng,
                                      bool record_transcript = true);

// ---------------------------------------------------------------------------
// Ideal resources (honest branch) - the comparison targets for tests

enum class ResourceKind : uint8_t { HiddenMagicGate, BlindMeasurements, MagicBlindDQC };

struct ResourceOutput {
    StateVector register_state;        // HiddenMagicGate
    std::optional<int> classical_bit;  // HiddenMagicGate with A != T
    std::vector<uint8_t> output_bits;  // BlindMeasurements / MagicBlindDQC
};

// HiddenMagicGate treats the structure's first layer as C (t must be 1);
// the other kinds use the full structure.
ResourceOutput ideal_resource_oracle(ResourceKind kind, const MbdqcClient& client,
                                     std::mt19937_64& rng);

// The plaintext state C_{t+1} . T_n . C_t ... T_n . C_1 [rho] that a
// computation-mode honest run must reproduce after decryption.
StateVector ideal_computation_state(const CliffordStructure& structure,
                                    const std::vector<StateLabel>& rho_labels);

// Exact Z-distribution of G[rho x rho_A] - the magic-free ideal output law.
std::vector<double> ideal_magic_free_distribution(const MbdqcClient& client);

// ---------------------------------------------------------------------------
// Exact analyses (enumeration over secrets and measurement branches)

// Exact decoded-output distribution of the protocol: averages over all pad
// keys and angles and walks every measurement branch with its exact
// probability. Supports Honest, PauliDeviation and UnitaryDeviation.
std::vector<double> decoded_output_distribution(const MbdqcClient& client,
                                                const ServerBehavior& behavior,
                                                const MbdqcOptions& opts = {});

// Everything the server holds after a given step, averaged exactly over all
// secrets and honest branch randomness. Steps: 0 = after the initial
// register send; for layer i in 1..t: 3i-2 = ancilla received, 3i-1 = layer
// measurement done, 3i = angle received; 3t+1 = after the final measurement.
// Received angles ride along as two-qubit diagonal registers appended after
// the quantum wires.
int server_view_step_count(int t);
DensityMatrix server_view(const MbdqcClient& client, int step);

// Empirical validation of the deviation-reduction claim at n=1, t <= 1: the
// exact key-averaged output distribution of a run attacked by `u` (acting on
// the data wires plus w_priv work wires at point 0) must equal the
// alpha^2-weighted mixture of single-Pauli-deviated honest runs.
struct ReductionReport {
    std::vector<double> alpha_sq;   // per enumerate_paulis(n) entry
    std::vector<double> malicious;  // exact decoded-output distribution
    std::vector<double> predicted;  // sum_E alpha_sq[E] * deviated honest law
    double distance = 0.0;          // total variation distance
    bool pass = false;              // distance < 1e-6
};

ReductionReport pauli_reduction_check(const MbdqcClient& client, const Eigen::MatrixXcd& u,
                                      int w_priv);

}  // namespace mbdqc
