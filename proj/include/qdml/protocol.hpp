#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "qdml/circuits.hpp"
#include "qdml/rng.hpp"
#include "qdml/statevec.hpp"

namespace qdml {

// Who owns which block of each layer. The canonical split gives Bob the B
// blocks and Alice the A blocks; messages are derived from ownership, so a
// degenerate single-owner partition simply sends nothing.
struct Partition {
    Side b_owner = Side::bob;
    Side a_owner = Side::alice;
};

struct LedgerEvent {
    std::string name;
    Side speaker = Side::alice;
    std::uint64_t qubits = 0;  // width of a quantum message, 0 for classical
    std::uint64_t bits = 0;    // classical payload, 0 for quantum
    std::uint64_t round = 0;
};

// Exact communication accounting. Counters only ever grow; merging adds
// counters (merged transcripts are treated as independent sessions, which
// keeps merge associative and commutative). A round is a maximal run of
// consecutive messages by one speaker.
class CommLedger {
public:
    void send_quantum(Side speaker, std::uint64_t width_qubits, std::string_view event);
    void send_classical(Side speaker, std::uint64_t bits, std::string_view event);
    void add_theory(const std::string& key, double value);
    void merge(const CommLedger& other);

    std::uint64_t quantum_messages() const { return quantum_messages_; }
    std::uint64_t qubits_sent() const { return qubits_sent_; }
    std::uint64_t classical_messages() const { return classical_messages_; }
    std::uint64_t classical_bits() const { return classical_bits_; }
    std::uint64_t rounds() const { return rounds_; }
    const std::map<std::string, double>& theory() const { return theory_; }

    // Event tracing is off by default; large drivers leave it off and the
    // CLI enables it with a cap.
    void set_trace(bool on, std::size_t limit = 1 << 20);
    const std::vector<LedgerEvent>& events() const { return events_; }
    bool trace_truncated() const { return trace_truncated_; }

private:
    void bump_round(Side speaker);
    void record(LedgerEvent ev);

    std::uint64_t quantum_messages_ = 0;
    std::uint64_t qubits_sent_ = 0;
    std::uint64_t classical_messages_ = 0;
    std::uint64_t classical_bits_ = 0;
    std::uint64_t rounds_ = 0;
    bool have_last_ = false;
    Side last_ = Side::alice;
    std::map<std::string, double> theory_;
    bool trace_ = false;
    std::size_t trace_limit_ = 0;
    bool trace_truncated_ = false;
    std::vector<LedgerEvent> events_;
};

// Holevo-style bound on what a transcript can reveal: each qubit carries at
// most one classical bit, so bits_bound = qubits_sent + classical_bits.
struct PrivacyReport {
    std::uint64_t qubits_sent = 0;
    std::uint64_t classical_bits = 0;
    std::uint64_t bits_bound = 0;
    std::string basis = "holevo: at most 1 classical bit per transmitted qubit";
};

PrivacyReport privacy_report(const CommLedger& ledger);

struct InferenceOptions {
    bool share_results = true;  // Alice sends each outcome bit to Bob
};

struct InferenceResult {
    double estimate = 0.0;
    double exact_loss = 0.0;
    std::vector<int> samples;
    CommLedger ledger;
};

// Shot-based estimate of the loss. Each shot bounces the register once per
// layer (owner of the B block, then owner of the A block), so the canonical
// partition costs 2L messages of width n per shot; the A-block owner
// measures, and optionally returns one classical bit per shot.
InferenceResult run_inference(const ModelSpec& model, const Partition& partition,
                              std::span<const double> params, std::span<const double> data,
                              int shots, RngStream& rng, const InferenceOptions& opts = {},
                              bool trace = false);

// Cut location for a feature state: after `gate_cut` ops of the given
// side's block in `layer` (0 = before the first op of that block).
struct FeatureStateRequest {
    Side side = Side::alice;
    int layer = 0;
    int gate_cut = 0;
};

struct FeatureState {
    StateVector state;  // n+1 qubits; ancilla is qubit 0
    CommLedger ledger;
};

// (|0>|mu_cut> + |1>|nu_cut>)/sqrt(2): mu_cut is the forward state through
// the cut, nu_cut the loss observable pulled back through the adjoint tail.
// The ledger charges the protocol cost of one copy: 2L messages of width
// n+1, alternating from the B-block owner's side.
FeatureState prepare_feature_state(const ModelSpec& model, const Partition& partition,
                                   std::span<const double> params, std::span<const double> data,
                                   const FeatureStateRequest& request, bool trace = false);

struct DataParallelResult {
    StateVector state;
    CommLedger ledger;
};

// Two-party amplitude encoding of a row-split matrix [x_a; x_b] (each block
// rows/2 x cols, jointly unit Frobenius norm). Alice encodes her block plus
// a weighted marker, ships the register once, and Bob's reflection rotates
// the marker into his block: one quantum message of width log2(rows*cols).
DataParallelResult dataparallel_prepare(const std::vector<double>& x_a,
                                        const std::vector<double>& x_b, int rows, int cols,
                                        bool trace = false);

}  // namespace qdml
