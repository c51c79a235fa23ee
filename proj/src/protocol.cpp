#include "qdml/protocol.hpp"

#include <cmath>

#include "qdml/parallel.hpp"
#include "qdml/tolerances.hpp"

namespace qdml {

namespace {

Side block_owner(const Partition& p, Side block_side) {
    return block_side == Side::bob ? p.b_owner : p.a_owner;
}

// Re-target a unitary to a register widened by `offset` qubits on the
// significant end (ancilla insertion).
UnitarySpec shift_qubits(const UnitarySpec& u, int offset, int new_n) {
    if (const auto* r = std::get_if<PauliRotation>(&u.op)) {
        PauliRotation out = *r;
        out.pauli.labels.insert(out.pauli.labels.begin(), offset, Pauli::I);
        if (out.pauli.n_qubits() != new_n) throw StructuralError("shifted rotation span mismatch");
        return UnitarySpec{std::move(out)};
    }
    if (const auto* d = std::get_if<DenseMatrix>(&u.op)) {
        DenseMatrix out = *d;
        for (int& q : out.qubits) q += offset;
        return UnitarySpec{std::move(out)};
    }
    if (const auto* d = std::get_if<DiagonalPhase>(&u.op)) {
        DiagonalPhase out = *d;
        for (int& q : out.qubits) q += offset;
        return UnitarySpec{std::move(out)};
    }
    if (const auto* p = std::get_if<Permutation>(&u.op)) {
        Permutation out = *p;
        for (int& q : out.qubits) q += offset;
        return UnitarySpec{std::move(out)};
    }
    const auto& c = std::get<Controlled>(u.op);
    return UnitarySpec{Controlled{c.control + offset, c.value,
                                  std::make_shared<UnitarySpec>(shift_qubits(*c.inner, offset, new_n))}};
}

struct CutPlan {
    // ops strictly before the cut, in application order
    std::vector<const UnitarySpec*> head;
    // ops from the cut to the end of the circuit
    std::vector<const UnitarySpec*> tail;
};

CutPlan split_at_cut(const ModelSpec& m, const FeatureStateRequest& req) {
    if (req.layer < 0 || req.layer >= m.num_layers())
        throw StructuralError("feature cut layer out of range");
    const auto& cut_layer = m.layers[req.layer];
    const auto& cut_ops = req.side == Side::bob ? cut_layer.b_ops : cut_layer.a_ops;
    if (req.gate_cut < 0 || static_cast<std::size_t>(req.gate_cut) > cut_ops.size())
        throw StructuralError("feature gate cut out of range");
    CutPlan plan;
    auto push_all = [](std::vector<const UnitarySpec*>& dst, const std::vector<UnitarySpec>& ops) {
        for (const auto& u : ops) dst.push_back(&u);
    };
    for (int l = 0; l < m.num_layers(); ++l) {
        const auto& layer = m.layers[l];
        if (l < req.layer) {
            push_all(plan.head, layer.b_ops);
            push_all(plan.head, layer.a_ops);
        } else if (l > req.layer) {
            push_all(plan.tail, layer.b_ops);
            push_all(plan.tail, layer.a_ops);
        } else {
            const bool cut_in_b = req.side == Side::bob;
            if (cut_in_b) {
                for (std::size_t i = 0; i < layer.b_ops.size(); ++i)
                    (static_cast<int>(i) < req.gate_cut ? plan.head : plan.tail).push_back(&layer.b_ops[i]);
                push_all(plan.tail, layer.a_ops);
            } else {
                push_all(plan.head, layer.b_ops);
                for (std::size_t i = 0; i < layer.a_ops.size(); ++i)
                    (static_cast<int>(i) < req.gate_cut ? plan.head : plan.tail).push_back(&layer.a_ops[i]);
            }
        }
    }
    return plan;
}

}  // namespace

// ---- CommLedger ------------------------------------------------------------

void CommLedger::bump_round(Side speaker) {
    if (!have_last_ || last_ != speaker) ++rounds_;
    have_last_ = true;
    last_ = speaker;
}

void CommLedger::record(LedgerEvent ev) {
    if (!trace_) return;
    if (events_.size() >= trace_limit_) {
        trace_truncated_ = true;
        return;
    }
    events_.push_back(std::move(ev));
}

void CommLedger::send_quantum(Side speaker, std::uint64_t width_qubits, std::string_view event) {
    if (width_qubits == 0) throw ValidationError("quantum message needs positive width");
    bump_round(speaker);
    ++quantum_messages_;
    qubits_sent_ += width_qubits;
    record(LedgerEvent{std::string(event), speaker, width_qubits, 0, rounds_});
}

void CommLedger::send_classical(Side speaker, std::uint64_t bits, std::string_view event) {
    if (bits == 0) throw ValidationError("classical message needs positive size");
    bump_round(speaker);
    ++classical_messages_;
    classical_bits_ += bits;
    record(LedgerEvent{std::string(event), speaker, 0, bits, rounds_});
}

void CommLedger::add_theory(const std::string& key, double value) { theory_[key] += value; }

void CommLedger::merge(const CommLedger& other) {
    const std::uint64_t round_base = rounds_;
    quantum_messages_ += other.quantum_messages_;
    qubits_sent_ += other.qubits_sent_;
    classical_messages_ += other.classical_messages_;
    classical_bits_ += other.classical_bits_;
    rounds_ += other.rounds_;
    for (const auto& [k, v] : other.theory_) theory_[k] += v;
    if (other.have_last_) {
        have_last_ = true;
        last_ = other.last_;
    }
    if (trace_) {
        for (const auto& ev : other.events_) {
            LedgerEvent copy = ev;
            copy.round += round_base;
            record(copy);
        }
        if (other.trace_truncated_) trace_truncated_ = true;
    }
}

void CommLedger::set_trace(bool on, std::size_t limit) {
    trace_ = on;
    trace_limit_ = limit;
}

PrivacyReport privacy_report(const CommLedger& ledger) {
    PrivacyReport r;
    r.qubits_sent = ledger.qubits_sent();
    r.classical_bits = ledger.classical_bits();
    r.bits_bound = r.qubits_sent + r.classical_bits;
    return r;
}

// ---- inference -------------------------------------------------------------

InferenceResult run_inference(const ModelSpec& model, const Partition& partition,
                              std::span<const double> params, std::span<const double> data,
                              int shots, RngStream& rng, const InferenceOptions& opts, bool trace) {
    if (shots < 1) throw ValidationError("inference needs at least one shot");
    validate_model(model);

    InferenceResult out;
    if (trace) out.ledger.set_trace(true);
    const int n = model.n_qubits;

    // The state itself is shot-independent; only measurement outcomes vary.
    const StateVector phi = forward(model, params, data);
    out.exact_loss = expectation(phi, model.loss_obs);

    // Alice encodes, so she holds the register first.
    const Side measurer = block_owner(partition, Side::alice);
    out.samples.reserve(shots);
    long long sum = 0;
    for (int shot = 0; shot < shots; ++shot) {
        Side holder = Side::alice;
        for (int l = 0; l < model.num_layers(); ++l) {
            for (Side block : {Side::bob, Side::alice}) {
                const Side owner = block_owner(partition, block);
                if (owner != holder) {
                    out.ledger.send_quantum(holder, n, "bounce");
                    holder = owner;
                }
            }
        }
        if (holder != measurer) {
            out.ledger.send_quantum(holder, n, "bounce");
            holder = measurer;
        }
        const int m = sample_pm(phi, model.loss_obs, rng);
        out.samples.push_back(m);
        sum += m;
        if (opts.share_results) {
            // Alice always participates (she encodes); Bob only if he owns a
            // block. No bit is owed to a party that never took part.
            const bool peer_participates =
                measurer == Side::bob || block_owner(partition, Side::bob) == Side::bob ||
                block_owner(partition, Side::alice) == Side::bob;
            if (peer_participates) out.ledger.send_classical(measurer, 1, "result_bit");
        }
    }
    out.estimate = static_cast<double>(sum) / shots;
    return out;
}

// ---- feature states --------------------------------------------------------

FeatureState prepare_feature_state(const ModelSpec& model, const Partition& partition,
                                   std::span<const double> params, std::span<const double> data,
                                   const FeatureStateRequest& request, bool trace) {
    validate_model(model);
    const int n = model.n_qubits;
    const int ext_n = n + 1;
    const CutPlan plan = split_at_cut(model, request);

    FeatureState out;
    if (trace) out.ledger.set_trace(true);

    // Extended register: ancilla on qubit 0, data register behind it.
    StateVector psi = encode(model.encoder, n);
    StateVector ext;
    ext.n_qubits = ext_n;
    ext.amps.assign(std::uint64_t{1} << ext_n, cplx{0, 0});
    std::copy(psi.amps.begin(), psi.amps.end(), ext.amps.begin());

    const ApplyCtx fwd{params, data, -1, 0.0, false};
    const ApplyCtx bwd{params, data, -1, 0.0, true};
    for (const auto* u : plan.head) apply_inplace(ext, shift_qubits(*u, 1, ext_n), fwd);

    // Split into the two branches, run the tail on both, reflect the loss
    // observable into the |1> branch, and undo the tail.
    const double r = 1.0 / std::sqrt(2.0);
    const std::vector<cplx> h2 = {r, r, r, -r};
    apply_inplace(ext, UnitarySpec{DenseMatrix{{0}, h2}}, fwd);
    for (const auto* u : plan.tail) apply_inplace(ext, shift_qubits(*u, 1, ext_n), fwd);
    PauliString obs = model.loss_obs;
    obs.labels.insert(obs.labels.begin(), Pauli::I);
    apply_pauli_inplace(ext, obs, ControlScope{qubit_mask(ext_n, 0), qubit_mask(ext_n, 0)});
    for (auto it = plan.tail.rbegin(); it != plan.tail.rend(); ++it)
        apply_inplace(ext, shift_qubits(**it, 1, ext_n), bwd);

    // Protocol cost of one copy: the widened register makes the same tour as
    // a forward pass, so the canonical partition pays 2L messages of width
    // n+1, alternating and starting with Alice.
    Side holder = Side::alice;
    for (int l = 0; l < model.num_layers(); ++l) {
        for (Side block : {Side::bob, Side::alice}) {
            const Side owner = block_owner(partition, block);
            if (owner != holder) {
                out.ledger.send_quantum(holder, ext_n, "feature_bounce");
                holder = owner;
            }
        }
    }

    out.state = std::move(ext);
    return out;
}

// ---- data-parallel preparation ----------------------------------------------

DataParallelResult dataparallel_prepare(const std::vector<double>& x_a,
                                        const std::vector<double>& x_b, int rows, int cols,
                                        bool trace) {
    EncoderSpec enc;
    enc.kind = EncoderSpec::Kind::data_parallel;
    enc.rows = rows;
    enc.cols = cols;
    enc.xa = x_a;
    enc.xb = x_b;
    std::uint64_t total = static_cast<std::uint64_t>(rows) * cols;
    int n = 0;
    while ((std::uint64_t{1} << n) < total) ++n;

    DataParallelResult out;
    if (trace) out.ledger.set_trace(true);
    StateVector s = encode(enc, n);  // Alice's block plus the weighted marker

    out.ledger.send_quantum(Side::alice, n, "block_transfer");

    double nb2 = 0.0;
    for (double v : x_b) nb2 += v * v;
    if (nb2 > 0.0) {
        // Bob's reflection u = |marker> - |w>, w his normalized block laid
        // out over the second half of the rows; fixes Alice's subspace.
        const std::uint64_t marker = static_cast<std::uint64_t>(rows / 2) * cols;
        const double inv = 1.0 / std::sqrt(nb2);
        std::vector<double> u(total, 0.0);
        for (int i = 0; i < rows / 2; ++i)
            for (int j = 0; j < cols; ++j)
                u[(static_cast<std::uint64_t>(rows / 2) + i) * cols + j] -= inv * x_b[i * cols + j];
        u[marker] += 1.0;
        double uu = 0.0;
        for (double v : u) uu += v * v;
        if (uu > 1e-24) {  // w == |marker> needs no rotation
            cplx us = 0.0;
            for (std::uint64_t i = 0; i < total; ++i) us += u[i] * s.amps[i];
            const cplx f = 2.0 * us / uu;
            for (std::uint64_t i = 0; i < total; ++i) s.amps[i] -= f * u[i];
        }
    }
    s.check_normalized(tol::norm);
    out.state = std::move(s);
    return out;
}

}  // namespace qdml
