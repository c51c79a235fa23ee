#include "qdml/gradients.hpp"

#include <cmath>
#include <numbers>

#include "qdml/tolerances.hpp"

namespace qdml {

namespace {

const PauliRotation& slot_rotation(const ModelSpec& m, int slot) {
    if (slot < 0 || slot >= m.num_params()) throw ValidationError("parameter slot out of range");
    const ParamSite& site = m.param_sites[slot];
    if (site.layer < 0 || site.layer >= m.num_layers())
        throw StructuralError("parameter site layer out of range");
    const auto& ops =
        site.side == Side::bob ? m.layers[site.layer].b_ops : m.layers[site.layer].a_ops;
    if (site.pos < 0 || site.pos >= static_cast<int>(ops.size()))
        throw StructuralError("parameter site position out of range");
    const auto* rot = std::get_if<PauliRotation>(&ops[site.pos].op);
    if (!rot || rot->slot != slot)
        throw UnsupportedSlotError("trainable slot does not point at its rotation gate");
    return *rot;
}

PauliString with_ancilla(Pauli anc, const PauliString& p) {
    PauliString out = p;
    out.labels.insert(out.labels.begin(), anc);
    return out;
}

// State right before the last A block (everything through B_L applied).
StateVector mu_last(const ModelSpec& m, std::span<const double> params,
                    std::span<const double> data) {
    StateVector s = encode(m.encoder, m.n_qubits);
    const ApplyCtx ctx{params, data, -1, 0.0, false};
    for (int l = 0; l < m.num_layers(); ++l) {
        for (const auto& u : m.layers[l].b_ops) apply_inplace(s, u, ctx);
        if (l + 1 < m.num_layers())
            for (const auto& u : m.layers[l].a_ops) apply_inplace(s, u, ctx);
    }
    return s;
}

// w = A_L^dag P0 W_tail P W_head |v> for the E_tilde product form; the cut
// sits after a_ops[pos], so W_head covers positions [0, pos].
StateVector tilde_product(const ModelSpec& m, std::span<const double> params,
                          std::span<const double> data, const GradObservable& obs,
                          const StateVector& v) {
    const ParamSite& site = m.param_sites[obs.slot];
    const auto& a_ops = m.layers.back().a_ops;
    const ApplyCtx fwd{params, data, -1, 0.0, false};
    const ApplyCtx bwd{params, data, -1, 0.0, true};
    StateVector w = v;
    for (int i = 0; i <= site.pos; ++i) apply_inplace(w, a_ops[i], fwd);
    apply_pauli_inplace(w, obs.pauli);
    for (int i = site.pos + 1; i < static_cast<int>(a_ops.size()); ++i)
        apply_inplace(w, a_ops[i], fwd);
    apply_pauli_inplace(w, m.loss_obs);
    for (int i = static_cast<int>(a_ops.size()); i-- > 0;) apply_inplace(w, a_ops[i], bwd);
    return w;
}

// Register tour that leaves mu_L with the A-side owner of the last layer:
// full bounces for layers 1..L-1, one shipment for B_L, one return.
void charge_mu_last_tour(CommLedger& ledger, const ModelSpec& m, const Partition& p, int width) {
    Side holder = Side::alice;
    auto hop = [&](Side owner) {
        if (owner != holder) {
            ledger.send_quantum(holder, width, "finetune_bounce");
            holder = owner;
        }
    };
    for (int l = 0; l + 1 < m.num_layers(); ++l) {
        hop(p.b_owner);
        hop(p.a_owner);
    }
    hop(p.b_owner);
    hop(p.a_owner);
}

int max_block_params(const ModelSpec& m) {
    std::vector<int> counts(2 * std::max(m.num_layers(), 1), 0);
    int best = 0;
    for (const auto& site : m.param_sites) {
        int& c = counts[2 * site.layer + (site.side == Side::bob ? 0 : 1)];
        best = std::max(best, ++c);
    }
    return best;
}

}  // namespace

GradObservable grad_observable(const ModelSpec& m, GradKind kind, int slot) {
    const PauliRotation& rot = slot_rotation(m, slot);
    const ParamSite& site = m.param_sites[slot];
    if (kind == GradKind::E_tilde) {
        if (site.layer != m.num_layers() - 1 || site.side != Side::alice)
            throw ValidationError("fine-tune observable needs a slot in the last A block");
        return GradObservable{kind, FeatureStateRequest{Side::alice, site.layer, 0}, rot.pauli,
                              rot.beta, slot};
    }
    return GradObservable{kind, FeatureStateRequest{site.side, site.layer, site.pos + 1},
                          rot.pauli, rot.beta, slot};
}

GradObservable fine_tune_observable(const ModelSpec& m, int slot) {
    return grad_observable(m, GradKind::E_tilde, slot);
}

std::vector<cplx> observable_matrix(const GradObservable& obs, const ModelSpec& m,
                                    std::span<const double> params, std::span<const double> data) {
    const int n = m.n_qubits;
    if (n + 1 > 12) throw CapacityError("observable matrix limited to small registers");
    const std::uint64_t half = std::uint64_t{1} << n;
    const std::uint64_t dim = half << 1;
    std::vector<cplx> mat(dim * dim, cplx{0, 0});

    if (obs.kind == GradKind::E_tilde) {
        // Blocks [[0, Dt^dag], [Dt, 0]] with Dt = -(i beta/2) M.
        const cplx scale = cplx{0, -0.5 * obs.beta};
        for (std::uint64_t c = 0; c < half; ++c) {
            StateVector e;
            e.n_qubits = n;
            e.amps.assign(half, cplx{0, 0});
            e.amps[c] = 1.0;
            StateVector w = tilde_product(m, params, data, obs, e);
            for (std::uint64_t r = 0; r < half; ++r) {
                const cplx d = scale * w.amps[r];
                mat[(half + r) * dim + c] = d;              // Dt
                mat[c * dim + (half + r)] = std::conj(d);   // Dt^dag
            }
        }
        return mat;
    }

    // E and E_hat act as (ancilla Y) x P, with E scaled by -beta/2.
    const PauliString ext = with_ancilla(Pauli::Y, obs.pauli);
    const cplx scale = obs.kind == GradKind::E ? cplx{-0.5 * obs.beta, 0} : cplx{1, 0};
    for (std::uint64_t c = 0; c < dim; ++c) {
        StateVector e;
        e.n_qubits = n + 1;
        e.amps.assign(dim, cplx{0, 0});
        e.amps[c] = 1.0;
        apply_pauli_inplace(e, ext);
        for (std::uint64_t r = 0; r < dim; ++r)
            if (e.amps[r] != cplx{0, 0}) mat[r * dim + c] = scale * e.amps[r];
    }
    return mat;
}

ObservableValue expectation_E(const ModelSpec& m, const Partition& p,
                              std::span<const double> params, std::span<const double> data,
                              int slot) {
    return expectation_grad_obs(m, p, params, data, grad_observable(m, GradKind::E, slot));
}

ObservableValue expectation_grad_obs(const ModelSpec& m, const Partition& p,
                                     std::span<const double> params, std::span<const double> data,
                                     const GradObservable& obs) {
    ObservableValue out;
    if (obs.kind == GradKind::E_tilde) {
        out.value = grad_obs_value(m, params, data, obs);
        charge_mu_last_tour(out.ledger, m, p, m.n_qubits);
        return out;
    }
    FeatureState fs = prepare_feature_state(m, p, params, data, obs.target);
    const double y = expectation(fs.state, with_ancilla(Pauli::Y, obs.pauli));
    out.value = obs.kind == GradKind::E_hat ? y : -0.5 * obs.beta * y;
    out.ledger = std::move(fs.ledger);
    return out;
}

double grad_obs_value(const ModelSpec& m, std::span<const double> params,
                      std::span<const double> data, const GradObservable& obs) {
    if (obs.kind == GradKind::E_tilde) {
        const StateVector mu = mu_last(m, params, data);
        const StateVector w = tilde_product(m, params, data, obs, mu);
        // <E_tilde> on |+>|mu_L> collapses to Re<mu|Dt|mu> = (beta/2) Im<mu|M|mu>.
        return 0.5 * obs.beta * inner_product(mu, w).imag();
    }
    const Partition local{Side::alice, Side::alice};  // silent tour
    FeatureState fs = prepare_feature_state(m, local, params, data, obs.target);
    const double y = expectation(fs.state, with_ancilla(Pauli::Y, obs.pauli));
    return obs.kind == GradKind::E_hat ? y : -0.5 * obs.beta * y;
}

GradientEstimate grad_param_shift(const ModelSpec& m, std::span<const double> params,
                                  std::span<const double> data) {
    using std::numbers::pi;
    if (static_cast<int>(params.size()) != m.num_params())
        throw ValidationError("parameter vector length mismatch");
    GradientEstimate out;
    out.values.assign(m.num_params(), 0.0);
    out.provenance = "exact_shift";
    for (int k = 0; k < m.num_params(); ++k) {
        const PauliRotation& rot = slot_rotation(m, k);
        if (rot.beta == 0.0) continue;
        const double lp = loss(m, params, data, AngleShift{k, pi / 2});
        const double lm = loss(m, params, data, AngleShift{k, -pi / 2});
        out.values[k] = 0.5 * rot.beta * (lp - lm);
    }
    return out;
}

GradientEstimate grad_finite_diff(const ModelSpec& m, std::span<const double> params,
                                  std::span<const double> data, double h) {
    if (!(h > 0.0)) throw ValidationError("finite-difference step must be positive");
    if (static_cast<int>(params.size()) != m.num_params())
        throw ValidationError("parameter vector length mismatch");
    GradientEstimate out;
    out.values.assign(m.num_params(), 0.0);
    out.provenance = "finite_diff";
    std::vector<double> work(params.begin(), params.end());
    for (int k = 0; k < m.num_params(); ++k) {
        const double keep = work[k];
        work[k] = keep + h;
        const double lp = loss(m, work, data);
        work[k] = keep - h;
        const double lm = loss(m, work, data);
        work[k] = keep;
        out.values[k] = (lp - lm) / (2.0 * h);
    }
    return out;
}

int hoeffding_shots(int num_entries, double eps, double delta) {
    if (num_entries < 1) throw ValidationError("shot allocation needs at least one entry");
    if (!(eps > 0.0 && eps < 1.0) || !(delta > 0.0 && delta < 1.0))
        throw ValidationError("eps and delta must lie in (0,1)");
    return static_cast<int>(std::ceil(2.0 * std::log(2.0 * num_entries / delta) / (eps * eps)));
}

GradientEstimate estimate_grad_budget(const ModelSpec& m, const Partition& p,
                                      std::span<const double> params, std::span<const double> data,
                                      double eps, double delta, RngStream& rng) {
    validate_model(m);
    const int shots = hoeffding_shots(std::max(m.num_params(), 1), eps, delta);
    GradientEstimate out;
    out.values.assign(m.num_params(), 0.0);
    out.provenance = "shots(" + std::to_string(shots) + ")";

    for (int k = 0; k < m.num_params(); ++k) {
        const GradObservable ob = grad_observable(m, GradKind::E_hat, k);
        FeatureState fs = prepare_feature_state(m, p, params, data, ob.target);
        const double expect = expectation(fs.state, with_ancilla(Pauli::Y, ob.pauli));
        RngStream slot_rng = rng.split(0x6'0000u + static_cast<std::uint64_t>(k));
        long long acc = 0;
        for (int s = 0; s < shots; ++s) acc += sample_pm_from_expectation(expect, slot_rng);
        out.values[k] = kCalibEHat * ob.beta * (static_cast<double>(acc) / shots);
        // one fresh copy per shot
        for (int s = 0; s < shots; ++s) out.ledger.merge(fs.ledger);
    }

    // Shadow-tomography copy count, constants 1, no polylog factors: a
    // theoretical counter, not a simulation cost.
    const double lp = std::log2(static_cast<double>(std::max(max_block_params(m), 1)));
    const double k_theory = std::ceil(lp * lp * m.n_qubits *
                                      std::log(m.num_layers() / delta) / std::pow(eps, 4));
    out.ledger.add_theory("k_shadow_copies_theory", k_theory);
    out.ledger.add_theory("hoeffding_shots_per_entry", static_cast<double>(shots));
    return out;
}

}  // namespace qdml
