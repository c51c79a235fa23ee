#include "qdml/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <utility>

#include "qdml/errors.hpp"

namespace qdml {

namespace {

void check_options(const TrainOptions& opts, int num_params) {
    if (opts.box_lo.size() != opts.box_hi.size())
        throw ValidationError("region box bounds differ in length");
    if (!opts.box_lo.empty()) {
        if (static_cast<int>(opts.box_lo.size()) != num_params)
            throw ValidationError("region box length does not match the parameter count");
        for (std::size_t i = 0; i < opts.box_lo.size(); ++i)
            if (!(opts.box_lo[i] <= opts.box_hi[i])) throw ValidationError("region box is empty");
    } else if (opts.project) {
        throw ValidationError("projection requested without a region box");
    }
}

void check_params0(const ModelSpec& m, std::span<const double> params0) {
    if (static_cast<int>(params0.size()) != m.num_params())
        throw ValidationError("initial parameter vector length does not match the model");
}

// Counts box exits and optionally clamps back in. Monitoring only: the box
// is the region the convergence statements assume, not a constraint the
// update rule knows about.
void apply_region(TrainRun& run, const TrainOptions& opts, std::vector<double>& params) {
    if (opts.box_lo.empty()) return;
    bool outside = false;
    for (std::size_t i = 0; i < params.size(); ++i)
        if (params[i] < opts.box_lo[i] || params[i] > opts.box_hi[i]) outside = true;
    if (!outside) return;
    ++run.region_exits;
    if (opts.project)
        for (std::size_t i = 0; i < params.size(); ++i)
            params[i] = std::clamp(params[i], opts.box_lo[i], opts.box_hi[i]);
}

// Trajectory points carry the exact loss for monitoring; nothing is charged
// for it. Ledger totals are sampled at recording time, so the trajectory
// doubles as a communication-vs-progress curve.
void push_point(TrainRun& run, const ModelSpec& m, std::span<const double> params,
                std::span<const double> data, int slot, double eta) {
    TrajPoint pt;
    pt.params.assign(params.begin(), params.end());
    pt.loss = loss(m, params, data);
    pt.slot = slot;
    pt.eta = eta;
    pt.qubits_cum = run.ledger.qubits_sent();
    pt.classical_bits_cum = run.ledger.classical_bits();
    run.trajectory.push_back(std::move(pt));
}

struct CoordinateDraw {
    std::vector<int> a_slots;  // slots living in A-type blocks, sampler order
    std::vector<int> b_slots;
    double norm_a = 0.0;   // l1 mass per side, for the side draw
    double norm_b = 0.0;
    double norm1 = 0.0;    // slot-order reduction, the canonical ||beta||_1
    std::optional<AliasSampler> a_sampler;
    std::optional<AliasSampler> b_sampler;

    explicit CoordinateDraw(const ModelSpec& m) {
        std::vector<double> wa;
        std::vector<double> wb;
        for (int k = 0; k < m.num_params(); ++k) {
            const double w = std::abs(m.param_sites[k].beta);
            norm1 += w;
            if (m.param_sites[k].side == Side::alice) {
                a_slots.push_back(k);
                wa.push_back(w);
                norm_a += w;
            } else {
                b_slots.push_back(k);
                wb.push_back(w);
                norm_b += w;
            }
        }
        if (norm1 <= 0.0)
            throw ValidationError(
                "probabilistic coordinate descent needs a nonzero coefficient vector");
        if (norm_a > 0.0) a_sampler.emplace(wa);
        if (norm_b > 0.0) b_sampler.emplace(wb);
    }

    int draw_slot(RngStream& rng) const {
        if (rng.bernoulli(norm_a / (norm_a + norm_b)))
            return a_slots[static_cast<std::size_t>(a_sampler->sample(rng))];
        return b_slots[static_cast<std::size_t>(b_sampler->sample(rng))];
    }
};

GradientEstimate dpcd_draw(const ModelSpec& m, const Partition& p, const CoordinateDraw& cd,
                           std::span<const double> params, std::span<const double> data,
                           RngStream& rng) {
    GradientEstimate est;
    // Bob holds both l1 shares after the setup exchange, so he makes the
    // side call and announces it in one bit.
    est.ledger.send_classical(Side::bob, 1, "side_draw");
    const int slot = cd.draw_slot(rng);
    const GradObservable obs = grad_observable(m, GradKind::E_hat, slot);
    const ObservableValue ev = expectation_grad_obs(m, p, params, data, obs);
    est.ledger.merge(ev.ledger);
    const int meas = sample_pm_from_expectation(ev.value, rng);
    const double sign_beta = m.param_sites[slot].beta < 0.0 ? -1.0 : 1.0;
    // E[g e_slot] over side, slot, and measurement equals the exact
    // gradient: the slot lands with probability |beta_slot| / ||beta||_1 and
    // E[meas] = <E_hat>, whose product with kCalibEHat * beta is dL/dtheta.
    est.sparse_slot = slot;
    est.sparse_value = kCalibEHat * sign_beta * cd.norm1 * static_cast<double>(meas);
    est.provenance = "dpcd_sample";
    return est;
}

}  // namespace

AliasSampler::AliasSampler(std::span<const double> weights) {
    if (weights.empty()) throw ValidationError("alias sampler needs at least one weight");
    double total = 0.0;
    for (const double w : weights) {
        if (!(w >= 0.0)) throw ValidationError("alias sampler weights must be nonnegative");
        total += w;
    }
    if (total <= 0.0) throw ValidationError("alias sampler weights must not all be zero");

    const int n = static_cast<int>(weights.size());
    norm_.resize(weights.size());
    for (std::size_t i = 0; i < weights.size(); ++i) norm_[i] = weights[i] / total;

    // Walker construction: scale to mean 1, pair each deficit bucket with a
    // surplus donor.
    prob_.resize(weights.size());
    alias_.assign(weights.size(), 0);
    std::vector<double> scaled(weights.size());
    for (std::size_t i = 0; i < weights.size(); ++i) scaled[i] = norm_[i] * n;
    std::vector<int> small;
    std::vector<int> large;
    for (int i = 0; i < n; ++i) (scaled[static_cast<std::size_t>(i)] < 1.0 ? small : large).push_back(i);
    while (!small.empty() && !large.empty()) {
        const int s = small.back();
        small.pop_back();
        const int l = large.back();
        large.pop_back();
        prob_[static_cast<std::size_t>(s)] = scaled[static_cast<std::size_t>(s)];
        alias_[static_cast<std::size_t>(s)] = l;
        scaled[static_cast<std::size_t>(l)] -= 1.0 - scaled[static_cast<std::size_t>(s)];
        (scaled[static_cast<std::size_t>(l)] < 1.0 ? small : large).push_back(l);
    }
    for (const int i : small) prob_[static_cast<std::size_t>(i)] = 1.0;
    for (const int i : large) prob_[static_cast<std::size_t>(i)] = 1.0;
}

int AliasSampler::sample(RngStream& rng) const {
    const int n = static_cast<int>(prob_.size());
    int bucket = static_cast<int>(rng.next_double() * n);
    if (bucket >= n) bucket = n - 1;
    if (rng.next_double() < prob_[static_cast<std::size_t>(bucket)]) return bucket;
    return alias_[static_cast<std::size_t>(bucket)];
}

GradientEstimate dpcd_sample_gradient(const ModelSpec& m, const Partition& p,
                                      std::span<const double> params,
                                      std::span<const double> data, RngStream& rng) {
    validate_model(m);
    check_params0(m, params);
    const CoordinateDraw cd(m);
    return dpcd_draw(m, p, cd, params, data, rng);
}

TrainRun dpcd(const ModelSpec& m, const Partition& p, std::span<const double> params0,
              std::span<const double> data, std::span<const double> schedule, RngStream& rng,
              const TrainOptions& opts) {
    validate_model(m);
    check_params0(m, params0);
    check_options(opts, m.num_params());

    TrainRun run;
    run.schedule.assign(schedule.begin(), schedule.end());
    std::vector<double> params(params0.begin(), params0.end());
    push_point(run, m, params, data, -1, 0.0);
    if (schedule.empty()) return run;

    const CoordinateDraw cd(m);
    // Setup: Alice announces her l1 share as one 64-bit word so Bob can
    // weigh the per-iteration side draw.
    run.ledger.send_classical(Side::alice, 64, "beta_norm_share");

    for (const double eta : schedule) {
        GradientEstimate est = dpcd_draw(m, p, cd, params, data, rng);
        run.ledger.merge(est.ledger);
        params[static_cast<std::size_t>(est.sparse_slot)] -= eta * est.sparse_value;
        apply_region(run, opts, params);
        push_point(run, m, params, data, est.sparse_slot, eta);
    }
    return run;
}

TrainRun stdgd(const ModelSpec& m, const Partition& p, std::span<const double> params0,
               std::span<const double> data, double eta, int T, double eps, double delta,
               RngStream& rng, const TrainOptions& opts) {
    validate_model(m);
    check_params0(m, params0);
    check_options(opts, m.num_params());
    if (T < 0) throw ValidationError("iteration count must be nonnegative");
    if (eps < 0.0) throw ValidationError("target accuracy must be nonnegative");

    TrainRun run;
    run.schedule.assign(static_cast<std::size_t>(T), eta);
    std::vector<double> params(params0.begin(), params0.end());
    push_point(run, m, params, data, -1, 0.0);

    for (int t = 0; t < T; ++t) {
        GradientEstimate est;
        if (eps == 0.0) {
            // Exact-gradient backdoor: plain descent with no sampling and no
            // communication, for bit-for-bit comparisons against reference
            // descent loops.
            est = grad_param_shift(m, params, data);
        } else {
            // estimate_grad_budget consumes only child streams, so hand each
            // iteration its own split; the parent stays untouched.
            RngStream iter_rng = rng.split(static_cast<std::uint64_t>(t));
            est = estimate_grad_budget(m, p, params, data, eps, delta, iter_rng);
            run.ledger.merge(est.ledger);
        }
        for (std::size_t k = 0; k < params.size(); ++k) params[k] -= eta * est.values[k];
        apply_region(run, opts, params);
        push_point(run, m, params, data, -1, eta);
    }
    return run;
}

int stdft_shots_per_obs(int P, int T, double eps, double delta) {
    if (P < 1 || T < 1) throw ValidationError("fine-tuning shot count needs P >= 1 and T >= 1");
    return hoeffding_shots(2 * P * T, eps, delta);
}

std::uint64_t stdft_pool_size(int P, int T, double eps, double delta) {
    return static_cast<std::uint64_t>(stdft_shots_per_obs(P, T, eps, delta)) *
           static_cast<std::uint64_t>(P) * static_cast<std::uint64_t>(T);
}

TrainRun stdft(const ModelSpec& m, const Partition& p, std::span<const double> params0,
               std::span<const double> data, std::span<const double> schedule, double eps,
               double delta, RngStream& rng, const TrainOptions& opts) {
    validate_model(m);
    check_params0(m, params0);
    check_options(opts, m.num_params());
    const int P = m.num_params();
    const int last = m.num_layers() - 1;
    for (const ParamSite& site : m.param_sites)
        if (site.side != Side::alice || site.layer != last)
            throw ValidationError("fine-tuning trains the last A-type block only");

    TrainRun run;
    run.schedule.assign(schedule.begin(), schedule.end());
    std::vector<double> params(params0.begin(), params0.end());
    push_point(run, m, params, data, -1, 0.0);
    const int T = static_cast<int>(schedule.size());
    if (T == 0 || P == 0) return run;

    const int shots = stdft_shots_per_obs(P, T, eps, delta);
    std::uint64_t pool = opts.pool_capacity > 0 ? opts.pool_capacity
                                                : stdft_pool_size(P, T, eps, delta);

    // All communication happens here: every pool copy of |+>|mu_L> is walked
    // to the tuning party before the first update. Afterwards the trajectory
    // ledger stamps are flat.
    {
        const ObservableValue probe =
            expectation_grad_obs(m, p, params, data, fine_tune_observable(m, 0));
        for (std::uint64_t c = 0; c < pool; ++c) run.ledger.merge(probe.ledger);
    }

    std::vector<double> grad(static_cast<std::size_t>(P), 0.0);
    for (int t = 0; t < T; ++t) {
        for (int k = 0; k < P; ++k) {
            if (pool < static_cast<std::uint64_t>(shots))
                throw PoolExhaustedError("fine-tuning copy pool exhausted");
            pool -= static_cast<std::uint64_t>(shots);
            const double abs_beta = std::abs(m.param_sites[k].beta);
            if (abs_beta == 0.0) {
                grad[static_cast<std::size_t>(k)] = 0.0;
                continue;
            }
            const GradObservable obs = fine_tune_observable(m, k);
            const double e = grad_obs_value(m, params, data, obs);
            // <E_til> = kCalibETilde * dL/dtheta and |<E_til>| <= |beta| / 2,
            // so the +-1 readout with mean (e / kCalibETilde) / |beta| stays
            // a valid Bernoulli; |beta| * mean(m) is unbiased for dL/dtheta.
            const double expect = std::clamp(e / kCalibETilde / abs_beta, -1.0, 1.0);
            std::int64_t sum = 0;
            for (int s = 0; s < shots; ++s) sum += sample_pm_from_expectation(expect, rng);
            grad[static_cast<std::size_t>(k)] =
                abs_beta * static_cast<double>(sum) / static_cast<double>(shots);
        }
        const double eta = schedule[static_cast<std::size_t>(t)];
        for (int k = 0; k < P; ++k)
            params[static_cast<std::size_t>(k)] -= eta * grad[static_cast<std::size_t>(k)];
        apply_region(run, opts, params);
        push_point(run, m, params, data, -1, eta);
    }
    return run;
}

std::uint64_t convex_iterations(double R, double G, double eps0) {
    if (!(R > 0.0) || !(G > 0.0) || !(eps0 > 0.0))
        throw ValidationError("convex iteration bound needs positive R, G, eps0");
    return static_cast<std::uint64_t>(std::ceil(2.0 * R * R * G * G / (eps0 * eps0)));
}

std::uint64_t strongly_convex_iterations(double G, double lambda, double eps0) {
    if (!(G > 0.0) || !(lambda > 0.0) || !(eps0 > 0.0))
        throw ValidationError("strongly convex iteration bound needs positive G, lambda, eps0");
    return static_cast<std::uint64_t>(std::ceil(2.0 * G * G / (lambda * eps0))) + 1;
}

double convex_step(double R, double G, std::uint64_t T) {
    if (!(R > 0.0) || !(G > 0.0) || T == 0)
        throw ValidationError("convex step size needs positive R, G, T");
    return (R / G) * std::sqrt(2.0 / static_cast<double>(T));
}

std::vector<double> strongly_convex_schedule(double lambda, std::uint64_t T) {
    if (!(lambda > 0.0)) throw ValidationError("strongly convex schedule needs positive lambda");
    std::vector<double> etas(T);
    for (std::uint64_t t = 1; t <= T; ++t)
        etas[t - 1] = 2.0 / (lambda * static_cast<double>(t + 1));
    return etas;
}

ConvexInstanceReport convex_report(double R, double beta_norm1, double eps0) {
    ConvexInstanceReport rep;
    rep.R = R;
    rep.beta_norm1 = beta_norm1;
    rep.eps0 = eps0;
    rep.T_bound = convex_iterations(R, beta_norm1, eps0);
    return rep;
}

std::vector<double> uniform_average_params(const TrainRun& run) {
    if (run.trajectory.empty()) throw ValidationError("empty trajectory");
    const std::size_t T = run.trajectory.size() - 1;
    if (T == 0) return run.trajectory[0].params;
    std::vector<double> avg(run.trajectory[0].params.size(), 0.0);
    for (std::size_t t = 0; t < T; ++t)
        for (std::size_t i = 0; i < avg.size(); ++i) avg[i] += run.trajectory[t].params[i];
    for (double& v : avg) v /= static_cast<double>(T);
    return avg;
}

std::vector<double> weighted_average_params(const TrainRun& run) {
    if (run.trajectory.empty()) throw ValidationError("empty trajectory");
    const std::size_t T = run.trajectory.size() - 1;
    if (T == 0) return run.trajectory[0].params;
    std::vector<double> avg(run.trajectory[0].params.size(), 0.0);
    const double denom = static_cast<double>(T) * static_cast<double>(T + 1);
    for (std::size_t t = 1; t <= T; ++t) {
        const double w = 2.0 * static_cast<double>(t) / denom;
        for (std::size_t i = 0; i < avg.size(); ++i) avg[i] += w * run.trajectory[t].params[i];
    }
    return avg;
}

}  // namespace qdml
