#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "qdml/gradients.hpp"

namespace qdml {

// Walker alias table over nonnegative weights: O(n) build, O(1) draws.
class AliasSampler {
public:
    explicit AliasSampler(std::span<const double> weights);

    int sample(RngStream& rng) const;
    int size() const { return static_cast<int>(prob_.size()); }
    const std::vector<double>& probabilities() const { return norm_; }

private:
    std::vector<double> prob_;
    std::vector<int> alias_;
    std::vector<double> norm_;
};

struct TrajPoint {
    std::vector<double> params;
    double loss = 0.0;
    int slot = -1;    // coordinate touched by the update producing this point
    double eta = 0.0; // step size used (0 at the initial point)
    std::uint64_t qubits_cum = 0;  // ledger totals when this point was recorded
    std::uint64_t classical_bits_cum = 0;
};

struct TrainRun {
    std::vector<TrajPoint> trajectory;  // length T+1, [0] = initial point
    CommLedger ledger;
    std::vector<double> schedule;
    std::uint64_t seed = 0;   // caller-recorded; algorithms only see streams
    int region_exits = 0;     // box-leaving updates observed (monitoring only)
};

struct TrainOptions {
    std::vector<double> box_lo;  // per-coordinate region; empty = unmonitored
    std::vector<double> box_hi;
    bool project = false;             // clamp into the box after each update
    std::uint64_t pool_capacity = 0;  // fine-tuning copy pool; 0 = formula size
};

// One draw of the probabilistic coordinate estimator: Bob samples the side
// (1 classical bit), the side's owner samples a slot proportionally to
// |beta|, one feature-state copy is spent on a +-1 readout. Returns the
// sparse record g = -sign(beta_slot) * ||beta||_1 * m at the slot; its
// expectation over draws is the exact dense gradient.
GradientEstimate dpcd_sample_gradient(const ModelSpec& m, const Partition& p,
                                      std::span<const double> params,
                                      std::span<const double> data, RngStream& rng);

// Probabilistic coordinate descent: T = schedule.size() sparse updates
// theta_slot -= eta_t * g_slot. Charges the one-time 64-bit coefficient-norm
// exchange plus, per iteration, the side bit and one feature-state tour.
TrainRun dpcd(const ModelSpec& m, const Partition& p, std::span<const double> params0,
              std::span<const double> data, std::span<const double> schedule, RngStream& rng,
              const TrainOptions& opts = {});

// Dense descent on shot-estimated gradients (eps, delta as in
// estimate_grad_budget). eps = 0 is an exact-gradient backdoor for tests:
// parameter-shift gradients, no sampling, no communication charged.
TrainRun stdgd(const ModelSpec& m, const Partition& p, std::span<const double> params0,
               std::span<const double> data, double eta, int T, double eps, double delta,
               RngStream& rng, const TrainOptions& opts = {});

// Hoeffding shots per fine-tuning observable: ceil(2 ln(4 P T / delta) / eps^2).
int stdft_shots_per_obs(int P, int T, double eps, double delta);

// Upfront copy-pool size: shots_per_obs * P * T (one batch per observable
// per iteration; observables are chosen online, copies are not).
std::uint64_t stdft_pool_size(int P, int T, double eps, double delta);

// Fine-tuning of the last A block only (every trainable slot must live
// there). All quantum communication happens up front: a pool of |+>|mu_L>
// copies is created and each iteration consumes shots_per_obs copies per
// slot; exhausting the pool raises an error rather than reusing copies.
TrainRun stdft(const ModelSpec& m, const Partition& p, std::span<const double> params0,
               std::span<const double> data, std::span<const double> schedule, double eps,
               double delta, RngStream& rng, const TrainOptions& opts = {});

// App.-D iteration counts and step sizes.
std::uint64_t convex_iterations(double R, double G, double eps0);            // ceil(2 R^2 G^2 / eps0^2)
std::uint64_t strongly_convex_iterations(double G, double lambda, double eps0);  // ceil(2 G^2 / (lambda eps0)) + 1
double convex_step(double R, double G, std::uint64_t T);                     // (R/G) sqrt(2/T)
std::vector<double> strongly_convex_schedule(double lambda, std::uint64_t T);  // eta_t = 2/(lambda (t+1))

struct ConvexInstanceReport {
    double R = 0.0;
    double beta_norm1 = 0.0;
    double eps0 = 0.0;
    std::uint64_t T_bound = 0;  // convex_iterations(R, beta_norm1, eps0)
};

ConvexInstanceReport convex_report(double R, double beta_norm1, double eps0);

// Averaged iterates the convergence bounds speak about.
std::vector<double> uniform_average_params(const TrainRun& run);   // mean over t = 0..T-1
std::vector<double> weighted_average_params(const TrainRun& run);  // weights 2t/(T(T+1)), t = 1..T

}  // namespace qdml
