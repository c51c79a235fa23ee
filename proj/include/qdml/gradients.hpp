#pragma once

#include <span>
#include <string>
#include <vector>

#include "qdml/circuits.hpp"
#include "qdml/protocol.hpp"

namespace qdml {

// Three measurement-operator forms for one loss derivative. E carries the
// gate coefficient inside the operator; E_hat is the +-1 involution that
// shot-based protocols actually sample; E_tilde folds the entire remainder
// of the last A block into the operator so the plain state |+>|mu_L> is
// enough to read the derivative.
enum class GradKind { E, E_hat, E_tilde };

struct GradObservable {
    GradKind kind = GradKind::E;
    FeatureStateRequest target;  // cut just after the differentiated gate
    PauliString pauli;           // generator of the rotation at the slot
    double beta = 0.0;           // gate coefficient at the slot
    int slot = -1;
};

// Calibration, pinned against the finite-difference oracle and guarded by
// regression tests:
//   <E>     = kCalibE * dL/dtheta           on the feature state at the cut
//   <E_til> = kCalibETilde * dL/dtheta      on |+>|mu_L>
//   dL/dtheta = kCalibEHat * beta * <E_hat> on the feature state at the cut
inline constexpr double kCalibE = 0.5;
inline constexpr double kCalibETilde = 0.5;
inline constexpr double kCalibEHat = -1.0;

// Observable for a rotation slot. E_tilde requires a slot in the last A
// block (validation error otherwise); non-rotation slots are unsupported.
GradObservable grad_observable(const ModelSpec& m, GradKind kind, int slot);

// E_tilde shorthand for slots in the last A block.
GradObservable fine_tune_observable(const ModelSpec& m, int slot);

// Dense matrix on the (n+1)-qubit ancilla register; capacity-limited to
// small registers, intended for invariant checks.
std::vector<cplx> observable_matrix(const GradObservable& obs, const ModelSpec& m,
                                    std::span<const double> params,
                                    std::span<const double> data = {});

struct ObservableValue {
    double value = 0.0;
    CommLedger ledger;
};

// <E> on the feature state at the slot's cut; the ledger charges one
// feature-state copy.
ObservableValue expectation_E(const ModelSpec& m, const Partition& p,
                              std::span<const double> params, std::span<const double> data,
                              int slot);

// Expectation of any observable kind on its matching ancilla state. E and
// E_hat charge one feature-state copy; E_tilde charges the 2L-message tour
// that hands mu_L to the tuning party.
ObservableValue expectation_grad_obs(const ModelSpec& m, const Partition& p,
                                     std::span<const double> params, std::span<const double> data,
                                     const GradObservable& obs);

// The bare expectation with no communication accounting, for callers that
// draw repeated samples from copies they have already paid for.
double grad_obs_value(const ModelSpec& m, std::span<const double> params,
                      std::span<const double> data, const GradObservable& obs);

struct GradientEstimate {
    std::vector<double> values;  // dense gradient; empty for sparse records
    int sparse_slot = -1;
    double sparse_value = 0.0;
    std::string provenance;
    CommLedger ledger;

    bool is_sparse() const { return sparse_slot >= 0; }
};

// Exact gradient by the shift rule, applied in each gate's effective angle
// (beta*theta +- pi/2); slots with beta = 0 contribute 0 without evaluation.
GradientEstimate grad_param_shift(const ModelSpec& m, std::span<const double> params,
                                  std::span<const double> data = {});

// Central differences of the exact loss; independent oracle, O(h^2) error.
GradientEstimate grad_finite_diff(const ModelSpec& m, std::span<const double> params,
                                  std::span<const double> data = {}, double h = 1e-5);

// Two-sided Hoeffding allocation: shots per entry so that num_entries
// estimates are all within eps with probability >= 1 - delta.
int hoeffding_shots(int num_entries, double eps, double delta);

// Shot-based gradient: for every slot, samples the +-1 E_hat observable on
// fresh feature-state copies (shots from hoeffding_shots), charging every
// copy's tour to the ledger. The ledger's theory counters carry the
// shadow-tomography copy count k (constants set to 1, non-rigorous) and the
// Hoeffding allocation actually used.
GradientEstimate estimate_grad_budget(const ModelSpec& m, const Partition& p,
                                      std::span<const double> params, std::span<const double> data,
                                      double eps, double delta, RngStream& rng);

}  // namespace qdml
