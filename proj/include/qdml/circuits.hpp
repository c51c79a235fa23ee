#pragma once

#include <optional>
#include <span>
#include <vector>

#include "qdml/rng.hpp"
#include "qdml/statevec.hpp"

namespace qdml {

enum class Side { alice, bob };

inline const char* side_name(Side s) { return s == Side::alice ? "alice" : "bob"; }

// One alternating layer: Bob's block acts first, then Alice's.
struct LayerSpec {
    std::vector<UnitarySpec> b_ops;
    std::vector<UnitarySpec> a_ops;
};

struct EncoderSpec {
    enum class Kind { fixed_basis, amplitude, plus_zero, data_parallel };
    Kind kind = Kind::fixed_basis;
    std::uint64_t basis_index = 0;
    std::vector<cplx> amplitudes;  // amplitude kind
    // data_parallel: [x_a; x_b] is rows x cols with Alice holding the top
    // half of the rows; stored row-major, each block rows/2 x cols.
    std::vector<double> xa, xb;
    int rows = 0, cols = 0;
};

// Where parameter slot s lives: side/layer and the position inside that
// side's op list. The op there must be a PauliRotation carrying this slot.
struct ParamSite {
    Side side = Side::alice;
    int layer = 0;
    int pos = 0;
    double beta = 0.0;
};

struct ModelSpec {
    int n_qubits = 0;
    EncoderSpec encoder;
    std::vector<LayerSpec> layers;
    PauliString loss_obs;
    std::vector<ParamSite> param_sites;  // slot -> site

    int num_params() const { return static_cast<int>(param_sites.size()); }
    int num_layers() const { return static_cast<int>(layers.size()); }
};

struct BetaVector {
    std::vector<double> beta;
    double norm1() const;
};

BetaVector beta_vector(const ModelSpec& m);

// Structural checks: op/qubit ranges, slot table consistency (every slot
// used exactly once, betas match), loss observable span. Throws.
void validate_model(const ModelSpec& m);

StateVector encode(const EncoderSpec& e, int n_qubits);

struct AngleShift {
    int slot = -1;
    double phi = 0.0;
};

// |phi(params, data)>: encode, then apply layers (B block before A block).
StateVector forward(const ModelSpec& m, std::span<const double> params,
                    std::span<const double> data = {}, std::optional<AngleShift> shift = {});

// <phi| P0 |phi>, in [-1, 1].
double loss(const ModelSpec& m, std::span<const double> params, std::span<const double> data = {},
            std::optional<AngleShift> shift = {});

// ---- presets ---------------------------------------------------------------

struct SmoothPreset {
    ModelSpec model;
    BetaVector betas;
};

// Random smooth circuit: P Pauli rotations per side per layer, beta drawn
// uniform on [-1, 1], fixed_basis(0) encoder, Z on qubit 0 as loss. Slot
// order is layer-major, Bob's block before Alice's within a layer.
SmoothPreset preset_smooth(int n, int L, int P, RngStream& rng);

// Single X rotation with beta = 1 and Z readout: loss(theta) = cos(theta).
SmoothPreset preset_cos_theta();

// Subspace-membership instance: B1 is a seed-derived random rotation, A1
// aligns a seed-derived orthonormal basis with the computational basis so
// that Z on qubit 0 reads which half-space the input lives in. The encoder
// amplitude-loads x.
ModelSpec preset_raz(int N, std::uint64_t subspace_seed, std::span<const double> x);

// Draw a unit input lying in the target half-subspace (target in {1, 2});
// off_component in [0, 1) mixes in the other half to shrink the margin.
std::vector<double> raz_sample_input(int N, std::uint64_t subspace_seed, int target, RngStream& rng,
                                     double off_component = 0.0);

// Alternating pointer jumps (Bob's permutation first), L0 jumps total,
// then a swap moves the pointer's least significant bit onto qubit 0 for
// the Z readout. f_a and f_b are permutations of [N].
ModelSpec preset_pointer_chasing(int N, const std::vector<std::uint64_t>& f_a,
                                 const std::vector<std::uint64_t>& f_b, int L0, std::uint64_t x);

// Classical reference for the pointer model.
std::uint64_t pointer_chase(const std::vector<std::uint64_t>& f_a,
                            const std::vector<std::uint64_t>& f_b, int L0, std::uint64_t x);

// Single-frequency ladder: a basis branch walks the path j_1..j_L through
// transpositions while diagonal layers attach phases; the loss traces out
// cos(2 pi Lambda x) with Lambda = sum_l lambda[l][path[l]-1]. Labels are
// 1-based; lambda is L x Nprime. Requires lambda[l][0] = 0 for every l,
// lambda[L-1][1] = 0, and the path to end at label 2 (the X readout spot).
ModelSpec preset_fourier_ladder(int Nprime, int L, const std::vector<std::vector<double>>& lambda,
                                const std::vector<int>& path);

double ladder_frequency(const std::vector<std::vector<double>>& lambda, const std::vector<int>& path);

// The basis relabeling used by the transposition ladder: 1-based label ->
// basis index (label 1 anchors at 0, label 2 at Nprime/2).
std::uint64_t ladder_label_index(int Nprime, int label);

// Generic-spectrum ladder: Hadamard mixing layers between data-driven
// diagonals, X on qubit 0 as loss; labels map directly (k -> k-1).
ModelSpec preset_spectrum_ladder(int Nprime, int L, const std::vector<std::vector<double>>& lambda);

// Same ladder with the diagonal split across two data variables: entries
// below Nprime/2 are driven by data[0], the rest by data[1].
ModelSpec preset_two_variable_ladder(int Nprime, int L,
                                     const std::vector<std::vector<double>>& lambda);

struct UniversalPreset {
    ModelSpec model;
    double scale = 0.0;  // ||f_hat||_1; model loss * scale = truncated series
};

// One-layer Fourier synthesizer: scale * loss(x) =
//   sum_m fp[m] cos(2 pi m x) + fm[m] sin(2 pi m x), m < M.
// Register has 4M basis states.
UniversalPreset preset_universal_approx(const std::vector<double>& fp, const std::vector<double>& fm);

// Same series, but the phase diagonal is factored into log2(M) controlled
// single-qubit layers.
UniversalPreset preset_universal_hierarchical(const std::vector<double>& fp,
                                              const std::vector<double>& fm);

}  // namespace qdml
