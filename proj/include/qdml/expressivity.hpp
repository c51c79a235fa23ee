#pragma once

#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "qdml/circuits.hpp"

namespace qdml {

struct FrequencyEntry {
    double frequency = 0.0;    // nonnegative; cos(2 pi frequency x) carrier
    double coefficient = 0.0;  // signed real weight
};

struct FrequencyTable {
    std::vector<FrequencyEntry> entries;  // frequency-sorted, deduplicated
    double tolerance = 0.0;               // nonzero cutoff that was applied

    int num_nonzero() const { return static_cast<int>(entries.size()); }
};

// Exact spectrum of the Hadamard-mixed ladder by path-pair enumeration:
// the X readout expands into a sum over pairs of basis paths, each pair
// contributing +-N'^{-L} at frequency +-(sum of its lambda differences).
// Mirror pairs fold onto cos terms; aligned-path families cancel. The
// reconstruction sum_k coefficient_k cos(2 pi frequency_k x) equals the
// loss of preset_spectrum_ladder(Nprime, L, lambda) identically in x.
FrequencyTable enumerate_spectrum(int Nprime, int L,
                                  const std::vector<std::vector<double>>& lambda,
                                  double tol = 1e-12);

// Max |table reconstruction - model loss| over the sample points.
double spectrum_vs_grid(const ModelSpec& m, const FrequencyTable& table,
                        std::span<const double> xs);

struct SeparationRankReport {
    int rows = 0;
    int cols = 0;
    std::vector<double> singular_values;  // descending
    double threshold = 0.0;               // relative to the largest value
    int rank = 0;                         // count above threshold * sigma_max
};

// Numerical rank of a sampled two-variable function (row-major values).
SeparationRankReport matrix_rank_report(std::span<const double> values, int rows, int cols,
                                        double threshold = 1e-8);

// Samples loss(data = {y_i, z_j}) over the grids and reports the rank of
// the resulting matrix: a lower bound witness for separation rank.
SeparationRankReport separation_rank(const ModelSpec& m, std::span<const double> grid_y,
                                     std::span<const double> grid_z, double threshold = 1e-8);

struct UniversalErrorPoint {
    int M = 0;
    double sup_error = 0.0;
};

// For each M: synthesize the circuit for the truncated series with
// coefficients fhat(m) = (cos weight, sin weight), m < M, and measure the
// sup difference between scale * loss and f on a uniform grid over [0, 1).
std::vector<UniversalErrorPoint> universal_error_curve(
    const std::function<double(double)>& f,
    const std::function<std::pair<double, double>(int)>& fhat, std::span<const int> Ms,
    int grid_points = 10000);

// Rate-demo target: unit-peak triangle wave (1 at 0, -1 at 1/2, period 1)
// and its cosine coefficients 8/(pi m)^2 on odd m; the full series has
// l1 mass exactly 1.
double triangle_wave(double x);
std::pair<double, double> triangle_fourier(int m);

}  // namespace qdml
