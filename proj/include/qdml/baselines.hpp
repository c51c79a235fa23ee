#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "qdml/protocol.hpp"
#include "qdml/rng.hpp"

namespace qdml {

// A labeled pair of unit vectors promised to satisfy |x.y| >= gamma.
struct MarginInstance {
    std::vector<double> x;
    std::vector<double> y;
    double gamma = 0.0;
    int label = 0;  // sign of x.y
};

// x uniform on the sphere, y = label (gamma x + sqrt(1-gamma^2) w) with w a
// unit vector orthogonal to x, so x.y = label*gamma by construction.
MarginInstance gen_margin_instance(int N, double gamma, int label, RngStream& rng);

// Explicit k x n binary sketch matrix, row-major with 64 entries per word
// (bit j of row i = word[i*words_per_row + j/64] >> (j%64) & 1). Row i's bits
// come from shared.split(i), so the streaming projector reproduces it exactly.
struct BinarySketchMatrix {
    int k = 0;
    int n = 0;
    std::vector<std::uint64_t> words;
    int words_per_row() const { return (n + 63) / 64; }
    int entry(int i, int j) const;
};

BinarySketchMatrix sketch_matrix(int k, int n, const RngStream& shared);

// f(z) = (1/sqrt k)(2R - 1) z. The sqrt(k) normalization (rather than 1/k)
// is what makes the map an expected isometry, which the margin analysis
// needs; see the decision notes shipped with the experiment configs.
std::vector<double> jl_project(std::span<const double> z, const BinarySketchMatrix& R);

// Streaming variants: R is never materialized, rows are re-derived from
// per-row child streams, so memory stays O(k + n) at any sketch size.
std::vector<double> jl_project(std::span<const double> z, int k, const RngStream& shared);
std::pair<std::vector<double>, std::vector<double>> jl_project_pair(std::span<const double> x,
                                                                    std::span<const double> y,
                                                                    int k,
                                                                    const RngStream& shared);

// Sketch dimension k = ceil(C / (gamma/8)^2) for the margin-preserving
// distortion budget eps = gamma/8.
int jl_sketch_dim(double gamma, double C = 64.0);

struct ClassifyResult {
    int predicted = 0;      // sign of the decision statistic
    double statistic = 0.0; // Bob's inner product with Alice's quantized coords
    int k = 0;              // sketch dimension (0 on the full-vector fallback)
    CommLedger ledger;
};

// One-round sketch-and-compare classifier: Alice sends her sketched vector
// quantized to bits_per_coord bits per coordinate, Bob answers with the sign
// of the sketched inner product. Communication is k*bits_per_coord + 1 bits
// regardless of N. gamma = 0 falls back to shipping the raw vector
// (N*bits_per_coord + 1 bits). Throws if quantization noise could eat the
// gamma/8 distortion budget.
ClassifyResult classify_distributed(const MarginInstance& inst, double gamma, double C = 64.0,
                                    int bits_per_coord = 16, const RngStream& shared = RngStream(0));

// Lift gap-Hamming inputs to the unit sphere: x = (2x_hat - 1)/sqrt(N).
// A Hamming-distance gap of g around N/2 becomes a margin of g/N via
// x.y = (N - 2 d_H)/N. Throws if the promise |x.y| >= g/N fails.
MarginInstance gap_hamming_to_margin(std::span<const int> x_hat, std::span<const int> y_hat,
                                     double g);

}  // namespace qdml
