#pragma once

namespace qdml::tol {

// All numeric tolerances live here so tests and implementations agree.

inline constexpr double norm = 1e-12;            // unit-norm check on states
inline constexpr double unitary = 1e-10;         // internally built unitaries
inline constexpr double unitary_input = 1e-8;    // user-supplied dense matrices
inline constexpr double hermitian = 1e-10;       // observable checks
inline constexpr double imag_residue = 1e-10;    // imaginary part of expectations
inline constexpr double involution = 1e-10;      // obs^2 = c*I checks before +-1 sampling
inline constexpr double elementwise = 1e-12;     // dense operator comparisons
inline constexpr double grid_identity = 1e-9;    // closed-form vs sampled-grid losses
inline constexpr double freq_dedupe = 1e-9;      // frequency grouping in spectra
inline constexpr double coeff_cutoff = 1e-9;     // drop spectral coefficients below this
inline constexpr double svd_rank_rel = 1e-8;     // singular values kept above rel * sigma_max
inline constexpr double margin_slack = 1e-12;    // |x.y| >= gamma - slack

}  // namespace qdml::tol
