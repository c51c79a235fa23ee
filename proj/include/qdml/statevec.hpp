#pragma once

#include <complex>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "qdml/errors.hpp"
#include "qdml/rng.hpp"

namespace qdml {

using cplx = std::complex<double>;

// Qubit 0 is the leftmost / most significant bit of the basis index:
// bit(q, i) = (i >> (n - 1 - q)) & 1.
inline int bit_of(std::uint64_t index, int n_qubits, int qubit) {
    return static_cast<int>((index >> (n_qubits - 1 - qubit)) & 1ull);
}

inline std::uint64_t qubit_mask(int n_qubits, int qubit) {
    return std::uint64_t{1} << (n_qubits - 1 - qubit);
}

enum class Pauli : std::uint8_t { I, X, Y, Z };

// Tensor product of single-qubit Paulis, one label per qubit (qubit 0 first).
struct PauliString {
    std::vector<Pauli> labels;

    static PauliString identity(int n) { return PauliString{std::vector<Pauli>(n, Pauli::I)}; }
    static PauliString single(int n, int qubit, Pauli p);
    static PauliString parse(std::string_view text);  // e.g. "ZIX"

    int n_qubits() const { return static_cast<int>(labels.size()); }
    bool is_identity() const;
    std::string str() const;
    bool operator==(const PauliString&) const = default;
};

// Dense state over n qubits; amps.size() == 2^n.
struct StateVector {
    int n_qubits = 0;
    std::vector<cplx> amps;

    static StateVector basis(int n, std::uint64_t index);
    static StateVector from_amplitudes(int n, std::vector<cplx> amplitudes);  // validates norm

    std::uint64_t dim() const { return amps.size(); }
    double norm() const;
    void check_normalized(double tolerance) const;  // throws ValidationError
};

cplx inner_product(const StateVector& a, const StateVector& b);  // <a|b>

// ---- Unitary specifications ----------------------------------------------

struct UnitarySpec;

// exp(-i/2 * phi * P) with phi = beta * theta (+ optional shift); theta is
// params[slot], or fixed_theta when slot < 0.
struct PauliRotation {
    PauliString pauli;
    double beta = 1.0;
    int slot = -1;
    double fixed_theta = 0.0;
};

// Explicit matrix on the listed qubits; qubits[0] is the most significant
// bit of the local index. Row-major, dimension 2^k x 2^k.
struct DenseMatrix {
    std::vector<int> qubits;
    std::vector<cplx> mat;
};

// Diagonal phases on the listed qubits. Entry l of the local index gets
// angle coeffs[l] when vars[l] < 0 (literal radians), otherwise
// -2*pi*coeffs[l]*data[vars[l]].
struct DiagonalPhase {
    std::vector<int> qubits;
    std::vector<double> coeffs;
    std::vector<int> vars;
};

// Relabeling of the local computational basis on the listed qubits:
// |l> -> |map[l]>.
struct Permutation {
    std::vector<int> qubits;
    std::vector<std::uint64_t> map;
};

// Apply inner only on the subspace where the control qubit reads `value`.
struct Controlled {
    int control = 0;
    int value = 1;
    std::shared_ptr<UnitarySpec> inner;
};

struct UnitarySpec {
    std::variant<PauliRotation, DenseMatrix, DiagonalPhase, Permutation, Controlled> op;
};

// Validating factories. Prefer these over brace-initializing UnitarySpec.
UnitarySpec make_rotation(PauliString pauli, double beta, int slot);
UnitarySpec make_fixed_rotation(PauliString pauli, double angle_phi);  // beta=1, fixed theta
UnitarySpec make_dense(std::vector<int> qubits, std::vector<cplx> mat);
UnitarySpec make_diagonal(std::vector<int> qubits, std::vector<double> coeffs, std::vector<int> vars);
UnitarySpec make_permutation(std::vector<int> qubits, std::vector<std::uint64_t> map);
UnitarySpec make_controlled(int control, int value, UnitarySpec inner);

// Context threaded through apply: parameter vector, data scalars, an
// optional additive angle shift for one rotation slot (parameter-shift
// evaluations), and the adjoint flag.
struct ApplyCtx {
    std::span<const double> params = {};
    std::span<const double> data = {};
    int shift_slot = -1;
    double shift_phi = 0.0;
    bool adjoint = false;
};

// Extra control predicate: act only where (index & mask) == value. Used to
// realize Controlled and the feature-state construction. The mask must not
// overlap the qubits the unitary acts on.
struct ControlScope {
    std::uint64_t mask = 0;
    std::uint64_t value = 0;
};

void apply_inplace(StateVector& state, const UnitarySpec& u, const ApplyCtx& ctx = {},
                   ControlScope scope = {});
StateVector apply(const StateVector& state, const UnitarySpec& u, const ApplyCtx& ctx = {});

// |state> -> P|state> on the scoped subspace (P is unitary and Hermitian).
void apply_pauli_inplace(StateVector& state, const PauliString& p, ControlScope scope = {});

// <state|P|state>; asserts the imaginary residue is below tol::imag_residue.
double expectation(const StateVector& state, const PauliString& obs);

// Single-shot +-1 sample of a unit-involution observable given its
// expectation; shared Bernoulli core with clamping to [-1, 1].
int sample_pm_from_expectation(double expect, RngStream& rng);
int sample_pm(const StateVector& state, const PauliString& obs, RngStream& rng);

// Dense 2^n x 2^n realization (column by column); for small registers in
// validation and tests.
std::vector<cplx> realize_dense(const UnitarySpec& u, int n, const ApplyCtx& ctx = {});

}  // namespace qdml
