#include "qdml/statevec.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numbers>

#include "qdml/parallel.hpp"
#include "qdml/tolerances.hpp"

namespace qdml {

namespace {

constexpr int kMaxQubits = 22;

void check_register_size(int n) {
    if (n < 1) throw StructuralError("register needs at least one qubit");
    if (n > kMaxQubits)
        throw CapacityError("register of " + std::to_string(n) + " qubits exceeds the dense limit of " +
                            std::to_string(kMaxQubits));
}

// X/Y flip mask plus the phase data for a Pauli string acting on n qubits:
// P|i> = phase(i) |i ^ xmask>, phase(i) = i^{n_Y} * (-1)^{popcount(i & sign_mask)}.
struct PauliMasks {
    std::uint64_t xmask = 0;
    std::uint64_t sign_mask = 0;
    int n_y = 0;
};

PauliMasks pauli_masks(const PauliString& p, int n) {
    if (p.n_qubits() != n)
        throw StructuralError("Pauli string spans " + std::to_string(p.n_qubits()) +
                              " qubits but the register has " + std::to_string(n));
    PauliMasks m;
    for (int q = 0; q < n; ++q) {
        const std::uint64_t b = qubit_mask(n, q);
        switch (p.labels[q]) {
            case Pauli::I: break;
            case Pauli::X: m.xmask |= b; break;
            case Pauli::Y:
                m.xmask |= b;
                m.sign_mask |= b;
                ++m.n_y;
                break;
            case Pauli::Z: m.sign_mask |= b; break;
        }
    }
    return m;
}

cplx pauli_phase(const PauliMasks& m, std::uint64_t i) {
    static constexpr cplx i_pow[4] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
    cplx ph = i_pow[m.n_y & 3];
    if (std::popcount(i & m.sign_mask) & 1) ph = -ph;
    return ph;
}

bool in_scope(std::uint64_t i, ControlScope s) { return (i & s.mask) == s.value; }

void check_scope_disjoint(std::uint64_t op_mask, ControlScope s, const char* what) {
    if (op_mask & s.mask)
        throw StructuralError(std::string(what) + " acts on a control qubit of its scope");
}

std::uint64_t targets_mask(const std::vector<int>& qubits, int n) {
    std::uint64_t m = 0;
    for (int q : qubits) {
        if (q < 0 || q >= n) throw StructuralError("target qubit out of range");
        const std::uint64_t b = qubit_mask(n, q);
        if (m & b) throw StructuralError("duplicate target qubit");
        m |= b;
    }
    return m;
}

// Local index of i restricted to the listed qubits, qubits[0] most significant.
std::uint64_t extract_local(std::uint64_t i, const std::vector<int>& qubits, int n) {
    std::uint64_t l = 0;
    for (int q : qubits) l = (l << 1) | ((i >> (n - 1 - q)) & 1ull);
    return l;
}

// offsets[l] = global bits corresponding to local index l.
std::vector<std::uint64_t> local_offsets(const std::vector<int>& qubits, int n) {
    const int k = static_cast<int>(qubits.size());
    std::vector<std::uint64_t> off(std::size_t{1} << k, 0);
    for (std::uint64_t l = 0; l < off.size(); ++l) {
        std::uint64_t v = 0;
        for (int t = 0; t < k; ++t)
            if ((l >> (k - 1 - t)) & 1ull) v |= qubit_mask(n, qubits[t]);
        off[l] = v;
    }
    return off;
}

// Enumerates indices whose bits inside `hole_mask` are zero: g-th such index.
std::uint64_t deposit_outside(std::uint64_t g, std::uint64_t hole_mask, int n) {
    std::uint64_t out = 0;
    int gb = 0;
    for (int b = 0; b < n; ++b) {
        const std::uint64_t bit = std::uint64_t{1} << b;
        if (hole_mask & bit) continue;
        if ((g >> gb) & 1ull) out |= bit;
        ++gb;
    }
    return out;
}

double resolve_angle(const PauliRotation& r, const ApplyCtx& ctx) {
    double theta = r.fixed_theta;
    if (r.slot >= 0) {
        if (static_cast<std::size_t>(r.slot) >= ctx.params.size())
            throw StructuralError("rotation slot " + std::to_string(r.slot) +
                                  " outside the parameter vector");
        theta = ctx.params[r.slot];
    }
    double phi = r.beta * theta;
    if (r.slot >= 0 && r.slot == ctx.shift_slot) phi += ctx.shift_phi;
    if (ctx.adjoint) phi = -phi;
    return phi;
}

double resolve_diag_angle(double coeff, int var, const ApplyCtx& ctx) {
    if (var < 0) return coeff;
    if (static_cast<std::size_t>(var) >= ctx.data.size())
        throw StructuralError("diagonal phase references data variable " + std::to_string(var) +
                              " outside the data vector");
    return -2.0 * std::numbers::pi * coeff * ctx.data[var];
}

void apply_rotation(StateVector& s, const PauliRotation& r, const ApplyCtx& ctx, ControlScope scope) {
    const int n = s.n_qubits;
    const PauliMasks m = pauli_masks(r.pauli, n);
    check_scope_disjoint(m.xmask, scope, "rotation");
    const double phi = resolve_angle(r, ctx);
    const double c = std::cos(0.5 * phi);
    const cplx mis(0.0, -std::sin(0.5 * phi));
    auto* a = s.amps.data();
    if (m.xmask == 0) {
        parallel_for(s.dim(), [&](std::size_t i) {
            if (!in_scope(i, scope)) return;
            a[i] *= c + mis * pauli_phase(m, i);
        });
        return;
    }
    parallel_for(s.dim(), [&](std::size_t i) {
        if (!in_scope(i, scope)) return;
        const std::uint64_t j = i ^ m.xmask;
        if (j < i) return;
        const cplx ai = a[i], aj = a[j];
        a[i] = c * ai + mis * pauli_phase(m, j) * aj;
        a[j] = c * aj + mis * pauli_phase(m, i) * ai;
    });
}

void apply_dense(StateVector& s, const DenseMatrix& d, const ApplyCtx& ctx, ControlScope scope) {
    const int n = s.n_qubits;
    const int k = static_cast<int>(d.qubits.size());
    if (k > 12) throw CapacityError("dense matrix limited to 12 qubits");
    const std::uint64_t tmask = targets_mask(d.qubits, n);
    check_scope_disjoint(tmask, scope, "dense matrix");
    const std::uint64_t ld = std::uint64_t{1} << k;
    if (d.mat.size() != ld * ld) throw StructuralError("dense matrix size does not match its qubit list");
    const auto off = local_offsets(d.qubits, n);
    const std::uint64_t groups = s.dim() >> k;
    const bool adj = ctx.adjoint;
    auto* a = s.amps.data();
    const cplx* mat = d.mat.data();
    parallel_for(groups, [&](std::size_t g) {
        const std::uint64_t base = deposit_outside(g, tmask, n);
        if (!in_scope(base, scope)) return;
        cplx x[1 << 12];
        for (std::uint64_t l = 0; l < ld; ++l) x[l] = a[base | off[l]];
        for (std::uint64_t r = 0; r < ld; ++r) {
            cplx acc = 0.0;
            if (adj) {
                for (std::uint64_t cc = 0; cc < ld; ++cc) acc += std::conj(mat[cc * ld + r]) * x[cc];
            } else {
                for (std::uint64_t cc = 0; cc < ld; ++cc) acc += mat[r * ld + cc] * x[cc];
            }
            a[base | off[r]] = acc;
        }
    });
}

void apply_diagonal(StateVector& s, const DiagonalPhase& d, const ApplyCtx& ctx, ControlScope scope) {
    const int n = s.n_qubits;
    const int k = static_cast<int>(d.qubits.size());
    const std::uint64_t tmask = targets_mask(d.qubits, n);
    check_scope_disjoint(tmask, scope, "diagonal phase");
    const std::uint64_t ld = std::uint64_t{1} << k;
    if (d.coeffs.size() != ld || d.vars.size() != ld)
        throw StructuralError("diagonal phase table size does not match its qubit list");
    std::vector<cplx> table(ld);
    for (std::uint64_t l = 0; l < ld; ++l) {
        double ang = resolve_diag_angle(d.coeffs[l], d.vars[l], ctx);
        if (ctx.adjoint) ang = -ang;
        table[l] = std::polar(1.0, ang);
    }
    auto* a = s.amps.data();
    parallel_for(s.dim(), [&](std::size_t i) {
        if (!in_scope(i, scope)) return;
        a[i] *= table[extract_local(i, d.qubits, n)];
    });
}

void apply_permutation(StateVector& s, const Permutation& p, const ApplyCtx& ctx, ControlScope scope) {
    const int n = s.n_qubits;
    const int k = static_cast<int>(p.qubits.size());
    const std::uint64_t tmask = targets_mask(p.qubits, n);
    check_scope_disjoint(tmask, scope, "permutation");
    const std::uint64_t ld = std::uint64_t{1} << k;
    if (p.map.size() != ld) throw StructuralError("permutation table size does not match its qubit list");
    std::vector<std::uint64_t> table(ld);
    if (ctx.adjoint) {
        for (std::uint64_t l = 0; l < ld; ++l) table[p.map[l]] = l;
    } else {
        table = p.map;
    }
    const auto off = local_offsets(p.qubits, n);
    const std::vector<cplx> src(s.amps);
    auto* a = s.amps.data();
    parallel_for(s.dim(), [&](std::size_t i) {
        if (!in_scope(i, scope)) return;
        const std::uint64_t l = extract_local(i, p.qubits, n);
        a[(i & ~tmask) | off[table[l]]] = src[i];
    });
}

void apply_controlled(StateVector& s, const Controlled& c, const ApplyCtx& ctx, ControlScope scope) {
    const int n = s.n_qubits;
    if (c.control < 0 || c.control >= n) throw StructuralError("control qubit out of range");
    if (!c.inner) throw StructuralError("controlled unitary without an inner operation");
    const std::uint64_t b = qubit_mask(n, c.control);
    if (scope.mask & b) throw StructuralError("nested control reuses a control qubit");
    ControlScope inner_scope{scope.mask | b, scope.value | (c.value ? b : 0)};
    apply_inplace(s, *c.inner, ctx, inner_scope);
}

}  // namespace

// ---- PauliString -----------------------------------------------------------

PauliString PauliString::single(int n, int qubit, Pauli p) {
    if (qubit < 0 || qubit >= n) throw StructuralError("Pauli qubit out of range");
    PauliString out = identity(n);
    out.labels[qubit] = p;
    return out;
}

PauliString PauliString::parse(std::string_view text) {
    PauliString out;
    out.labels.reserve(text.size());
    for (char ch : text) {
        switch (ch) {
            case 'I': out.labels.push_back(Pauli::I); break;
            case 'X': out.labels.push_back(Pauli::X); break;
            case 'Y': out.labels.push_back(Pauli::Y); break;
            case 'Z': out.labels.push_back(Pauli::Z); break;
            default: throw ValidationError("Pauli string may contain only I, X, Y, Z");
        }
    }
    if (out.labels.empty()) throw ValidationError("empty Pauli string");
    return out;
}

bool PauliString::is_identity() const {
    return std::all_of(labels.begin(), labels.end(), [](Pauli p) { return p == Pauli::I; });
}

std::string PauliString::str() const {
    std::string out;
    out.reserve(labels.size());
    for (Pauli p : labels) out.push_back("IXYZ"[static_cast<int>(p)]);
    return out;
}

// ---- StateVector -----------------------------------------------------------

StateVector StateVector::basis(int n, std::uint64_t index) {
    check_register_size(n);
    if (index >= (std::uint64_t{1} << n)) throw StructuralError("basis index out of range");
    StateVector s;
    s.n_qubits = n;
    s.amps.assign(std::uint64_t{1} << n, cplx{0.0, 0.0});
    s.amps[index] = 1.0;
    return s;
}

StateVector StateVector::from_amplitudes(int n, std::vector<cplx> amplitudes) {
    check_register_size(n);
    if (amplitudes.size() != (std::uint64_t{1} << n))
        throw StructuralError("amplitude vector length is not 2^n");
    StateVector s;
    s.n_qubits = n;
    s.amps = std::move(amplitudes);
    s.check_normalized(tol::norm);
    return s;
}

double StateVector::norm() const {
    const cplx* a = amps.data();
    const double n2 = blocked_sum<double>(amps.size(), [a](std::size_t i) { return std::norm(a[i]); });
    return std::sqrt(n2);
}

void StateVector::check_normalized(double tolerance) const {
    const double nn = norm();
    if (std::abs(nn - 1.0) > tolerance)
        throw ValidationError("state norm " + std::to_string(nn) + " is not 1 within tolerance");
}

cplx inner_product(const StateVector& a, const StateVector& b) {
    if (a.n_qubits != b.n_qubits) throw StructuralError("inner product of mismatched registers");
    const cplx* pa = a.amps.data();
    const cplx* pb = b.amps.data();
    return blocked_sum<cplx>(a.amps.size(),
                             [pa, pb](std::size_t i) { return std::conj(pa[i]) * pb[i]; });
}

// ---- factories -------------------------------------------------------------

UnitarySpec make_rotation(PauliString pauli, double beta, int slot) {
    if (pauli.is_identity()) throw ValidationError("rotation about the identity string");
    return UnitarySpec{PauliRotation{std::move(pauli), beta, slot, 0.0}};
}

UnitarySpec make_fixed_rotation(PauliString pauli, double angle_phi) {
    if (pauli.is_identity()) throw ValidationError("rotation about the identity string");
    return UnitarySpec{PauliRotation{std::move(pauli), 1.0, -1, angle_phi}};
}

UnitarySpec make_dense(std::vector<int> qubits, std::vector<cplx> mat) {
    if (qubits.empty()) throw ValidationError("dense matrix needs at least one qubit");
    const std::uint64_t ld = std::uint64_t{1} << qubits.size();
    if (mat.size() != ld * ld) throw StructuralError("dense matrix size is not 4^k");
    double worst = 0.0;
    for (std::uint64_t r = 0; r < ld; ++r) {
        for (std::uint64_t c = 0; c < ld; ++c) {
            cplx acc = 0.0;
            for (std::uint64_t m = 0; m < ld; ++m) acc += std::conj(mat[m * ld + r]) * mat[m * ld + c];
            const double dev = std::abs(acc - (r == c ? cplx{1.0, 0.0} : cplx{0.0, 0.0}));
            worst = std::max(worst, dev);
        }
    }
    if (worst > tol::unitary_input)
        throw ValidationError("dense matrix is not unitary (max deviation " + std::to_string(worst) + ")");
    return UnitarySpec{DenseMatrix{std::move(qubits), std::move(mat)}};
}

UnitarySpec make_diagonal(std::vector<int> qubits, std::vector<double> coeffs, std::vector<int> vars) {
    if (qubits.empty()) throw ValidationError("diagonal phase needs at least one qubit");
    const std::uint64_t ld = std::uint64_t{1} << qubits.size();
    if (coeffs.size() != ld || vars.size() != ld)
        throw StructuralError("diagonal phase tables must have 2^k entries");
    return UnitarySpec{DiagonalPhase{std::move(qubits), std::move(coeffs), std::move(vars)}};
}

UnitarySpec make_permutation(std::vector<int> qubits, std::vector<std::uint64_t> map) {
    if (qubits.empty()) throw ValidationError("permutation needs at least one qubit");
    const std::uint64_t ld = std::uint64_t{1} << qubits.size();
    if (map.size() != ld) throw StructuralError("permutation table must have 2^k entries");
    std::vector<bool> seen(ld, false);
    for (std::uint64_t v : map) {
        if (v >= ld || seen[v]) throw ValidationError("permutation table is not a bijection");
        seen[v] = true;
    }
    return UnitarySpec{Permutation{std::move(qubits), std::move(map)}};
}

UnitarySpec make_controlled(int control, int value, UnitarySpec inner) {
    if (value != 0 && value != 1) throw ValidationError("control value must be 0 or 1");
    if (control < 0) throw StructuralError("control qubit out of range");
    if (const auto* rot = std::get_if<PauliRotation>(&inner.op)) {
        if (control < rot->pauli.n_qubits() && rot->pauli.labels[control] != Pauli::I)
            throw StructuralError("controlled rotation acts on its own control qubit");
    }
    return UnitarySpec{Controlled{control, value, std::make_shared<UnitarySpec>(std::move(inner))}};
}

// ---- apply -----------------------------------------------------------------

void apply_inplace(StateVector& state, const UnitarySpec& u, const ApplyCtx& ctx, ControlScope scope) {
    std::visit(
        [&](const auto& op) {
            using T = std::decay_t<decltype(op)>;
            if constexpr (std::is_same_v<T, PauliRotation>) {
                apply_rotation(state, op, ctx, scope);
            } else if constexpr (std::is_same_v<T, DenseMatrix>) {
                apply_dense(state, op, ctx, scope);
            } else if constexpr (std::is_same_v<T, DiagonalPhase>) {
                apply_diagonal(state, op, ctx, scope);
            } else if constexpr (std::is_same_v<T, Permutation>) {
                apply_permutation(state, op, ctx, scope);
            } else {
                apply_controlled(state, op, ctx, scope);
            }
        },
        u.op);
}

StateVector apply(const StateVector& state, const UnitarySpec& u, const ApplyCtx& ctx) {
    StateVector out = state;
    apply_inplace(out, u, ctx);
    return out;
}

void apply_pauli_inplace(StateVector& state, const PauliString& p, ControlScope scope) {
    const PauliMasks m = pauli_masks(p, state.n_qubits);
    check_scope_disjoint(m.xmask, scope, "Pauli");
    auto* a = state.amps.data();
    if (m.xmask == 0) {
        parallel_for(state.dim(), [&](std::size_t i) {
            if (!in_scope(i, scope)) return;
            a[i] *= pauli_phase(m, i);
        });
        return;
    }
    parallel_for(state.dim(), [&](std::size_t i) {
        if (!in_scope(i, scope)) return;
        const std::uint64_t j = i ^ m.xmask;
        if (j < i) return;
        const cplx ai = a[i], aj = a[j];
        a[i] = pauli_phase(m, j) * aj;
        a[j] = pauli_phase(m, i) * ai;
    });
}

double expectation(const StateVector& state, const PauliString& obs) {
    const PauliMasks m = pauli_masks(obs, state.n_qubits);
    const cplx* a = state.amps.data();
    const cplx val = blocked_sum<cplx>(state.dim(), [&](std::size_t i) {
        return std::conj(a[i ^ m.xmask]) * pauli_phase(m, i) * a[i];
    });
    if (std::abs(val.imag()) > tol::imag_residue)
        throw ValidationError("expectation has imaginary residue " + std::to_string(val.imag()));
    return val.real();
}

int sample_pm_from_expectation(double expect, RngStream& rng) {
    const double e = std::clamp(expect, -1.0, 1.0);
    return rng.next_double() < 0.5 * (1.0 + e) ? 1 : -1;
}

int sample_pm(const StateVector& state, const PauliString& obs, RngStream& rng) {
    return sample_pm_from_expectation(expectation(state, obs), rng);
}

std::vector<cplx> realize_dense(const UnitarySpec& u, int n, const ApplyCtx& ctx) {
    check_register_size(n);
    if (n > 12) throw CapacityError("dense realization limited to 12 qubits");
    const std::uint64_t d = std::uint64_t{1} << n;
    std::vector<cplx> mat(d * d);
    for (std::uint64_t c = 0; c < d; ++c) {
        StateVector col = StateVector::basis(n, c);
        apply_inplace(col, u, ctx);
        for (std::uint64_t r = 0; r < d; ++r) mat[r * d + c] = col.amps[r];
    }
    return mat;
}

}  // namespace qdml
