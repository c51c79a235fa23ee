#include "qdml/circuits.hpp"

#include <Eigen/Dense>
#include <bit>
#include <cmath>
#include <numbers>

#include "qdml/tolerances.hpp"

namespace qdml {

namespace {

int log2_exact(std::uint64_t n, const char* what) {
    if (n < 2 || (n & (n - 1)) != 0)
        throw ValidationError(std::string(what) + " must be a power of two, got " + std::to_string(n));
    return std::countr_zero(n);
}

const std::vector<UnitarySpec>& side_ops(const LayerSpec& layer, Side s) {
    return s == Side::bob ? layer.b_ops : layer.a_ops;
}

Eigen::MatrixXd gaussian_matrix(int rows, int cols, RngStream stream) {
    Eigen::MatrixXd g(rows, cols);
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) g(r, c) = stream.gaussian();
    return g;
}

std::vector<int> all_qubits(int n) {
    std::vector<int> q(n);
    for (int i = 0; i < n; ++i) q[i] = i;
    return q;
}

// Walsh-Hadamard matrix, symmetric and self-inverse.
std::vector<cplx> hadamard_matrix(std::uint64_t dim) {
    std::vector<cplx> h(dim * dim);
    const double s = 1.0 / std::sqrt(static_cast<double>(dim));
    for (std::uint64_t r = 0; r < dim; ++r)
        for (std::uint64_t c = 0; c < dim; ++c)
            h[r * dim + c] = (std::popcount(r & c) & 1) ? -s : s;
    return h;
}

double sign_of(double v) { return v > 0 ? 1.0 : (v < 0 ? -1.0 : 0.0); }

// Amplitudes of the coefficient state used by the universal presets, plus
// its l1 weight. Layout |a>|b>|m> with a selecting derivative branch,
// b selecting cos/sin, m the harmonic.
std::pair<std::vector<cplx>, double> fourier_state(const std::vector<double>& fp,
                                                   const std::vector<double>& fm) {
    const std::size_t M = fp.size();
    if (fm.size() != M) throw StructuralError("cos and sin coefficient arrays differ in length");
    if (M == 0 || (M & (M - 1)) != 0)
        throw ValidationError("harmonic count must be a power of two");
    double norm1 = 0.0;
    for (double v : fp) norm1 += std::abs(v);
    for (double v : fm) norm1 += std::abs(v);
    std::vector<cplx> amps(4 * M, cplx{0, 0});
    if (norm1 == 0.0) {
        amps[0] = 1.0;
        return {std::move(amps), 0.0};
    }
    const double nu = 1.0 / std::sqrt(2.0 * norm1);
    for (std::size_t m = 0; m < M; ++m) {
        const double rp = std::sqrt(std::abs(fp[m])) * nu;
        const double rm = std::sqrt(std::abs(fm[m])) * nu;
        amps[m] = rp;                                             // a=0 b=0
        amps[2 * M + m] = sign_of(fp[m]) * rp;                    // a=1 b=0
        amps[M + m] = rm;                                         // a=0 b=1
        amps[3 * M + m] = cplx{0, -1} * (sign_of(fm[m]) * rm);    // a=1 b=1
    }
    return {std::move(amps), norm1};
}

// Reflection taking |0> to |target> (requires <0|target> real >= 0).
UnitarySpec householder_from_zero(int n, const std::vector<cplx>& target) {
    const std::uint64_t dim = std::uint64_t{1} << n;
    std::vector<cplx> w(target.size());
    double wn = 0.0;
    for (std::uint64_t i = 0; i < dim; ++i) {
        w[i] = (i == 0 ? cplx{1, 0} : cplx{0, 0}) - target[i];
        wn += std::norm(w[i]);
    }
    std::vector<cplx> mat(dim * dim, cplx{0, 0});
    for (std::uint64_t i = 0; i < dim; ++i) mat[i * dim + i] = 1.0;
    if (wn > 1e-24) {
        for (std::uint64_t r = 0; r < dim; ++r)
            for (std::uint64_t c = 0; c < dim; ++c) mat[r * dim + c] -= 2.0 * w[r] * std::conj(w[c]) / wn;
    }
    return make_dense(all_qubits(n), std::move(mat));
}

ModelSpec universal_model_base(const std::vector<cplx>& fhat, std::size_t M) {
    ModelSpec m;
    m.n_qubits = log2_exact(4 * M, "universal register size");
    m.encoder.kind = EncoderSpec::Kind::fixed_basis;
    m.encoder.basis_index = 0;
    m.loss_obs = PauliString::single(m.n_qubits, 0, Pauli::X);
    m.layers.emplace_back();
    m.layers[0].b_ops.push_back(householder_from_zero(m.n_qubits, fhat));
    return m;
}

}  // namespace

double BetaVector::norm1() const {
    double s = 0.0;
    for (double b : beta) s += std::abs(b);
    return s;
}

BetaVector beta_vector(const ModelSpec& m) {
    BetaVector out;
    out.beta.reserve(m.param_sites.size());
    for (const auto& site : m.param_sites) out.beta.push_back(site.beta);
    return out;
}

void validate_model(const ModelSpec& m) {
    if (m.n_qubits < 1) throw StructuralError("model needs at least one qubit");
    if (m.loss_obs.n_qubits() != m.n_qubits)
        throw StructuralError("loss observable does not span the register");
    if (m.loss_obs.is_identity()) throw ValidationError("loss observable is the identity");

    const int S = m.num_params();
    std::vector<int> seen(S, 0);
    for (int s = 0; s < S; ++s) {
        const ParamSite& site = m.param_sites[s];
        if (site.layer < 0 || site.layer >= m.num_layers())
            throw StructuralError("parameter site layer out of range");
        const auto& ops = side_ops(m.layers[site.layer], site.side);
        if (site.pos < 0 || static_cast<std::size_t>(site.pos) >= ops.size())
            throw StructuralError("parameter site position out of range");
        const auto* rot = std::get_if<PauliRotation>(&ops[site.pos].op);
        if (!rot || rot->slot != s || rot->beta != site.beta)
            throw StructuralError("parameter site does not match its rotation");
    }
    for (const auto& layer : m.layers) {
        for (Side side : {Side::bob, Side::alice}) {
            for (const auto& op : side_ops(layer, side)) {
                if (const auto* rot = std::get_if<PauliRotation>(&op.op)) {
                    if (rot->pauli.n_qubits() != m.n_qubits)
                        throw StructuralError("rotation string does not span the register");
                    if (rot->slot >= 0) {
                        if (rot->slot >= S) throw StructuralError("rotation slot beyond parameter count");
                        if (seen[rot->slot]++) throw StructuralError("slot used by two rotations");
                    }
                }
            }
        }
    }
    for (int s = 0; s < S; ++s)
        if (seen[s] != 1) throw StructuralError("slot " + std::to_string(s) + " not wired to a rotation");
}

StateVector encode(const EncoderSpec& e, int n_qubits) {
    switch (e.kind) {
        case EncoderSpec::Kind::fixed_basis:
            return StateVector::basis(n_qubits, e.basis_index);
        case EncoderSpec::Kind::amplitude:
            return StateVector::from_amplitudes(n_qubits, e.amplitudes);
        case EncoderSpec::Kind::plus_zero: {
            StateVector s = StateVector::basis(n_qubits, 0);
            const double r = 1.0 / std::sqrt(2.0);
            s.amps[0] = r;
            s.amps[std::uint64_t{1} << (n_qubits - 1)] = r;
            return s;
        }
        case EncoderSpec::Kind::data_parallel: {
            const int half = e.rows / 2;
            log2_exact(e.rows, "data-parallel row count");
            if (e.cols > 1) log2_exact(e.cols, "data-parallel column count");
            if (e.cols < 1) throw StructuralError("data-parallel column count must be positive");
            if (static_cast<std::uint64_t>(e.rows) * e.cols != (std::uint64_t{1} << n_qubits))
                throw StructuralError("data-parallel shape does not fill the register");
            if (e.xa.size() != static_cast<std::size_t>(half) * e.cols ||
                e.xb.size() != e.xa.size())
                throw StructuralError("data-parallel blocks must each be rows/2 x cols");
            double nb2 = 0.0;
            for (double v : e.xb) nb2 += v * v;
            std::vector<cplx> amps(std::uint64_t{1} << n_qubits, cplx{0, 0});
            for (int i = 0; i < half; ++i)
                for (int j = 0; j < e.cols; ++j) amps[std::uint64_t(i) * e.cols + j] = e.xa[i * e.cols + j];
            amps[std::uint64_t(half) * e.cols] = std::sqrt(nb2);
            return StateVector::from_amplitudes(n_qubits, std::move(amps));
        }
    }
    throw StructuralError("unknown encoder kind");
}

StateVector forward(const ModelSpec& m, std::span<const double> params,
                    std::span<const double> data, std::optional<AngleShift> shift) {
    ApplyCtx ctx{params, data, shift ? shift->slot : -1, shift ? shift->phi : 0.0, false};
    StateVector s = encode(m.encoder, m.n_qubits);
    for (const auto& layer : m.layers) {
        for (const auto& u : layer.b_ops) apply_inplace(s, u, ctx);
        for (const auto& u : layer.a_ops) apply_inplace(s, u, ctx);
    }
    return s;
}

double loss(const ModelSpec& m, std::span<const double> params, std::span<const double> data,
            std::optional<AngleShift> shift) {
    return expectation(forward(m, params, data, shift), m.loss_obs);
}

// ---- presets ---------------------------------------------------------------

SmoothPreset preset_smooth(int n, int L, int P, RngStream& rng) {
    if (n < 1 || L < 1 || P < 1) throw ValidationError("smooth preset needs n, L, P >= 1");
    ModelSpec m;
    m.n_qubits = n;
    m.encoder.kind = EncoderSpec::Kind::fixed_basis;
    m.encoder.basis_index = 0;
    m.loss_obs = PauliString::single(n, 0, Pauli::Z);
    int slot = 0;
    for (int l = 0; l < L; ++l) {
        LayerSpec layer;
        for (Side side : {Side::bob, Side::alice}) {
            for (int j = 0; j < P; ++j) {
                PauliString p = PauliString::identity(n);
                while (p.is_identity())
                    for (int q = 0; q < n; ++q) p.labels[q] = static_cast<Pauli>(rng.next_below(4));
                const double beta = rng.uniform(-1.0, 1.0);
                auto& ops = side == Side::bob ? layer.b_ops : layer.a_ops;
                ops.push_back(make_rotation(std::move(p), beta, slot));
                m.param_sites.push_back(ParamSite{side, l, j, beta});
                ++slot;
            }
        }
        m.layers.push_back(std::move(layer));
    }
    validate_model(m);
    BetaVector betas = beta_vector(m);
    return SmoothPreset{std::move(m), std::move(betas)};
}

SmoothPreset preset_cos_theta() {
    ModelSpec m;
    m.n_qubits = 1;
    m.encoder.kind = EncoderSpec::Kind::fixed_basis;
    m.encoder.basis_index = 0;
    m.loss_obs = PauliString::parse("Z");
    LayerSpec layer;
    layer.a_ops.push_back(make_rotation(PauliString::parse("X"), 1.0, 0));
    m.layers.push_back(std::move(layer));
    m.param_sites.push_back(ParamSite{Side::alice, 0, 0, 1.0});
    validate_model(m);
    BetaVector betas = beta_vector(m);
    return SmoothPreset{std::move(m), std::move(betas)};
}

ModelSpec preset_raz(int N, std::uint64_t subspace_seed, std::span<const double> x) {
    const int n = log2_exact(N, "subspace instance size");
    if (x.size() != static_cast<std::size_t>(N)) throw StructuralError("input length is not N");
    RngStream root(subspace_seed);
    const Eigen::MatrixXd V =
        Eigen::HouseholderQR<Eigen::MatrixXd>(gaussian_matrix(N, N, root.split(1)))
            .householderQ();
    const Eigen::MatrixXd O =
        Eigen::HouseholderQR<Eigen::MatrixXd>(gaussian_matrix(N, N, root.split(2)))
            .householderQ();

    std::vector<cplx> amat(std::size_t(N) * N), bmat(std::size_t(N) * N);
    for (int r = 0; r < N; ++r)
        for (int c = 0; c < N; ++c) {
            amat[std::size_t(r) * N + c] = V(c, r);  // basis aligner V^T
            bmat[std::size_t(r) * N + c] = O(r, c);
        }

    ModelSpec m;
    m.n_qubits = n;
    m.encoder.kind = EncoderSpec::Kind::amplitude;
    m.encoder.amplitudes.assign(x.begin(), x.end());
    m.loss_obs = PauliString::single(n, 0, Pauli::Z);
    LayerSpec layer;
    layer.b_ops.push_back(make_dense(all_qubits(n), std::move(bmat)));
    layer.a_ops.push_back(make_dense(all_qubits(n), std::move(amat)));
    m.layers.push_back(std::move(layer));
    validate_model(m);
    return m;
}

std::vector<double> raz_sample_input(int N, std::uint64_t subspace_seed, int target, RngStream& rng,
                                     double off_component) {
    const int half = N / 2;
    if (target != 1 && target != 2) throw ValidationError("target subspace must be 1 or 2");
    if (off_component < 0.0 || off_component >= 1.0)
        throw ValidationError("off_component must lie in [0, 1)");
    log2_exact(N, "subspace instance size");
    RngStream root(subspace_seed);
    const Eigen::MatrixXd V =
        Eigen::HouseholderQR<Eigen::MatrixXd>(gaussian_matrix(N, N, root.split(1)))
            .householderQ();
    const Eigen::MatrixXd O =
        Eigen::HouseholderQR<Eigen::MatrixXd>(gaussian_matrix(N, N, root.split(2)))
            .householderQ();

    auto half_vector = [&](int which) {
        Eigen::VectorXd c(half);
        for (int i = 0; i < half; ++i) c(i) = rng.gaussian();
        c.normalize();
        Eigen::VectorXd u = Eigen::VectorXd::Zero(N);
        const int base = which == 1 ? 0 : half;
        for (int i = 0; i < half; ++i) u += c(i) * V.col(base + i);
        return u;
    };
    Eigen::VectorXd u = half_vector(target);
    if (off_component > 0.0) {
        const Eigen::VectorXd other = half_vector(target == 1 ? 2 : 1);
        u = std::sqrt(1.0 - off_component * off_component) * u + off_component * other;
    }
    const Eigen::VectorXd x = O.transpose() * u;
    return std::vector<double>(x.data(), x.data() + N);
}

ModelSpec preset_pointer_chasing(int N, const std::vector<std::uint64_t>& f_a,
                                 const std::vector<std::uint64_t>& f_b, int L0, std::uint64_t x) {
    const int n = log2_exact(N, "pointer domain size");
    if (n < 2) throw ValidationError("pointer domain needs at least 4 elements");
    if (L0 < 1) throw ValidationError("need at least one pointer jump");
    if (x >= static_cast<std::uint64_t>(N)) throw StructuralError("start pointer out of range");
    const auto qubits = all_qubits(n);
    const UnitarySpec ub = make_permutation(qubits, f_b);
    const UnitarySpec ua = make_permutation(qubits, f_a);
    const UnitarySpec swap_ends = make_permutation({0, n - 1}, {0, 2, 1, 3});

    ModelSpec m;
    m.n_qubits = n;
    m.encoder.kind = EncoderSpec::Kind::fixed_basis;
    m.encoder.basis_index = x;
    m.loss_obs = PauliString::single(n, 0, Pauli::Z);
    const int pairs = L0 / 2;
    for (int i = 0; i < pairs; ++i) {
        LayerSpec layer;
        layer.b_ops.push_back(ub);
        layer.a_ops.push_back(ua);
        m.layers.push_back(std::move(layer));
    }
    LayerSpec last;
    if (L0 % 2 == 1) {
        last.b_ops.push_back(ub);
        last.a_ops.push_back(swap_ends);
    } else {
        last.b_ops.push_back(swap_ends);
    }
    m.layers.push_back(std::move(last));
    validate_model(m);
    return m;
}

std::uint64_t pointer_chase(const std::vector<std::uint64_t>& f_a,
                            const std::vector<std::uint64_t>& f_b, int L0, std::uint64_t x) {
    std::uint64_t v = x;
    for (int i = 0; i < L0; ++i) v = (i % 2 == 0 ? f_b : f_a).at(v);
    return v;
}

std::uint64_t ladder_label_index(int Nprime, int label) {
    if (label < 1 || label > Nprime) throw ValidationError("ladder label out of range");
    if (label == 1) return 0;
    if (label == 2) return static_cast<std::uint64_t>(Nprime) / 2;
    const int r = label - 2;
    return static_cast<std::uint64_t>(r < Nprime / 2 ? r : r + 1);
}

double ladder_frequency(const std::vector<std::vector<double>>& lambda, const std::vector<int>& path) {
    double f = 0.0;
    for (std::size_t l = 0; l < path.size(); ++l) f += lambda[l][path[l] - 1];
    return f;
}

ModelSpec preset_fourier_ladder(int Nprime, int L, const std::vector<std::vector<double>>& lambda,
                                const std::vector<int>& path) {
    const int n = log2_exact(Nprime, "ladder basis size");
    if (L < 1) throw ValidationError("ladder needs at least one layer");
    if (lambda.size() != static_cast<std::size_t>(L) || path.size() != static_cast<std::size_t>(L))
        throw StructuralError("lambda and path must have L entries");
    for (const auto& row : lambda)
        if (row.size() != static_cast<std::size_t>(Nprime))
            throw StructuralError("each lambda row must have Nprime entries");
    for (int j : path)
        if (j < 2 || j > Nprime) throw ValidationError("path labels must lie in {2..Nprime}");
    if (path.back() != 2) throw ValidationError("path must end at label 2 for the X readout");
    for (int l = 0; l < L; ++l)
        if (lambda[l][0] != 0.0) throw ValidationError("anchor frequency lambda[l][1] must be zero");
    if (lambda[L - 1][1] != 0.0)
        throw ValidationError("final-layer frequency on label 2 must be zero");

    ModelSpec m;
    m.n_qubits = n;
    m.encoder.kind = EncoderSpec::Kind::plus_zero;
    m.loss_obs = PauliString::single(n, 0, Pauli::X);
    int prev = 2;
    for (int l = 0; l < L; ++l) {
        LayerSpec layer;
        std::vector<std::uint64_t> perm(Nprime);
        for (int i = 0; i < Nprime; ++i) perm[i] = i;
        std::swap(perm[ladder_label_index(Nprime, prev)], perm[ladder_label_index(Nprime, path[l])]);
        layer.b_ops.push_back(make_permutation(all_qubits(n), std::move(perm)));
        std::vector<double> coeffs(Nprime);
        for (int k = 1; k <= Nprime; ++k) coeffs[ladder_label_index(Nprime, k)] = lambda[l][k - 1];
        layer.a_ops.push_back(make_diagonal(all_qubits(n), std::move(coeffs),
                                            std::vector<int>(Nprime, 0)));
        m.layers.push_back(std::move(layer));
        prev = path[l];
    }
    validate_model(m);
    return m;
}

ModelSpec preset_spectrum_ladder(int Nprime, int L, const std::vector<std::vector<double>>& lambda) {
    const int n = log2_exact(Nprime, "ladder basis size");
    if (L < 1) throw ValidationError("ladder needs at least one layer");
    if (lambda.size() != static_cast<std::size_t>(L))
        throw StructuralError("lambda must have L rows");
    ModelSpec m;
    m.n_qubits = n;
    m.encoder.kind = EncoderSpec::Kind::fixed_basis;
    m.encoder.basis_index = 0;
    m.loss_obs = PauliString::single(n, 0, Pauli::X);
    for (int l = 0; l < L; ++l) {
        if (lambda[l].size() != static_cast<std::size_t>(Nprime))
            throw StructuralError("each lambda row must have Nprime entries");
        LayerSpec layer;
        layer.b_ops.push_back(make_dense(all_qubits(n), hadamard_matrix(Nprime)));
        layer.a_ops.push_back(
            make_diagonal(all_qubits(n), lambda[l], std::vector<int>(Nprime, 0)));
        m.layers.push_back(std::move(layer));
    }
    validate_model(m);
    return m;
}

ModelSpec preset_two_variable_ladder(int Nprime, int L,
                                     const std::vector<std::vector<double>>& lambda) {
    ModelSpec m = preset_spectrum_ladder(Nprime, L, lambda);
    std::vector<int> vars(Nprime);
    for (int i = 0; i < Nprime; ++i) vars[i] = i < Nprime / 2 ? 0 : 1;
    for (auto& layer : m.layers) {
        auto& diag = std::get<DiagonalPhase>(layer.a_ops[0].op);
        diag.vars = vars;
    }
    return m;
}

UniversalPreset preset_universal_approx(const std::vector<double>& fp, const std::vector<double>& fm) {
    auto [fhat, norm1] = fourier_state(fp, fm);
    const std::size_t M = fp.size();
    ModelSpec m = universal_model_base(fhat, M);
    std::vector<double> coeffs(4 * M, 0.0);
    std::vector<int> vars(4 * M, -1);
    for (std::size_t i = 2 * M; i < 4 * M; ++i) {
        coeffs[i] = -static_cast<double>((i - 2 * M) % M);
        vars[i] = 0;
    }
    m.layers[0].a_ops.push_back(make_diagonal(all_qubits(m.n_qubits), std::move(coeffs), std::move(vars)));
    validate_model(m);
    return UniversalPreset{std::move(m), norm1};
}

UniversalPreset preset_universal_hierarchical(const std::vector<double>& fp,
                                              const std::vector<double>& fm) {
    auto [fhat, norm1] = fourier_state(fp, fm);
    const std::size_t M = fp.size();
    ModelSpec m = universal_model_base(fhat, M);
    const int n = m.n_qubits;
    const int depth = std::countr_zero(M);  // harmonic register width
    for (int l = 1; l <= depth; ++l) {
        const double weight = static_cast<double>(std::uint64_t{1} << (l - 1));
        UnitarySpec phase = make_controlled(
            0, 1, make_diagonal({n - l}, {0.0, -weight}, {-1, 0}));
        if (l == 1) {
            m.layers[0].a_ops.push_back(std::move(phase));
        } else {
            LayerSpec layer;
            layer.a_ops.push_back(std::move(phase));
            m.layers.push_back(std::move(layer));
        }
    }
    validate_model(m);
    return UniversalPreset{std::move(m), norm1};
}

}  // namespace qdml
