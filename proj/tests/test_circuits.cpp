#include <cmath>
#include <numbers>

#include "doctest.h"
#include "oracles.hpp"
#include "qdml/circuits.hpp"
#include "qdml/tolerances.hpp"

using namespace qdml;
using std::numbers::pi;

namespace {

std::vector<cplx> oracle_forward(const ModelSpec& m, std::span<const double> params,
                                 std::span<const double> data = {}) {
    std::vector<cplx> v = encode(m.encoder, m.n_qubits).amps;
    for (const auto& layer : m.layers) {
        for (const auto& u : layer.b_ops) v = oracle::apply_mat(oracle::gate_matrix(u, m.n_qubits, params, data), v);
        for (const auto& u : layer.a_ops) v = oracle::apply_mat(oracle::gate_matrix(u, m.n_qubits, params, data), v);
    }
    return v;
}

}  // namespace

TEST_CASE("cos-theta instance evaluates exactly") {
    const auto preset = preset_cos_theta();
    CHECK(preset.betas.beta.size() == 1);
    CHECK(preset.betas.norm1() == 1.0);
    for (double theta : {0.0, 0.3, 1.2, pi - 0.5, 2.9, 4.4}) {
        const double params[] = {theta};
        CHECK(std::abs(loss(preset.model, params) - std::cos(theta)) < 1e-12);
    }
}

TEST_CASE("smooth preset structure and slot order") {
    RngStream rng(11);
    const int n = 3, L = 2, P = 4;
    const auto preset = preset_smooth(n, L, P, rng);
    const auto& m = preset.model;
    REQUIRE(m.num_params() == 2 * P * L);
    REQUIRE(m.num_layers() == L);
    for (int s = 0; s < m.num_params(); ++s) {
        const auto& site = m.param_sites[s];
        CHECK(site.layer == s / (2 * P));
        CHECK(site.side == ((s % (2 * P)) < P ? Side::bob : Side::alice));
        CHECK(site.pos == (s % P));
        CHECK(std::abs(site.beta) <= 1.0);
    }
    CHECK(preset.betas.beta.size() == static_cast<std::size_t>(2 * P * L));
}

TEST_CASE("smooth forward matches the dense oracle") {
    RngStream rng(12);
    for (int trial = 0; trial < 8; ++trial) {
        const int n = 1 + static_cast<int>(rng.next_below(4));
        const int L = 1 + static_cast<int>(rng.next_below(3));
        const int P = 1 + static_cast<int>(rng.next_below(3));
        const auto preset = preset_smooth(n, L, P, rng);
        std::vector<double> params(preset.model.num_params());
        for (auto& p : params) p = rng.uniform(-pi, pi);
        const StateVector got = forward(preset.model, params);
        const auto want = oracle_forward(preset.model, params);
        CHECK(oracle::max_abs_diff(got.amps, want) < 1e-12);
        const double l = loss(preset.model, params);
        CHECK(l >= -1.0 - 1e-12);
        CHECK(l <= 1.0 + 1e-12);
    }
}

TEST_CASE("plus_zero encoder") {
    EncoderSpec e;
    e.kind = EncoderSpec::Kind::plus_zero;
    const auto s = encode(e, 3);
    CHECK(std::abs(s.amps[0] - cplx{1 / std::sqrt(2.0), 0}) < 1e-15);
    CHECK(std::abs(s.amps[4] - cplx{1 / std::sqrt(2.0), 0}) < 1e-15);
    CHECK(std::abs(s.norm() - 1.0) < 1e-15);
}

TEST_CASE("data_parallel encoder layout") {
    EncoderSpec e;
    e.kind = EncoderSpec::Kind::data_parallel;
    e.rows = 2;
    e.cols = 2;
    e.xa = {0.5, 0.5};
    e.xb = {0.5, -0.5};
    const auto s = encode(e, 2);
    CHECK(std::abs(s.amps[0] - cplx{0.5, 0}) < 1e-15);
    CHECK(std::abs(s.amps[1] - cplx{0.5, 0}) < 1e-15);
    CHECK(std::abs(s.amps[2] - cplx{std::sqrt(0.5), 0}) < 1e-15);
    CHECK(std::abs(s.amps[3]) == 0.0);

    e.xb = {0.5, 0.5};  // norm stays 1, sign irrelevant to the marker weight
    CHECK(std::abs(encode(e, 2).amps[2] - cplx{std::sqrt(0.5), 0}) < 1e-15);

    e.xa = {1.0, 1.0};  // not normalized
    CHECK_THROWS_AS(encode(e, 2), ValidationError);
}

TEST_CASE("model validation catches wiring mistakes") {
    auto preset = preset_cos_theta();
    ModelSpec broken = preset.model;
    broken.param_sites[0].beta = 0.5;  // site beta disagrees with the rotation
    CHECK_THROWS_AS(validate_model(broken), StructuralError);

    broken = preset.model;
    broken.param_sites.clear();  // slot 0 now unwired
    CHECK_THROWS_AS(validate_model(broken), StructuralError);

    broken = preset.model;
    broken.loss_obs = PauliString::parse("ZZ");
    CHECK_THROWS_AS(validate_model(broken), StructuralError);
}

TEST_CASE("subspace preset separates the two halves exactly") {
    RngStream rng(21);
    for (int trial = 0; trial < 6; ++trial) {
        const int N = 16;
        const std::uint64_t seed = 1000 + trial;
        for (int target : {1, 2}) {
            const auto x = raz_sample_input(N, seed, target, rng);
            double n2 = 0;
            for (double v : x) n2 += v * v;
            CHECK(std::abs(n2 - 1.0) < 1e-10);
            const ModelSpec m = preset_raz(N, seed, x);
            const double l = loss(m, {});
            CHECK(std::abs(l - (target == 1 ? 1.0 : -1.0)) < 1e-9);
        }
    }
}

TEST_CASE("subspace preset with a noisy margin") {
    RngStream rng(22);
    const double a = 0.3;
    const auto x = raz_sample_input(16, 77, 1, rng, a);
    const ModelSpec m = preset_raz(16, 77, x);
    CHECK(std::abs(loss(m, {}) - (1.0 - 2.0 * a * a)) < 1e-9);
}

TEST_CASE("pointer chasing reads the final pointer's low bit") {
    RngStream rng(31);
    const int N = 8;
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<std::uint64_t> fa(N), fb(N);
        for (int i = 0; i < N; ++i) fa[i] = fb[i] = i;
        for (std::size_t i = N; i > 1; --i) std::swap(fa[i - 1], fa[rng.next_below(i)]);
        for (std::size_t i = N; i > 1; --i) std::swap(fb[i - 1], fb[rng.next_below(i)]);
        const int L0 = 1 + static_cast<int>(rng.next_below(5));
        const std::uint64_t x = rng.next_below(N);
        const ModelSpec m = preset_pointer_chasing(N, fa, fb, L0, x);
        const std::uint64_t endpt = pointer_chase(fa, fb, L0, x);
        const double want = (endpt & 1ull) ? -1.0 : 1.0;
        CHECK(std::abs(loss(m, {}) - want) < 1e-12);
        CHECK(m.num_layers() == L0 / 2 + 1);
    }
}

TEST_CASE("ladder label relabeling is the documented map") {
    CHECK(ladder_label_index(4, 1) == 0);
    CHECK(ladder_label_index(4, 2) == 2);
    CHECK(ladder_label_index(4, 3) == 1);
    CHECK(ladder_label_index(4, 4) == 3);
    CHECK(ladder_label_index(8, 1) == 0);
    CHECK(ladder_label_index(8, 2) == 4);
    CHECK(ladder_label_index(8, 3) == 1);
    CHECK(ladder_label_index(8, 4) == 2);
    CHECK(ladder_label_index(8, 5) == 3);
    CHECK(ladder_label_index(8, 6) == 5);
    CHECK(ladder_label_index(8, 7) == 6);
    CHECK(ladder_label_index(8, 8) == 7);
}

TEST_CASE("transposition ladder traces a single cosine") {
    const int Np = 4, L = 2;
    std::vector<std::vector<double>> lambda = {{0.0, 1.5, -0.7, 2.2}, {0.0, 0.0, 3.1, -1.4}};
    const std::vector<int> path = {2, 2};
    // walking 2 -> 2 picks lambda[0][1] + lambda[1][1] = 1.5 + 0
    const ModelSpec m = preset_fourier_ladder(Np, L, lambda, path);
    const double freq = ladder_frequency(lambda, path);
    CHECK(freq == doctest::Approx(1.5));
    for (int i = 0; i < 33; ++i) {
        const double x = i / 33.0;
        const double data[] = {x};
        CHECK(std::abs(loss(m, {}, data) - std::cos(2 * pi * freq * x)) < 1e-12);
    }
}

TEST_CASE("transposition ladder with a longer path") {
    const int Np = 8, L = 3;
    std::vector<std::vector<double>> lambda(3, std::vector<double>(8, 0.0));
    lambda[0][4] = 2.0;   // label 5 in layer 1
    lambda[1][2] = -1.3;  // label 3 in layer 2
    lambda[2][1] = 0.0;   // label 2 must stay zero in the last layer
    lambda[2][5] = 9.9;   // unused by the path
    const std::vector<int> path = {5, 3, 2};
    const ModelSpec m = preset_fourier_ladder(Np, L, lambda, path);
    const double freq = ladder_frequency(lambda, path);
    CHECK(freq == doctest::Approx(0.7));
    for (int i = 0; i < 41; ++i) {
        const double x = -0.5 + i / 41.0;
        const double data[] = {x};
        CHECK(std::abs(loss(m, {}, data) - std::cos(2 * pi * freq * x)) < 1e-12);
    }
}

TEST_CASE("degenerate single-layer ladder is constant 1") {
    std::vector<std::vector<double>> lambda = {{0.0, 0.0, 2.5, -1.0}};
    const ModelSpec m = preset_fourier_ladder(4, 1, lambda, {2});
    for (double x : {0.0, 0.25, 0.7}) {
        const double data[] = {x};
        CHECK(std::abs(loss(m, {}, data) - 1.0) < 1e-12);
    }
}

TEST_CASE("ladder keeps qubit 0 in a pure equal superposition") {
    std::vector<std::vector<double>> lambda = {{0.0, 0.9, -0.4, 1.7}, {0.0, 0.0, 0.8, 0.3}};
    const ModelSpec m = preset_fourier_ladder(4, 2, lambda, {4, 2});
    for (double x : {0.0, 0.31, 0.77}) {
        const double data[] = {x};
        const StateVector phi = forward(m, {}, data);
        // 2x2 reduced density matrix of qubit 0
        cplx rho[2][2] = {{0, 0}, {0, 0}};
        const std::uint64_t half = phi.dim() / 2;
        for (std::uint64_t r = 0; r < 2; ++r)
            for (std::uint64_t c = 0; c < 2; ++c)
                for (std::uint64_t k = 0; k < half; ++k)
                    rho[r][c] += phi.amps[r * half + k] * std::conj(phi.amps[c * half + k]);
        const double purity =
            std::norm(rho[0][0]) + std::norm(rho[0][1]) + std::norm(rho[1][0]) + std::norm(rho[1][1]);
        CHECK(std::abs(purity - 1.0) < 1e-10);
        CHECK(std::abs(rho[0][0].real() - 0.5) < 1e-10);
        CHECK(std::abs(rho[1][1].real() - 0.5) < 1e-10);
        if (x == 0.0) CHECK(std::abs(rho[0][1] - cplx{0.5, 0}) < 1e-10);
    }
}

TEST_CASE("preset unitaries are unitary") {
    RngStream rng(41);
    std::vector<ModelSpec> models;
    models.push_back(preset_smooth(3, 2, 2, rng).model);
    models.push_back(preset_raz(8, 5, raz_sample_input(8, 5, 1, rng)));
    {
        std::vector<std::uint64_t> f = {1, 2, 3, 0, 5, 6, 7, 4};
        models.push_back(preset_pointer_chasing(8, f, f, 3, 2));
    }
    std::vector<std::vector<double>> lambda = {{0.0, 0.5, 1.0, 1.5}};
    models.push_back(preset_spectrum_ladder(4, 1, lambda));
    models.push_back(preset_universal_approx({0.3, 0.4}, {0.1, 0.2}).model);
    std::vector<double> params(16, 0.37);
    const double data[] = {0.21, 0.43};
    for (const auto& m : models) {
        for (const auto& layer : m.layers) {
            for (const auto* ops : {&layer.b_ops, &layer.a_ops}) {
                for (const auto& u : *ops) {
                    const auto g = realize_dense(u, m.n_qubits, ApplyCtx{params, data});
                    const std::uint64_t d = std::uint64_t{1} << m.n_qubits;
                    double worst = 0.0;
                    for (std::uint64_t r = 0; r < d; ++r)
                        for (std::uint64_t c = 0; c < d; ++c) {
                            cplx acc = 0.0;
                            for (std::uint64_t k = 0; k < d; ++k)
                                acc += std::conj(g[k * d + r]) * g[k * d + c];
                            worst = std::max(worst, std::abs(acc - (r == c ? cplx{1, 0} : cplx{0, 0})));
                        }
                    CHECK(worst < 1e-10);
                }
            }
        }
    }
}

TEST_CASE("transposition ladder validates its preconditions") {
    std::vector<std::vector<double>> lambda = {{0.0, 0.0, 1.0, 1.0}};
    CHECK_THROWS_AS(preset_fourier_ladder(4, 1, lambda, {3}), ValidationError);  // path end
    std::vector<std::vector<double>> bad = {{0.5, 0.0, 1.0, 1.0}};
    CHECK_THROWS_AS(preset_fourier_ladder(4, 1, bad, {2}), ValidationError);  // anchor nonzero
    std::vector<std::vector<double>> bad2 = {{0.0, 0.25, 1.0, 1.0}};
    CHECK_THROWS_AS(preset_fourier_ladder(4, 1, bad2, {2}), ValidationError);  // last-layer label 2
}

TEST_CASE("two-variable ladder separates its drivers") {
    std::vector<std::vector<double>> lambda = {{0.4, 1.1}, {-0.6, 0.9}};
    const ModelSpec m = preset_two_variable_ladder(2, 2, lambda);
    const double a[] = {0.3, 0.8};
    const double b[] = {0.3, 0.1};
    const double c[] = {0.9, 0.8};
    const double la = loss(m, {}, a), lb = loss(m, {}, b), lc = loss(m, {}, c);
    CHECK(la != lb);  // second variable matters
    CHECK(la != lc);  // first variable matters
}

TEST_CASE("universal synthesizer reproduces a short Fourier series") {
    const std::vector<double> fp = {0.1, -0.3, 0.25, 0.0};
    const std::vector<double> fm = {0.0, 0.2, 0.0, -0.15};
    const auto preset = preset_universal_approx(fp, fm);
    CHECK(preset.scale == doctest::Approx(1.0));
    for (int i = 0; i < 64; ++i) {
        const double x = -0.5 + i / 64.0;
        double want = 0.0;
        for (std::size_t mm = 0; mm < fp.size(); ++mm)
            want += fp[mm] * std::cos(2 * pi * mm * x) + fm[mm] * std::sin(2 * pi * mm * x);
        const double data[] = {x};
        CHECK(std::abs(preset.scale * loss(preset.model, {}, data) - want) < 1e-12);
    }
}

TEST_CASE("universal synthesizer handles unnormalized coefficients") {
    const std::vector<double> fp = {0.4, 0.6};
    const std::vector<double> fm = {0.0, 0.2};
    const auto preset = preset_universal_approx(fp, fm);
    CHECK(preset.scale == doctest::Approx(1.2));
    for (int i = 0; i < 31; ++i) {
        const double x = i / 31.0;
        const double want = 0.4 + 0.6 * std::cos(2 * pi * x) + 0.2 * std::sin(2 * pi * x);
        const double data[] = {x};
        CHECK(std::abs(preset.scale * loss(preset.model, {}, data) - want) < 1e-12);
    }
}

TEST_CASE("hierarchical phase layers equal the flat diagonal") {
    const std::vector<double> fp = {0.05, 0.3, -0.2, 0.1};
    const std::vector<double> fm = {0.0, -0.1, 0.15, 0.1};
    const auto flat = preset_universal_approx(fp, fm);
    const auto hier = preset_universal_hierarchical(fp, fm);
    CHECK(flat.scale == doctest::Approx(hier.scale));

    const int n = flat.model.n_qubits;
    const double x = 0.2137;
    const double data[] = {x};
    const ApplyCtx ctx{{}, data};

    // product of hierarchical phase ops vs the single flat diagonal
    const std::uint64_t d = std::uint64_t{1} << n;
    oracle::Mat prod = oracle::Mat::eye(d);
    REQUIRE(hier.model.layers[0].a_ops.size() == 1);
    auto mul_in = [&](const UnitarySpec& u) {
        oracle::Mat g{d, realize_dense(u, n, ctx)};
        prod = oracle::mul(g, prod);
    };
    mul_in(hier.model.layers[0].a_ops[0]);
    for (std::size_t l = 1; l < hier.model.layers.size(); ++l) {
        REQUIRE(hier.model.layers[l].b_ops.empty());
        mul_in(hier.model.layers[l].a_ops[0]);
    }
    const oracle::Mat flat_a{d, realize_dense(flat.model.layers[0].a_ops[0], n, ctx)};
    CHECK(oracle::max_abs_diff(prod.a, flat_a.a) < 1e-12);

    // and the losses agree pointwise
    for (int i = 0; i < 17; ++i) {
        const double xv = i / 17.0;
        const double dv[] = {xv};
        CHECK(std::abs(loss(flat.model, {}, dv) - loss(hier.model, {}, dv)) < 1e-12);
    }
}

TEST_CASE("universal synthesizer rejects bad shapes") {
    CHECK_THROWS_AS(preset_universal_approx({0.1, 0.2, 0.3}, {0.0, 0.0, 0.0}), ValidationError);
    CHECK_THROWS_AS(preset_universal_approx({0.1, 0.2}, {0.0}), StructuralError);
}

TEST_CASE("degenerate universal synthesizer gives zero loss") {
    const auto preset = preset_universal_approx({0.0}, {0.0});
    CHECK(preset.scale == 0.0);
    const double data[] = {0.3};
    CHECK(std::abs(loss(preset.model, {}, data)) < 1e-15);
}
