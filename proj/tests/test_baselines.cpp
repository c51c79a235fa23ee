#include <bit>
#include <cmath>
#include <numeric>

#include "doctest.h"
#include "oracles.hpp"
#include "qdml/baselines.hpp"
#include "qdml/errors.hpp"

using namespace qdml;

namespace {

double dot_oracle(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double norm2(std::span<const double> a) { return dot_oracle(a, a); }

}  // namespace

TEST_CASE("margin instances: construction identities") {
    RngStream rng(0xBA5E);

    SUBCASE("degenerate margin gives y = x") {
        const auto inst = gen_margin_instance(16, 1.0, 1, rng);
        for (std::size_t j = 0; j < inst.x.size(); ++j) CHECK(inst.y[j] == inst.x[j]);
        CHECK(std::abs(dot_oracle(inst.x, inst.y) - 1.0) < 1e-12);
    }
    SUBCASE("inner product equals label times margin") {
        for (const int label : {1, -1}) {
            const auto inst = gen_margin_instance(64, 0.2, label, rng);
            CHECK(std::abs(dot_oracle(inst.x, inst.y) - label * 0.2) < 1e-12);
            CHECK(std::abs(norm2(inst.x) - 1.0) < 1e-12);
            CHECK(std::abs(norm2(inst.y) - 1.0) < 1e-12);
            CHECK(inst.gamma == 0.2);
            CHECK(inst.label == label);
        }
    }
    SUBCASE("residual direction is orthogonal to x") {
        const double gamma = 0.37;
        const auto inst = gen_margin_instance(32, gamma, 1, rng);
        // Recover w from y = gamma x + sqrt(1-gamma^2) w.
        const double mix = std::sqrt(1.0 - gamma * gamma);
        std::vector<double> w(inst.x.size());
        for (std::size_t j = 0; j < w.size(); ++j) w[j] = (inst.y[j] - gamma * inst.x[j]) / mix;
        CHECK(std::abs(dot_oracle(inst.x, w)) < 1e-12);
        CHECK(std::abs(norm2(w) - 1.0) < 1e-12);
    }
    SUBCASE("rejects bad arguments") {
        CHECK_THROWS_AS(gen_margin_instance(16, 0.0, 1, rng), ValidationError);
        CHECK_THROWS_AS(gen_margin_instance(16, -0.1, 1, rng), ValidationError);
        CHECK_THROWS_AS(gen_margin_instance(16, 1.1, 1, rng), ValidationError);
        CHECK_THROWS_AS(gen_margin_instance(16, 0.5, 0, rng), ValidationError);
        CHECK_THROWS_AS(gen_margin_instance(1, 0.5, 1, rng), ValidationError);
    }
}

TEST_CASE("binary sketch: zero input, Hadamard isometry, dense/stream agreement") {
    SUBCASE("zero vector maps to zero") {
        const std::vector<double> z(24, 0.0);
        const auto f = jl_project(z, 7, RngStream(1));
        for (double v : f) CHECK(v == 0.0);
    }
    SUBCASE("orthogonal +-1 rows preserve the norm exactly") {
        // R = (H + 1)/2 for the 4x4 +-1 Hadamard matrix makes (2R - 1)/sqrt(k)
        // an exact isometry.
        BinarySketchMatrix R;
        R.k = 4;
        R.n = 4;
        R.words.resize(4);
        for (int i = 0; i < 4; ++i) {
            std::uint64_t row = 0;
            for (int j = 0; j < 4; ++j)
                if ((std::popcount(static_cast<unsigned>(i & j)) & 1) == 0)
                    row |= std::uint64_t{1} << j;
            R.words[static_cast<std::size_t>(i)] = row;
        }
        RngStream rng(0x15A);
        std::vector<double> z(4);
        for (auto& v : z) v = rng.uniform(-1.0, 1.0);
        const auto f = jl_project(z, R);
        CHECK(std::abs(norm2(f) - norm2(z)) < 1e-12);
    }
    SUBCASE("streaming projector reproduces the materialized matrix bitwise") {
        RngStream rng(0x77);
        std::vector<double> x(70), y(70);
        for (auto& v : x) v = rng.uniform(-1.0, 1.0);
        for (auto& v : y) v = rng.uniform(-1.0, 1.0);
        const RngStream shared(0xD15C);
        const auto R = sketch_matrix(9, 70, shared);
        const auto fx_dense = jl_project(x, R);
        const auto fx_stream = jl_project(x, 9, shared);
        const auto [fx_pair, fy_pair] = jl_project_pair(x, y, 9, shared);
        for (int i = 0; i < 9; ++i) {
            CHECK(fx_dense[static_cast<std::size_t>(i)] == fx_stream[static_cast<std::size_t>(i)]);
            CHECK(fx_dense[static_cast<std::size_t>(i)] == fx_pair[static_cast<std::size_t>(i)]);
        }
        const auto fy_dense = jl_project(y, R);
        for (int i = 0; i < 9; ++i)
            CHECK(fy_dense[static_cast<std::size_t>(i)] == fy_pair[static_cast<std::size_t>(i)]);
        // Matrix entries really are bits reproducible from the shared stream.
        RngStream row0 = shared.split(0);
        const std::uint64_t w0 = row0.next_u64();
        for (int j = 0; j < 64; ++j) CHECK(R.entry(0, j) == static_cast<int>((w0 >> j) & 1));
    }
    SUBCASE("shape and argument validation") {
        const std::vector<double> z(8, 0.5);
        CHECK_THROWS_AS(jl_project(z, 0, RngStream(1)), ValidationError);
        CHECK_THROWS_AS(jl_project(std::vector<double>{}, 3, RngStream(1)), ValidationError);
        const auto R = sketch_matrix(3, 9, RngStream(2));
        CHECK_THROWS_AS(jl_project(z, R), StructuralError);
        const std::vector<double> y(7, 0.0);
        CHECK_THROWS_AS(jl_project_pair(z, y, 3, RngStream(1)), StructuralError);
        CHECK_THROWS_AS(sketch_matrix(0, 4, RngStream(1)), ValidationError);
    }
}

TEST_CASE("binary sketch: Monte-Carlo unbiasedness of the sketched inner product") {
    RngStream rng(0x1B1A5);
    const auto inst = gen_margin_instance(64, 0.3, 1, rng);
    const int k = 32;
    const int trials = 10000;
    const RngStream root(0xF00D);
    double sum = 0.0, sumsq = 0.0;
    for (int t = 0; t < trials; ++t) {
        const auto [fx, fy] = jl_project_pair(inst.x, inst.y, k, root.split(static_cast<std::uint64_t>(t)));
        const double d = dot_oracle(fx, fy);
        sum += d;
        sumsq += d * d;
    }
    const double mean = sum / trials;
    const double var = (sumsq - sum * sum / trials) / (trials - 1);
    const double sigma_mean = std::sqrt(var / trials);
    CHECK(std::abs(mean - 0.3) < 4.0 * sigma_mean);
}

TEST_CASE("binary sketch: three-point distortion events at the margin budget") {
    RngStream rng(0xD157);
    const double gamma = 0.8;
    const double eps = gamma / 8.0;
    const int k = jl_sketch_dim(gamma);
    REQUIRE(k == 6400);
    const auto inst = gen_margin_instance(64, gamma, 1, rng);
    std::vector<double> diff(inst.x.size());
    for (std::size_t j = 0; j < diff.size(); ++j) diff[j] = inst.x[j] - inst.y[j];
    const double dn = norm2(diff);
    const RngStream root(0x3D15);
    int good = 0;
    const int trials = 1000;
    for (int t = 0; t < trials; ++t) {
        const RngStream shared = root.split(static_cast<std::uint64_t>(t));
        const auto [fx, fy] = jl_project_pair(inst.x, inst.y, k, shared);
        std::vector<double> fd(fx.size());
        for (std::size_t i = 0; i < fd.size(); ++i) fd[i] = fx[i] - fy[i];
        const bool ok = std::abs(norm2(fx) - 1.0) <= eps && std::abs(norm2(fy) - 1.0) <= eps &&
                        std::abs(norm2(fd) - dn) <= eps * dn;
        good += ok ? 1 : 0;
    }
    CHECK(good >= 2 * trials / 3);
}

TEST_CASE("distributed classifier: sketch dimension and N-free communication") {
    CHECK(jl_sketch_dim(0.2) == 102400);
    CHECK(jl_sketch_dim(0.8) == 6400);
    CHECK(jl_sketch_dim(0.5, 4.0) == 1024);
    CHECK_THROWS_AS(jl_sketch_dim(0.0), ValidationError);
    CHECK_THROWS_AS(jl_sketch_dim(0.5, 0.0), ValidationError);
    CHECK_THROWS_AS(jl_sketch_dim(1e-4), CapacityError);

    RngStream rng(0xABCD);
    const double gamma = 0.5;
    const double C = 4.0;
    std::uint64_t bits_at_512 = 0;
    for (const int N : {512, 2048, 8192}) {
        const auto inst = gen_margin_instance(N, gamma, 1, rng);
        const auto res = classify_distributed(inst, gamma, C, 16, RngStream(0x9E));
        CHECK(res.k == 1024);
        CHECK(res.ledger.classical_bits() == 1024ull * 16 + 1);
        CHECK(res.ledger.classical_messages() == 2);
        CHECK(res.ledger.qubits_sent() == 0);
        if (N == 512) bits_at_512 = res.ledger.classical_bits();
        CHECK(res.ledger.classical_bits() == bits_at_512);
    }
}

TEST_CASE("distributed classifier: success rate and decision threshold at the promised margin") {
    const double gamma = 0.5;
    const int trials = 50;
    RngStream gen(0x5EED);
    const RngStream sketch_root(0xCAFE);
    int correct = 0;
    int strong = 0;
    for (int t = 0; t < trials; ++t) {
        const int label = (t % 2 == 0) ? 1 : -1;
        const auto inst = gen_margin_instance(256, gamma, label, gen);
        const auto res =
            classify_distributed(inst, gamma, 64.0, 16, sketch_root.split(static_cast<std::uint64_t>(t)));
        if (res.predicted == label) {
            ++correct;
            if (std::abs(res.statistic) >= gamma / 2.0) ++strong;
        }
    }
    CHECK(correct >= 2 * trials / 3);
    // Whenever the sketch succeeds at this dimension, the statistic clears
    // the gamma/2 decision threshold.
    CHECK(strong == correct);

    // Success statistics are insensitive to a fixed orthogonal change of
    // basis (coordinate reversal) applied to both vectors.
    RngStream gen2(0x5EED);
    int correct_rot = 0;
    for (int t = 0; t < trials; ++t) {
        const int label = (t % 2 == 0) ? 1 : -1;
        auto inst = gen_margin_instance(256, gamma, label, gen2);
        std::reverse(inst.x.begin(), inst.x.end());
        std::reverse(inst.y.begin(), inst.y.end());
        const auto res =
            classify_distributed(inst, gamma, 64.0, 16, sketch_root.split(static_cast<std::uint64_t>(t)));
        correct_rot += res.predicted == label ? 1 : 0;
    }
    CHECK(correct_rot >= 2 * trials / 3);
}

TEST_CASE("distributed classifier: zero-margin fallback ships the raw vector") {
    MarginInstance inst;
    inst.x = {1.0, 0.0, 0.0, 0.0};
    inst.y = {-1.0, 0.0, 0.0, 0.0};
    inst.gamma = 0.0;
    inst.label = -1;
    const auto res = classify_distributed(inst, 0.0, 64.0, 16, RngStream(3));
    CHECK(res.predicted == -1);
    CHECK(res.k == 0);
    CHECK(res.ledger.classical_bits() == 4ull * 16 + 1);
    CHECK(res.ledger.classical_messages() == 2);
}

TEST_CASE("distributed classifier: precision guard and argument validation") {
    RngStream rng(0x41);
    const auto inst = gen_margin_instance(128, 0.1, 1, rng);
    CHECK_THROWS_AS(classify_distributed(inst, 0.1, 1.0, 1, RngStream(7)), ValidationError);
    CHECK_THROWS_AS(classify_distributed(inst, -0.1, 64.0, 16, RngStream(7)), ValidationError);
    CHECK_THROWS_AS(classify_distributed(inst, 0.1, 64.0, 0, RngStream(7)), ValidationError);
    CHECK_THROWS_AS(classify_distributed(inst, 0.1, 64.0, 33, RngStream(7)), ValidationError);
    MarginInstance bad;
    bad.x = {1.0, 0.0};
    bad.y = {1.0};
    CHECK_THROWS_AS(classify_distributed(bad, 0.5, 64.0, 16, RngStream(7)), StructuralError);
}

TEST_CASE("distributed classifier: identical shared seed reproduces the run exactly") {
    RngStream rng(0x77AB);
    const auto inst = gen_margin_instance(96, 0.4, -1, rng);
    const auto a = classify_distributed(inst, 0.4, 8.0, 16, RngStream(0x1234));
    const auto b = classify_distributed(inst, 0.4, 8.0, 16, RngStream(0x1234));
    CHECK(a.predicted == b.predicted);
    CHECK(a.statistic == b.statistic);
    CHECK(a.ledger.classical_bits() == b.ledger.classical_bits());
    const auto c = classify_distributed(inst, 0.4, 8.0, 16, RngStream(0x9999));
    CHECK(c.statistic != a.statistic);
}

TEST_CASE("gap-Hamming lift: inner product identity and promise checking") {
    SUBCASE("equal and complementary inputs") {
        const std::vector<int> ones(8, 1);
        std::vector<int> zeros(8, 0);
        const auto same = gap_hamming_to_margin(ones, ones, 8.0);
        CHECK(std::abs(dot_oracle(same.x, same.y) - 1.0) < 1e-12);
        CHECK(same.label == 1);
        CHECK(same.gamma == 1.0);
        const auto opp = gap_hamming_to_margin(ones, zeros, 8.0);
        CHECK(std::abs(dot_oracle(opp.x, opp.y) + 1.0) < 1e-12);
        CHECK(opp.label == -1);
    }
    SUBCASE("distance two out of eight gives inner product one half") {
        const std::vector<int> a{1, 1, 1, 1, 0, 0, 0, 0};
        const std::vector<int> b{1, 1, 1, 1, 0, 0, 1, 1};
        const auto inst = gap_hamming_to_margin(a, b, 4.0);
        CHECK(std::abs(dot_oracle(inst.x, inst.y) - 0.5) < 1e-12);
        CHECK(inst.gamma == 0.5);
        CHECK(inst.label == 1);
        CHECK(std::abs(norm2(inst.x) - 1.0) < 1e-12);
        CHECK(std::abs(norm2(inst.y) - 1.0) < 1e-12);
    }
    SUBCASE("identity (N - 2 dH)/N holds on random bit pairs") {
        RngStream rng(0x6A6);
        for (int rep = 0; rep < 20; ++rep) {
            const int N = 16;
            std::vector<int> a(static_cast<std::size_t>(N)), b(static_cast<std::size_t>(N));
            int dh = 0;
            for (int j = 0; j < N; ++j) {
                a[static_cast<std::size_t>(j)] = rng.bernoulli(0.5) ? 1 : 0;
                b[static_cast<std::size_t>(j)] = rng.bernoulli(0.5) ? 1 : 0;
                dh += a[static_cast<std::size_t>(j)] != b[static_cast<std::size_t>(j)] ? 1 : 0;
            }
            const auto inst = gap_hamming_to_margin(a, b, 0.0);
            const double expect = (N - 2.0 * dh) / N;
            CHECK(std::abs(dot_oracle(inst.x, inst.y) - expect) < 1e-12);
        }
    }
    SUBCASE("violated promise and malformed inputs throw") {
        const std::vector<int> a{1, 1, 0, 0, 1, 1, 0, 0};
        std::vector<int> b = a;
        b[0] = 0;
        b[1] = 0;
        b[2] = 1;
        b[3] = 1;  // dH = 4 of 8, inner product 0
        CHECK_THROWS_AS(gap_hamming_to_margin(a, b, 1.0), ValidationError);
        CHECK_THROWS_AS(gap_hamming_to_margin(a, std::vector<int>{1, 0}, 1.0), StructuralError);
        CHECK_THROWS_AS(gap_hamming_to_margin(std::vector<int>{}, std::vector<int>{}, 0.0),
                        ValidationError);
        CHECK_THROWS_AS(gap_hamming_to_margin(a, std::vector<int>{1, 1, 0, 0, 1, 1, 0, 2}, 0.0),
                        ValidationError);
        CHECK_THROWS_AS(gap_hamming_to_margin(a, a, 9.0), ValidationError);
        CHECK_THROWS_AS(gap_hamming_to_margin(a, a, -1.0), ValidationError);
    }
}
