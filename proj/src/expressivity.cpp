#include "qdml/expressivity.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <algorithm>
#include <bit>
#include <cmath>
#include <numbers>

#include "qdml/errors.hpp"
#include "qdml/parallel.hpp"

namespace qdml {

namespace {

int popcount_parity(std::uint64_t v) { return std::popcount(v) & 1; }

}  // namespace

FrequencyTable enumerate_spectrum(int Nprime, int L,
                                  const std::vector<std::vector<double>>& lambda, double tol) {
    if (Nprime < 2 || (Nprime & (Nprime - 1)) != 0)
        throw ValidationError("ladder basis size must be a power of two >= 2");
    if (L < 1) throw ValidationError("ladder needs at least one layer");
    if (lambda.size() != static_cast<std::size_t>(L))
        throw StructuralError("lambda must have L rows");
    for (const auto& row : lambda)
        if (row.size() != static_cast<std::size_t>(Nprime))
            throw StructuralError("each lambda row must have Nprime entries");
    if (!(tol >= 0.0)) throw ValidationError("coefficient tolerance must be nonnegative");
    const double budget = std::pow(static_cast<double>(Nprime) * Nprime / 2.0, L);
    if (budget > 1e7) throw CapacityError("path enumeration budget exceeded");

    const std::uint64_t N = static_cast<std::uint64_t>(Nprime);
    const std::uint64_t flip = N / 2;  // X on qubit 0 toggles the top bit
    const double unit = std::pow(1.0 / static_cast<double>(Nprime), L);

    // One pass per path p: frequency, Hadamard sign, and final index. The
    // mixing layer contributes (-1)^{popcount(prev & next)}; the first hop
    // starts from index 0 and is sign-free.
    std::uint64_t num_paths = 1;
    for (int l = 0; l < L; ++l) num_paths *= N;
    std::vector<double> omega(num_paths, 0.0);
    std::vector<int> sign(num_paths, 0);
    std::vector<std::uint64_t> last(num_paths, 0);
    for (std::uint64_t code = 0; code < num_paths; ++code) {
        std::uint64_t c = code;
        std::uint64_t prev = 0;
        double w = 0.0;
        int s = 0;
        for (int l = 0; l < L; ++l) {
            const std::uint64_t j = c % N;
            c /= N;
            s ^= popcount_parity(prev & j);
            w += lambda[static_cast<std::size_t>(l)][static_cast<std::size_t>(j)];
            prev = j;
        }
        omega[code] = w;
        sign[code] = s;
        last[code] = prev;
    }

    // Pair every path with every partner ending at its flipped index; fold
    // the signed frequency onto |omega| (the mirror pair supplies the
    // conjugate term, so the pairwise sum is a cosine).
    std::vector<FrequencyEntry> raw;
    raw.reserve(num_paths * (num_paths / N));
    for (std::uint64_t p = 0; p < num_paths; ++p) {
        for (std::uint64_t q = 0; q < num_paths; ++q) {
            if (last[q] != (last[p] ^ flip)) continue;
            const double w = std::abs(omega[p] - omega[q]);
            const double c = (sign[p] ^ sign[q]) ? -unit : unit;
            raw.push_back(FrequencyEntry{w, c});
        }
    }

    std::sort(raw.begin(), raw.end(),
              [](const FrequencyEntry& a, const FrequencyEntry& b) { return a.frequency < b.frequency; });

    FrequencyTable table;
    table.tolerance = tol;
    for (const auto& e : raw) {
        if (!table.entries.empty() && e.frequency - table.entries.back().frequency < 1e-9) {
            table.entries.back().coefficient += e.coefficient;
        } else {
            table.entries.push_back(e);
        }
    }
    std::erase_if(table.entries,
                  [tol](const FrequencyEntry& e) { return std::abs(e.coefficient) <= tol; });
    return table;
}

double spectrum_vs_grid(const ModelSpec& m, const FrequencyTable& table,
                        std::span<const double> xs) {
    std::vector<double> dev(xs.size(), 0.0);
    parallel_for(xs.size(), [&](std::size_t i) {
        const double x = xs[i];
        double recon = 0.0;
        for (const auto& e : table.entries)
            recon += e.coefficient * std::cos(2.0 * std::numbers::pi * e.frequency * x);
        dev[i] = std::abs(recon - loss(m, {}, std::span<const double>{&x, 1}));
    });
    double worst = 0.0;
    for (double d : dev) worst = std::max(worst, d);
    return worst;
}

SeparationRankReport matrix_rank_report(std::span<const double> values, int rows, int cols,
                                        double threshold) {
    if (rows < 1 || cols < 1) throw ValidationError("rank report needs a nonempty grid");
    if (values.size() != static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols))
        throw StructuralError("value buffer does not match the grid shape");
    if (!(threshold > 0.0)) throw ValidationError("rank threshold must be positive");

    Eigen::MatrixXd F(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j)
            F(i, j) = values[static_cast<std::size_t>(i) * static_cast<std::size_t>(cols) +
                             static_cast<std::size_t>(j)];
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(F);
    const auto& sv = svd.singularValues();

    SeparationRankReport rep;
    rep.rows = rows;
    rep.cols = cols;
    rep.threshold = threshold;
    rep.singular_values.assign(sv.data(), sv.data() + sv.size());
    const double top = rep.singular_values.empty() ? 0.0 : rep.singular_values.front();
    if (top > 0.0)
        for (double s : rep.singular_values)
            if (s > threshold * top) ++rep.rank;
    return rep;
}

SeparationRankReport separation_rank(const ModelSpec& m, std::span<const double> grid_y,
                                     std::span<const double> grid_z, double threshold) {
    const int rows = static_cast<int>(grid_y.size());
    const int cols = static_cast<int>(grid_z.size());
    if (rows < 1 || cols < 1) throw ValidationError("separation rank needs a nonempty grid");
    std::vector<double> values(static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols));
    parallel_for(static_cast<std::size_t>(rows), [&](std::size_t i) {
        for (int j = 0; j < cols; ++j) {
            const double data[2] = {grid_y[i], grid_z[static_cast<std::size_t>(j)]};
            values[i * static_cast<std::size_t>(cols) + static_cast<std::size_t>(j)] =
                loss(m, {}, data);
        }
    });
    return matrix_rank_report(values, rows, cols, threshold);
}

std::vector<UniversalErrorPoint> universal_error_curve(
    const std::function<double(double)>& f,
    const std::function<std::pair<double, double>(int)>& fhat, std::span<const int> Ms,
    int grid_points) {
    if (grid_points < 1) throw ValidationError("error curve needs at least one grid point");
    std::vector<UniversalErrorPoint> curve;
    curve.reserve(Ms.size());
    for (const int M : Ms) {
        if (M < 1) throw ValidationError("harmonic count must be positive");
        std::vector<double> fp(static_cast<std::size_t>(M));
        std::vector<double> fm(static_cast<std::size_t>(M));
        for (int m = 0; m < M; ++m) {
            const auto [cp, cm] = fhat(m);
            fp[static_cast<std::size_t>(m)] = cp;
            fm[static_cast<std::size_t>(m)] = cm;
        }
        const UniversalPreset preset = preset_universal_approx(fp, fm);
        if (preset.scale <= 0.0)
            throw ValidationError("truncated series has no coefficient mass");

        std::vector<double> err(static_cast<std::size_t>(grid_points), 0.0);
        parallel_for(static_cast<std::size_t>(grid_points), [&](std::size_t i) {
            const double x = static_cast<double>(i) / static_cast<double>(grid_points);
            const double series =
                preset.scale * loss(preset.model, {}, std::span<const double>{&x, 1});
            err[i] = std::abs(series - f(x));
        });
        double sup = 0.0;
        for (double e : err) sup = std::max(sup, e);
        curve.push_back(UniversalErrorPoint{M, sup});
    }
    return curve;
}

double triangle_wave(double x) {
    double frac = x - std::floor(x);
    return frac <= 0.5 ? 1.0 - 4.0 * frac : 4.0 * frac - 3.0;
}

std::pair<double, double> triangle_fourier(int m) {
    if (m < 1 || m % 2 == 0) return {0.0, 0.0};
    const double pm = std::numbers::pi * static_cast<double>(m);
    return {8.0 / (pm * pm), 0.0};
}

}  // namespace qdml
