// Serial vs OpenMP timing for the hot state-vector kernels. The two paths
// are bit-identical by construction (see parallel.hpp), so this only
// reports throughput; correctness lives in the test suite.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include "qdml/circuits.hpp"
#include "qdml/parallel.hpp"
#include "qdml/rng.hpp"
#include "qdml/statevec.hpp"

using namespace qdml;

namespace {

double time_once(const std::function<void()>& body) {
    const auto t0 = std::chrono::steady_clock::now();
    body();
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Repeat until ~0.3 s of wall time, return seconds per call.
double time_per_call(const std::function<void()>& body) {
    body();  // warm up, touch the pages
    int reps = 1;
    double total = 0.0;
    for (;;) {
        total = time_once([&] {
            for (int r = 0; r < reps; ++r) body();
        });
        if (total >= 0.3 || reps >= 1 << 20) break;
        reps *= 2;
    }
    return total / reps;
}

struct Row {
    std::string name;
    double serial_ms = 0.0;
    double parallel_ms = 0.0;
};

StateVector random_state(int n, RngStream rng) {
    const std::uint64_t dim = std::uint64_t{1} << n;
    std::vector<cplx> amps(dim);
    double norm2 = 0.0;
    for (auto& a : amps) {
        a = {rng.gaussian(), rng.gaussian()};
        norm2 += std::norm(a);
    }
    const double inv = 1.0 / std::sqrt(norm2);
    for (auto& a : amps) a *= inv;
    return StateVector::from_amplitudes(n, std::move(amps));
}

Row bench_kernel(const std::string& name, const std::function<void()>& body) {
    Row row;
    row.name = name;
    set_exec_mode(ExecMode::serial);
    row.serial_ms = time_per_call(body) * 1e3;
    set_exec_mode(ExecMode::parallel);
    row.parallel_ms = time_per_call(body) * 1e3;
    set_exec_mode(ExecMode::automatic);
    return row;
}

}  // namespace

int main() {
    const int n = 20;
    std::printf("state-vector kernels, n=%d (%llu amplitudes), %d thread(s)\n", n,
                static_cast<unsigned long long>(1ull << n), max_threads());

    RngStream root(0xBE7C);
    StateVector base = random_state(n, root.split(0));

    const UnitarySpec rot = make_fixed_rotation(PauliString::single(n, n / 2, Pauli::Y), 0.731);

    std::vector<int> all_qubits(n);
    for (int q = 0; q < n; ++q) all_qubits[static_cast<std::size_t>(q)] = q;
    std::vector<double> coeffs(std::size_t{1} << n);
    std::vector<int> vars(coeffs.size(), 0);
    RngStream crng = root.split(1);
    for (auto& c : coeffs) c = crng.uniform(-1.0, 1.0);
    const UnitarySpec diag = make_diagonal(all_qubits, coeffs, vars);
    const double data[] = {0.37};
    const ApplyCtx diag_ctx{{}, data};

    const PauliString obs = PauliString::parse(std::string("ZIX") + std::string(n - 3, 'I'));

    RngStream mk = root.split(2);
    const SmoothPreset pre = preset_smooth(n, 2, 2, mk);
    std::vector<double> params(static_cast<std::size_t>(pre.model.num_params()));
    RngStream prng = root.split(3);
    for (auto& p : params) p = prng.uniform(-std::numbers::pi, std::numbers::pi);

    StateVector work = base;
    std::vector<Row> rows;
    rows.push_back(bench_kernel("pauli rotation apply", [&] { apply_inplace(work, rot); }));
    rows.push_back(bench_kernel("data diagonal apply", [&] { apply_inplace(work, diag, diag_ctx); }));
    rows.push_back(bench_kernel("pauli expectation", [&] {
        volatile double v = expectation(base, obs);
        (void)v;
    }));
    rows.push_back(bench_kernel("smooth forward pass", [&] {
        volatile double v = loss(pre.model, params);
        (void)v;
    }));

    std::printf("%-22s %12s %12s %9s\n", "kernel", "serial ms", "parallel ms", "speedup");
    for (const Row& r : rows)
        std::printf("%-22s %12.3f %12.3f %8.2fx\n", r.name.c_str(), r.serial_ms, r.parallel_ms,
                    r.serial_ms / r.parallel_ms);
    if (max_threads() == 1)
        std::printf("note: single hardware thread available; expect ~1x speedups\n");
    return 0;
}
