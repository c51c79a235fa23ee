#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace qdml {

// Execution policy for the kernels. "serial" and "parallel" force a path;
// "automatic" parallelizes once the element count crosses a threshold.
// Both paths produce bit-identical results: element-wise loops are order
// independent, and reductions always go through the fixed-block scheme in
// blocked_sum below.
enum class ExecMode { serial, parallel, automatic };

namespace detail {
inline ExecMode& exec_mode_ref() {
    static ExecMode mode = ExecMode::automatic;
    return mode;
}
}  // namespace detail

inline ExecMode exec_mode() { return detail::exec_mode_ref(); }
inline void set_exec_mode(ExecMode m) { detail::exec_mode_ref() = m; }

inline int max_threads() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

inline constexpr std::size_t kParallelThreshold = std::size_t{1} << 14;

inline bool use_parallel(std::size_t n) {
    switch (exec_mode()) {
        case ExecMode::serial: return false;
        case ExecMode::parallel: return max_threads() > 1;
        case ExecMode::automatic: return n >= kParallelThreshold && max_threads() > 1;
    }
    return false;
}

// Element-wise loop; f(i) must be independent across i.
template <class F>
void parallel_for(std::size_t n, F&& f) {
#ifdef _OPENMP
    if (use_parallel(n)) {
        const std::int64_t sn = static_cast<std::int64_t>(n);
#pragma omp parallel for schedule(static)
        for (std::int64_t i = 0; i < sn; ++i) f(static_cast<std::size_t>(i));
        return;
    }
#endif
    for (std::size_t i = 0; i < n; ++i) f(i);
}

inline constexpr std::size_t kReduceBlock = 4096;

// Deterministic reduction: per-block partial sums (sequential within each
// block) combined in fixed block order. The arithmetic is identical whether
// blocks are filled serially or by OpenMP threads, so the result does not
// depend on the thread count.
template <class T, class F>
T blocked_sum(std::size_t n, F&& term) {
    if (n == 0) return T{};
    const std::size_t nblocks = (n + kReduceBlock - 1) / kReduceBlock;
    std::vector<T> partial(nblocks, T{});
    parallel_for(nblocks, [&](std::size_t b) {
        const std::size_t lo = b * kReduceBlock;
        const std::size_t hi = lo + kReduceBlock < n ? lo + kReduceBlock : n;
        T acc{};
        for (std::size_t i = lo; i < hi; ++i) acc += term(i);
        partial[b] = acc;
    });
    T total{};
    for (std::size_t b = 0; b < nblocks; ++b) total += partial[b];
    return total;
}

}  // namespace qdml
