#pragma once

#include <cstdint>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace twincf {

// Execution policy for the data-parallel kernels. Every kernel has a serial
// reference path; the parallel path must produce identical results
// (bit-exact for integer accumulators, <=1e-12 relative for float sums at a
// fixed thread count). Tests and the kernel benchmark compare the two.
enum class Exec { Serial, Parallel };

constexpr std::uint64_t kMcBlockSize = 1u << 14;

inline int max_threads(Exec exec) {
#ifdef _OPENMP
    return exec == Exec::Parallel ? omp_get_max_threads() : 1;
#else
    (void)exec;
    return 1;
#endif
}

// Runs f(block_index, begin, end) over [0, n) in fixed-size blocks. Block
// boundaries do not depend on the thread count, so per-block seeded RNG
// streams give identical draws on the serial and parallel paths.
template <class F>
void for_blocks(std::uint64_t n, std::uint64_t block_size, Exec exec, F&& f) {
    const std::uint64_t n_blocks = block_size == 0 ? 0 : (n + block_size - 1) / block_size;
    if (exec == Exec::Parallel) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
        for (std::int64_t b = 0; b < static_cast<std::int64_t>(n_blocks); ++b) {
            const std::uint64_t begin = static_cast<std::uint64_t>(b) * block_size;
            const std::uint64_t end = begin + block_size < n ? begin + block_size : n;
            f(static_cast<std::uint64_t>(b), begin, end);
        }
        return;
#endif
    }
    for (std::uint64_t b = 0; b < n_blocks; ++b) {
        const std::uint64_t begin = b * block_size;
        const std::uint64_t end = begin + block_size < n ? begin + block_size : n;
        f(b, begin, end);
    }
}

}  // namespace twincf
