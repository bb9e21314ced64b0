#include "goku/core/parallel.hpp"

#include <Eigen/Core>
#include <atomic>
#include <cstdlib>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace goku::par {

namespace {

std::atomic<bool>& flag() {
    static std::atomic<bool> on{[] {
        const char* env = std::getenv("GOKU_SERIAL");
        return !(env != nullptr && env[0] == '1');
    }()};
    return on;
}

}  // namespace

bool enabled() { return flag().load(std::memory_order_relaxed); }

void set_enabled(bool on) {
    flag().store(on, std::memory_order_relaxed);
    // Eigen's threaded GEMM follows the same switch so the serial reference
    // really is single-threaded end to end.
    Eigen::setNbThreads(on ? 0 : 1);
}

int max_threads() {
#ifdef _OPENMP
    return enabled() ? omp_get_max_threads() : 1;
#else
    return 1;
#endif
}

namespace detail {

void parallel_for_impl(std::int64_t n, void* ctx, void (*body)(void*, std::int64_t)) {
    if (enabled()) {
#pragma omp parallel for schedule(static)
        for (std::int64_t i = 0; i < n; ++i) {
            body(ctx, i);
        }
    } else {
        for (std::int64_t i = 0; i < n; ++i) {
            body(ctx, i);
        }
    }
}

}  // namespace detail

}  // namespace goku::par
