#pragma once

#include <cstdint>

namespace goku::par {

// Runtime switch between the OpenMP kernels and the serial reference path.
// Both paths must produce bit-identical results: loop bodies write disjoint
// outputs and every reduction is folded in a fixed serial order.
bool enabled();
void set_enabled(bool on);
int max_threads();

namespace detail {
void parallel_for_impl(std::int64_t n, void* ctx, void (*body)(void*, std::int64_t));
}

template <typename F>
void parallel_for(std::int64_t n, F&& f) {
    if (n <= 0) return;
    detail::parallel_for_impl(n, const_cast<void*>(static_cast<const void*>(&f)),
                              [](void* ctx, std::int64_t i) { (*static_cast<F*>(ctx))(i); });
}

}  // namespace goku::par
