#include "goku/train/window.hpp"

#include <string>

#include "goku/core/errors.hpp"

namespace goku::train {

WindowPlan plan_windows(int seq_len, int window_len) {
    if (window_len < 2) throw InvalidArgument("plan_windows: window_len must be at least 2");
    if (seq_len < window_len)
        throw InvalidArgument("plan_windows: seq_len " + std::to_string(seq_len) +
                              " shorter than window_len " + std::to_string(window_len));
    const int stride = window_len - 1;
    const int rem = (seq_len - window_len) % stride;
    if (rem != 0) {
        const int lower = seq_len - rem;
        const int upper = lower + stride;
        throw InvalidArgument("plan_windows: seq_len " + std::to_string(seq_len) +
                              " does not split into windows of " + std::to_string(window_len) +
                              " with single-point overlap; nearest valid seq_len values are " +
                              std::to_string(lower) + " and " + std::to_string(upper));
    }
    WindowPlan plan;
    plan.seq_len = seq_len;
    plan.window_len = window_len;
    plan.n_windows = (seq_len - window_len) / stride + 1;
    for (int w = 0; w + 1 < plan.n_windows; ++w) {
        const int shared = (w + 1) * stride;
        plan.junction_index_pairs.emplace_back(shared, shared);
    }
    return plan;
}

}  // namespace goku::train
