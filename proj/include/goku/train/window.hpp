#pragma once

#include <utility>
#include <vector>

namespace goku::train {

// Partition of a latent sequence into overlapping shooting windows.
// Consecutive windows share exactly one time point: window w covers frames
// [w*(window_len-1), w*(window_len-1) + window_len). A junction records the
// shared latent time index once per window pair (end of one window, start of
// the next; equal by construction with overlap 1).
struct WindowPlan {
    int seq_len = 0;
    int window_len = 0;
    int n_windows = 0;
    std::vector<std::pair<int, int>> junction_index_pairs;

    int start(int window) const { return window * (window_len - 1); }
    int n_junctions() const { return static_cast<int>(junction_index_pairs.size()); }
};

// Requires seq_len >= window_len >= 2 and (seq_len - window_len) divisible
// by (window_len - 1); otherwise throws InvalidArgument naming the nearest
// valid sequence lengths on both sides.
WindowPlan plan_windows(int seq_len, int window_len);

}  // namespace goku::train
