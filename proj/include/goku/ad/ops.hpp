#pragma once

#include <vector>

#include "goku/ad/graph.hpp"

namespace goku::ad {

// Dense layer: W * X + b broadcast over columns. W [out x in], X [in x cols],
// b [out x 1].
Var affine(Var W, Var X, Var b);
Var matmul(Var A, Var B);

Var add(Var a, Var b);
Var sub(Var a, Var b);
Var hadamard(Var a, Var b);
Var scale(Var a, double c);

Var sigmoid(Var a);
Var tanh_op(Var a);
Var relu(Var a);
Var mish(Var a);  // x * tanh(softplus(x))
Var exp_op(Var a);
Var square(Var a);

// Column-wise softmax: each column is normalized over its rows.
Var softmax_cols(Var a);

Var sum_all(Var a);   // 1x1
Var mean_all(Var a);  // 1x1
Var sum_sq(Var a);    // 1x1, sum of squared entries

Var slice_rows(Var a, Eigen::Index r0, Eigen::Index n);
Var slice_cols(Var a, Eigen::Index c0, Eigen::Index n);
Var hcat(const std::vector<Var>& parts);
Var vcat(const std::vector<Var>& parts);

// [R x C] -> [R x C*k], k copies side by side; backward sums the blocks.
// Used to share one parameter set across shooting windows.
Var tile_cols(Var a, Eigen::Index k);

// Scales each column j of a [R x C] by s(0, j); s is [1 x C].
Var row_broadcast_mul(Var a, Var s);

// Skip-diagonal pairwise coupling for a batch of oscillator networks.
// cflat is [N*N x M] with row i*N + j holding C_ij of column sample m;
// x is [N x M]. Output o(j, m) = sum_{i != j} C_ij,m * (x(i,m) - x(j,m)).
// The diagonal of C never enters the value or the gradients.
Var pairwise_coupling(Var cflat, Var x);

}  // namespace goku::ad
