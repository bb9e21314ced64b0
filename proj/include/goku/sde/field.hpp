#pragma once

#include <vector>

#include "goku/ad/ops.hpp"
#include "goku/core/tensor.hpp"

namespace goku::sde {

// Plain fully connected stack; layer k maps weights[k] * h + biases[k].
struct DenseStack {
    std::vector<Mat> weights;  // [out x in]
    std::vector<Mat> biases;   // [out x 1]
};

// tanh is applied after every layer, the output layer included.
Vec neural_vector_field(const DenseStack& net, const Vec& state);

// Tape version over a [dim x cols] state batch; weights/biases are graph
// nodes so gradients reach them.
ad::Var neural_vector_field_graph(const std::vector<ad::Var>& weights,
                                  const std::vector<ad::Var>& biases, ad::Var state);

}  // namespace goku::sde
