#pragma once

#include <vector>

#include "goku/core/tensor.hpp"

namespace goku::train {

// Adam with decoupled weight decay: the decay term is subtracted from the
// parameter directly instead of being folded into the gradient.
class Adam {
  public:
    Adam(const std::vector<Mat>& params, double beta1 = 0.9, double beta2 = 0.999,
         double eps = 1e-8, double weight_decay = 0.0);

    // One update over all parameter matrices; grads must match params in
    // count and shape.
    void step(std::vector<Mat*>& params, const std::vector<Mat>& grads, double lr);

    long steps_taken() const { return t_; }

  private:
    std::vector<Mat> m_, v_;
    double beta1_, beta2_, eps_, weight_decay_;
    long t_ = 0;
};

}  // namespace goku::train
