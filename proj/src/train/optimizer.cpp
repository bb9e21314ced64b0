#include "goku/train/optimizer.hpp"

#include <cmath>

#include "goku/core/errors.hpp"

namespace goku::train {

Adam::Adam(const std::vector<Mat>& params, double beta1, double beta2, double eps,
           double weight_decay)
    : beta1_(beta1), beta2_(beta2), eps_(eps), weight_decay_(weight_decay) {
    if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0))
        throw InvalidArgument("Adam: betas must lie in [0, 1)");
    if (eps <= 0.0) throw InvalidArgument("Adam: eps must be positive");
    if (weight_decay < 0.0) throw InvalidArgument("Adam: negative weight decay");
    m_.reserve(params.size());
    v_.reserve(params.size());
    for (const auto& p : params) {
        m_.push_back(Mat::Zero(p.rows(), p.cols()));
        v_.push_back(Mat::Zero(p.rows(), p.cols()));
    }
}

void Adam::step(std::vector<Mat*>& params, const std::vector<Mat>& grads, double lr) {
    if (params.size() != m_.size() || grads.size() != m_.size())
        throw InvalidArgument("Adam: parameter/gradient count mismatch");
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
        Mat& p = *params[i];
        const Mat& g = grads[i];
        if (g.rows() != p.rows() || g.cols() != p.cols())
            throw InvalidArgument("Adam: gradient shape mismatch");
        m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * g;
        v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * g.cwiseProduct(g);
        const Mat mhat = m_[i] / bc1;
        const Mat vhat = v_[i] / bc2;
        p -= lr * (mhat.array() / (vhat.array().sqrt() + eps_)).matrix();
        if (weight_decay_ != 0.0) p -= (lr * weight_decay_) * p;
    }
}

}  // namespace goku::train
