#include "goku/train/losses.hpp"

#include <string>

#include "goku/core/errors.hpp"

namespace goku::train {

namespace {

double mean_abs_or_throw(double sum_abs, long count) {
    const double mean_abs = sum_abs / static_cast<double>(count);
    if (mean_abs == 0.0)
        throw DegenerateInput("reconstruction_loss: target has zero mean absolute value");
    return mean_abs;
}

}  // namespace

double reconstruction_loss(const Mat& pred, const Mat& target) {
    if (pred.rows() != target.rows() || pred.cols() != target.cols())
        throw InvalidArgument("reconstruction_loss: shape mismatch");
    if (target.size() == 0) throw InvalidArgument("reconstruction_loss: empty target");
    const double mean_abs = mean_abs_or_throw(target.cwiseAbs().sum(), target.size());
    const double mse = (pred - target).squaredNorm() / static_cast<double>(target.size());
    return mse / mean_abs;
}

double reconstruction_loss(const Tensor3& pred, const Tensor3& target) {
    if (pred.samples() != target.samples() || pred.channels() != target.channels() ||
        pred.time() != target.time())
        throw InvalidArgument("reconstruction_loss: shape mismatch");
    if (target.size() == 0) throw InvalidArgument("reconstruction_loss: empty target");
    double sum_abs = 0.0, sum_sq = 0.0;
    for (long i = 0; i < target.size(); ++i) {
        sum_abs += std::abs(target.data()[i]);
        const double d = pred.data()[i] - target.data()[i];
        sum_sq += d * d;
    }
    const double mean_abs = mean_abs_or_throw(sum_abs, target.size());
    return sum_sq / static_cast<double>(target.size()) / mean_abs;
}

ad::Var reconstruction_loss_graph(ad::Graph& g, ad::Var pred, const Mat& target) {
    if (pred.rows() != target.rows() || pred.cols() != target.cols())
        throw InvalidArgument("reconstruction_loss: shape mismatch");
    if (target.size() == 0) throw InvalidArgument("reconstruction_loss: empty target");
    const double mean_abs = mean_abs_or_throw(target.cwiseAbs().sum(), target.size());
    auto diff = ad::sub(pred, ad::make_constant(g, target));
    return ad::scale(ad::sum_sq(diff), 1.0 / (static_cast<double>(target.size()) * mean_abs));
}

double continuity_penalty(const Mat& window_ends, const Mat& window_z0, const WindowPlan& plan,
                          double lambda) {
    if (lambda < 0.0) throw InvalidArgument("continuity_penalty: negative lambda");
    if (plan.n_windows < 2) return 0.0;
    const long W = plan.n_windows;
    if (window_ends.cols() != window_z0.cols() || window_ends.cols() % W != 0 ||
        window_ends.rows() != window_z0.rows())
        throw InvalidArgument("continuity_penalty: column layout does not match the plan");
    const long B = window_ends.cols() / W;
    const long J = W - 1;
    const double gap_sq =
        (window_ends.leftCols(J * B) - window_z0.rightCols(J * B)).squaredNorm();
    return lambda * gap_sq / (static_cast<double>(J) * static_cast<double>(B));
}

ad::Var continuity_penalty_graph(ad::Graph&, ad::Var window_ends, ad::Var window_z0,
                                 const WindowPlan& plan, double lambda) {
    if (lambda < 0.0) throw InvalidArgument("continuity_penalty: negative lambda");
    if (plan.n_windows < 2 || lambda == 0.0) return {};
    const long W = plan.n_windows;
    if (window_ends.cols() != window_z0.cols() || window_ends.cols() % W != 0 ||
        window_ends.rows() != window_z0.rows())
        throw InvalidArgument("continuity_penalty: column layout does not match the plan");
    const long B = window_ends.cols() / W;
    const long J = W - 1;
    auto gaps = ad::sub(ad::slice_cols(window_ends, 0, J * B), ad::slice_cols(window_z0, B, J * B));
    return ad::scale(ad::sum_sq(gaps),
                     lambda / (static_cast<double>(J) * static_cast<double>(B)));
}

double kl_term(const Mat& mu, const Mat& logvar) {
    if (mu.rows() != logvar.rows() || mu.cols() != logvar.cols())
        throw InvalidArgument("kl_term: shape mismatch");
    if (mu.cols() == 0) throw InvalidArgument("kl_term: empty input");
    const double total =
        0.5 * (logvar.array().exp() + mu.array().square() - 1.0 - logvar.array()).sum();
    return total / static_cast<double>(mu.cols());
}

ad::Var kl_term_graph(ad::Graph& g, ad::Var mu, ad::Var logvar) {
    if (mu.rows() != logvar.rows() || mu.cols() != logvar.cols())
        throw InvalidArgument("kl_term: shape mismatch");
    if (mu.cols() == 0) throw InvalidArgument("kl_term: empty input");
    auto ones = ad::make_constant(g, Mat::Ones(mu.rows(), mu.cols()));
    auto inner = ad::sub(ad::add(ad::exp_op(logvar), ad::hadamard(mu, mu)), ad::add(ones, logvar));
    return ad::scale(ad::sum_all(inner), 0.5 / static_cast<double>(mu.cols()));
}

}  // namespace goku::train
