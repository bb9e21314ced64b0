#include "goku/sde/oscillator.hpp"

#include "goku/core/errors.hpp"

namespace goku::sde {

void OscillatorNetworkParams::validate() const {
    if (n_oscillators < 1) throw InvalidArgument("oscillator params: n_oscillators must be >= 1");
    const auto n = static_cast<Eigen::Index>(n_oscillators);
    if (growth.size() != n || frequency.size() != n)
        throw InvalidArgument("oscillator params: growth/frequency length must equal N");
    if (coupling.rows() != n || coupling.cols() != n)
        throw InvalidArgument("oscillator params: coupling must be N x N");
    if (!growth.allFinite() || !frequency.allFinite() || !coupling.allFinite() ||
        !std::isfinite(global_coupling) || !std::isfinite(noise_intensity) ||
        !std::isfinite(rate_scale))
        throw InvalidArgument("oscillator params: non-finite entry");
    if (noise_intensity < 0.0) throw InvalidArgument("oscillator params: noise_intensity < 0");
    if (rate_scale <= 0.0) throw InvalidArgument("oscillator params: rate_scale must be > 0");
}

Vec sl_drift(const NetworkState& state, const OscillatorNetworkParams& params) {
    params.validate();
    const int n = params.n_oscillators;
    if (state.values.size() != 2 * n)
        throw InvalidArgument("sl_drift: state length must be 2N");
    const auto x = state.values.head(n);
    const auto y = state.values.tail(n);
    Vec out(2 * n);
    for (int j = 0; j < n; ++j) {
        const double r2 = x[j] * x[j] + y[j] * y[j];
        double cx = 0.0;
        double cy = 0.0;
        for (int i = 0; i < n; ++i) {
            if (i == j) continue;
            cx += params.coupling(i, j) * (x[i] - x[j]);
            cy += params.coupling(i, j) * (y[i] - y[j]);
        }
        const double common = params.growth[j] - r2;
        out[j] = params.rate_scale *
                 (common * x[j] - params.frequency[j] * y[j] + params.global_coupling * cx);
        out[n + j] = params.rate_scale *
                     (common * y[j] + params.frequency[j] * x[j] + params.global_coupling * cy);
    }
    return out;
}

Vec sl_diffusion(const OscillatorNetworkParams& params) {
    params.validate();
    return Vec::Constant(2 * params.n_oscillators,
                         params.noise_intensity * params.rate_scale);
}

Mat flatten_coupling(const Mat& coupling) {
    if (coupling.rows() != coupling.cols())
        throw InvalidArgument("flatten_coupling: matrix must be square");
    const Eigen::Index n = coupling.rows();
    Mat flat(n * n, 1);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) flat(i * n + j, 0) = coupling(i, j);
    return flat;
}

ad::Var sl_drift_graph(ad::Var state, ad::Var growth, ad::Var frequency, ad::Var cflat,
                       double global_coupling, double rate_scale) {
    const Eigen::Index n = growth.rows();
    const Eigen::Index m = state.cols();
    if (state.rows() != 2 * n) throw InvalidArgument("sl_drift_graph: state rows must be 2N");
    if (frequency.rows() != n || growth.cols() != m || frequency.cols() != m)
        throw InvalidArgument("sl_drift_graph: growth/frequency must be [N x cols(state)]");
    if (cflat.rows() != n * n || cflat.cols() != m)
        throw InvalidArgument("sl_drift_graph: coupling must be [N*N x cols(state)]");

    ad::Var x = ad::slice_rows(state, 0, n);
    ad::Var y = ad::slice_rows(state, n, n);
    ad::Var common = ad::sub(growth, ad::add(ad::square(x), ad::square(y)));
    ad::Var wx = ad::hadamard(frequency, x);
    ad::Var wy = ad::hadamard(frequency, y);
    ad::Var dx = ad::sub(ad::hadamard(common, x), wy);
    ad::Var dy = ad::add(ad::hadamard(common, y), wx);
    if (global_coupling != 0.0) {
        dx = ad::add(dx, ad::scale(ad::pairwise_coupling(cflat, x), global_coupling));
        dy = ad::add(dy, ad::scale(ad::pairwise_coupling(cflat, y), global_coupling));
    }
    return ad::scale(ad::vcat({dx, dy}), rate_scale);
}

}  // namespace goku::sde
