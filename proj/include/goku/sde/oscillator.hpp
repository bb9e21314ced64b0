#pragma once

#include "goku/ad/ops.hpp"
#include "goku/core/tensor.hpp"

namespace goku::sde {

// Coupled Stuart-Landau oscillator network. States are stored as
// [x_1..x_N, y_1..y_N] with z_j = x_j + i y_j. The right-hand side is
// multiplied by rate_scale, drift and diffusion alike.
struct OscillatorNetworkParams {
    int n_oscillators = 0;
    Vec growth;               // a_j
    Vec frequency;            // w_j, radians per unit latent time
    Mat coupling;             // C_ij, row i feeds column j
    double global_coupling = 0.0;
    double noise_intensity = 0.0;
    double rate_scale = 20.0;

    void validate() const;
};

struct NetworkState {
    Vec values;  // length 2N
};

// dx_j = rate_scale * ((a_j - x_j^2 - y_j^2) x_j - w_j y_j + G sum_i C_ij (x_i - x_j))
// dy_j = rate_scale * ((a_j - x_j^2 - y_j^2) y_j + w_j x_j + G sum_i C_ij (y_i - y_j))
// The i = j term is skipped outright so the coupling diagonal is inert
// bit-for-bit.
Vec sl_drift(const NetworkState& state, const OscillatorNetworkParams& params);

// Additive state-independent diffusion: every entry is beta * rate_scale.
Vec sl_diffusion(const OscillatorNetworkParams& params);

// Column layout used by the batched graph drift: row i*N + j holds C_ij.
Mat flatten_coupling(const Mat& coupling);

// Batched tape version of sl_drift. state is [2N x M]; growth and frequency
// are [N x M] (one column per batch sample); cflat is [N*N x M] in
// flatten_coupling layout.
ad::Var sl_drift_graph(ad::Var state, ad::Var growth, ad::Var frequency, ad::Var cflat,
                       double global_coupling, double rate_scale);

}  // namespace goku::sde
