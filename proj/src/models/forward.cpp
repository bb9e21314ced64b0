#include <cmath>
#include <string>
#include <vector>

#include "goku/core/errors.hpp"
#include "goku/core/rng.hpp"
#include "goku/models/cells.hpp"
#include "goku/models/model.hpp"
#include "goku/sde/field.hpp"
#include "goku/sde/integrate.hpp"
#include "goku/sde/oscillator.hpp"

namespace goku::models {

using ad::Var;

Mat batch_to_frames(const Tensor3& batch) {
    const long B = batch.samples(), D = batch.channels(), T = batch.time();
    Mat f(D, B * T);
    for (long b = 0; b < B; ++b)
        for (long d = 0; d < D; ++d)
            for (long t = 0; t < T; ++t) f(d, t * B + b) = batch.at(b, d, t);
    return f;
}

Tensor3 frames_to_batch(const Mat& frames, long n_samples, long n_time) {
    if (frames.cols() != n_samples * n_time)
        throw InvalidArgument("frames_to_batch: column count is not samples*time");
    Tensor3 out(n_samples, frames.rows(), n_time);
    for (long b = 0; b < n_samples; ++b)
        for (long d = 0; d < frames.rows(); ++d)
            for (long t = 0; t < n_time; ++t) out.at(b, d, t) = frames(d, t * n_samples + b);
    return out;
}

std::vector<Var> make_leaves(ad::Graph& g, const ModelState& state) {
    std::vector<Var> leaves;
    leaves.reserve(state.params.size());
    for (const auto& e : state.params) leaves.push_back(ad::make_leaf(g, e.m, true));
    return leaves;
}

namespace {

struct Pm {
    const ModelState* state;
    const std::vector<Var>* leaves;

    Var operator()(const std::string& stage, const std::string& name) const {
        const auto& ps = state->params;
        for (std::size_t i = 0; i < ps.size(); ++i)
            if (ps[i].name == name && ps[i].stage == stage) return (*leaves)[i];
        throw InvalidArgument("model forward: missing parameter " + stage + "/" + name);
    }
};

Var zeros(ad::Graph& g, long rows, long cols) {
    return ad::make_constant(g, Mat::Zero(rows, cols));
}

// Shared ResNet wiring of the feature extractor and the reconstructor:
// input projection with mish, three mish residual blocks, linear output.
Var resnet(const Pm& p, const std::string& stage, const std::string& prefix, Var x) {
    Var h = ad::mish(ad::affine(p(stage, prefix + "_in_W"), x, p(stage, prefix + "_in_b")));
    for (int k = 1; k <= 3; ++k) {
        const std::string base = prefix + "_res" + std::to_string(k);
        h = ad::add(h, ad::mish(ad::affine(p(stage, base + "_W"), h, p(stage, base + "_b"))));
    }
    return ad::affine(p(stage, prefix + "_out_W"), h, p(stage, prefix + "_out_b"));
}

// z0 branch of the pattern extractor over per-window slices, batched as
// [.. x n_windows*B] with column w*B + b. Frames are consumed newest first,
// so the final hidden state is conditioned on the window opening last.
Var z0_path(ad::Graph& g, const Pm& p, const ModelSpec& spec, Var features,
            const train::WindowPlan& plan, long B) {
    const int Wn = plan.n_windows;
    const int L = plan.window_len;
    const long Z = spec.pattern_z0_out();

    auto step_input = [&](int s) {
        std::vector<Var> blocks;
        blocks.reserve(static_cast<std::size_t>(Wn));
        for (int w = 0; w < Wn; ++w) {
            const long t = plan.start(w) + (L - 1 - s);
            blocks.push_back(ad::slice_cols(features, t * B, B));
        }
        return Wn == 1 ? blocks[0] : ad::hcat(blocks);
    };

    if (spec.variant == Variant::goku_attention) {
        LstmVars st{zeros(g, Z, Wn * B), zeros(g, Z, Wn * B)};
        Var Wx = p("pattern_extractor", "pe_z0_lstm_Wx");
        Var Wh = p("pattern_extractor", "pe_z0_lstm_Wh");
        Var b = p("pattern_extractor", "pe_z0_lstm_b");
        for (int s = 0; s < L; ++s) st = lstm_step(Wx, Wh, b, step_input(s), st);
        return st.h;
    }
    Var h1 = zeros(g, Z, Wn * B);
    Var h2 = zeros(g, Z, Wn * B);
    for (int s = 0; s < L; ++s) {
        h1 = rnn_relu_step(p("pattern_extractor", "pe_z0_l1_Wx"),
                           p("pattern_extractor", "pe_z0_l1_Wh"),
                           p("pattern_extractor", "pe_z0_l1_b"), step_input(s), h1);
        h2 = rnn_relu_step(p("pattern_extractor", "pe_z0_l2_Wx"),
                           p("pattern_extractor", "pe_z0_l2_Wh"),
                           p("pattern_extractor", "pe_z0_l2_b"), h1, h2);
    }
    return h2;
}

// One bidirectional layer; outputs per time step are the forward and
// backward hidden states concatenated, PyTorch-style (the backward state at
// step t has consumed frames T-1 down to t).
std::vector<Var> bilstm_layer(ad::Graph& g, const Pm& p, const std::string& fwd,
                              const std::string& bwd, const std::vector<Var>& xs, long Q,
                              long cols) {
    const int n = static_cast<int>(xs.size());
    Var fWx = p("pattern_extractor", fwd + "_Wx");
    Var fWh = p("pattern_extractor", fwd + "_Wh");
    Var fb = p("pattern_extractor", fwd + "_b");
    Var bWx = p("pattern_extractor", bwd + "_Wx");
    Var bWh = p("pattern_extractor", bwd + "_Wh");
    Var bb = p("pattern_extractor", bwd + "_b");

    std::vector<Var> fh(static_cast<std::size_t>(n)), bh(static_cast<std::size_t>(n));
    LstmVars sf{zeros(g, Q, cols), zeros(g, Q, cols)};
    for (int t = 0; t < n; ++t) {
        sf = lstm_step(fWx, fWh, fb, xs[static_cast<std::size_t>(t)], sf);
        fh[static_cast<std::size_t>(t)] = sf.h;
    }
    LstmVars sb{zeros(g, Q, cols), zeros(g, Q, cols)};
    for (int t = n - 1; t >= 0; --t) {
        sb = lstm_step(bWx, bWh, bb, xs[static_cast<std::size_t>(t)], sb);
        bh[static_cast<std::size_t>(t)] = sb.h;
    }
    std::vector<Var> out(static_cast<std::size_t>(n));
    for (int t = 0; t < n; ++t)
        out[static_cast<std::size_t>(t)] =
            ad::vcat({fh[static_cast<std::size_t>(t)], bh[static_cast<std::size_t>(t)]});
    return out;
}

struct ThetaFeatures {
    Var pooled;     // [2Q x B]
    Var attention;  // [T x B], invalid for the basic variant
};

ThetaFeatures theta_path(ad::Graph& g, const Pm& p, const ModelSpec& spec, Var features, long B,
                         long T) {
    std::vector<Var> xs(static_cast<std::size_t>(T));
    for (long t = 0; t < T; ++t) xs[static_cast<std::size_t>(t)] = ad::slice_cols(features, t * B, B);
    const long Q = spec.pattern_theta_hidden;

    if (spec.variant == Variant::goku_basic) {
        auto o1 = bilstm_layer(g, p, "pe_th_l1_fwd", "pe_th_l1_bwd", xs, Q, B);
        auto o2 = bilstm_layer(g, p, "pe_th_l2_fwd", "pe_th_l2_bwd", o1, Q, B);
        return {o2.back(), Var{}};
    }
    auto o = bilstm_layer(g, p, "pe_th_fwd", "pe_th_bwd", xs, Q, B);
    std::vector<Var> scores(static_cast<std::size_t>(T));
    Var aW = p("pattern_extractor", "pe_att_W");
    Var ab = p("pattern_extractor", "pe_att_b");
    for (long t = 0; t < T; ++t)
        scores[static_cast<std::size_t>(t)] = ad::affine(aW, o[static_cast<std::size_t>(t)], ab);
    Var att = ad::softmax_cols(ad::vcat(scores));  // [T x B]
    Var pooled{};
    for (long t = 0; t < T; ++t) {
        Var term = ad::row_broadcast_mul(o[static_cast<std::size_t>(t)], ad::slice_rows(att, t, 1));
        pooled = t == 0 ? term : ad::add(pooled, term);
    }
    return {pooled, att};
}

struct LatentHead {
    Var sample;
    Var mean;
    Var logvar;  // invalid unless variational
};

LatentHead latent_in(ad::Graph& g, const Pm& p, const std::string& prefix, Var x, bool variational,
                     std::uint64_t sample_seed, const char* label) {
    Var mu = ad::affine(p("latent_in", prefix + "_W"), x, p("latent_in", prefix + "_b"));
    if (!variational) return {mu, mu, Var{}};
    Var lv = ad::affine(p("latent_in", prefix + "_lv_W"), x, p("latent_in", prefix + "_lv_b"));
    Mat eps(mu.rows(), mu.cols());
    Rng rng(derive_seed(sample_seed, label));
    for (long c = 0; c < eps.cols(); ++c)
        for (long r = 0; r < eps.rows(); ++r) eps(r, c) = rng.normal();
    Var z = ad::add(mu, ad::hadamard(ad::exp_op(ad::scale(lv, 0.5)), ad::make_constant(g, eps)));
    return {z, mu, lv};
}

Var decode_z0(const Pm& p, Var z) {
    Var h = ad::affine(p("latent_out", "lo_z0_1_W"), z, p("latent_out", "lo_z0_1_b"));
    return ad::affine(p("latent_out", "lo_z0_2_W"), h, p("latent_out", "lo_z0_2_b"));
}

// Sigmoid on both layers, then per-parameter affine map from [0, 1] into the
// declared box, so theta cannot leave it for any weights.
Var decode_theta(ad::Graph& g, const Pm& p, const ModelSpec& spec, Var z) {
    Var h = ad::sigmoid(ad::affine(p("latent_out", "lo_th_1_W"), z, p("latent_out", "lo_th_1_b")));
    Var s = ad::sigmoid(ad::affine(p("latent_out", "lo_th_2_W"), h, p("latent_out", "lo_th_2_b")));
    const long P = spec.n_de_params();
    const long B = s.cols();
    Mat lo(P, B), span(P, B);
    for (long k = 0; k < P; ++k) {
        lo.row(k).setConstant(spec.de_param_ranges[static_cast<std::size_t>(k)].lo);
        span.row(k).setConstant(spec.de_param_ranges[static_cast<std::size_t>(k)].hi -
                                spec.de_param_ranges[static_cast<std::size_t>(k)].lo);
    }
    return ad::add(ad::hadamard(ad::make_constant(g, std::move(span)), s),
                   ad::make_constant(g, std::move(lo)));
}

// Frame t of the stitched trajectory: window 0 owns its whole span, every
// later window contributes from its second point on (the junction belongs to
// the earlier window).
void frame_owner(const train::WindowPlan& plan, long t, int& w, int& k) {
    w = t == 0 ? 0 : static_cast<int>((t - 1) / (plan.window_len - 1));
    k = static_cast<int>(t) - plan.start(w);
}

Var stitch_windows(const std::vector<Var>& states, const train::WindowPlan& plan, long B) {
    std::vector<Var> parts;
    parts.reserve(static_cast<std::size_t>(plan.seq_len));
    for (long t = 0; t < plan.seq_len; ++t) {
        int w = 0, k = 0;
        frame_owner(plan, t, w, k);
        parts.push_back(ad::slice_cols(states[static_cast<std::size_t>(k)], w * B, B));
    }
    return ad::hcat(parts);
}

GraphForward naive_forward(ad::Graph& g, const Tensor3& batch, int horizon) {
    const long B = batch.samples(), D = batch.channels(), T = batch.time();
    Mat means(D, B);
    for (long b = 0; b < B; ++b)
        for (long d = 0; d < D; ++d) {
            double acc = 0.0;
            for (long t = 0; t < T; ++t) acc += batch.at(b, d, t);
            means(d, b) = acc / static_cast<double>(T);
        }
    Mat recon(D, B * T);
    for (long t = 0; t < T; ++t) recon.middleCols(t * B, B) = means;
    GraphForward out;
    out.reconstruction = ad::make_constant(g, std::move(recon));
    if (horizon > 0) {
        Mat fc(D, B * horizon);
        for (long k = 0; k < horizon; ++k) fc.middleCols(k * B, B) = means;
        out.forecast = ad::make_constant(g, std::move(fc));
    }
    return out;
}

}  // namespace

GraphForward model_forward_graph(ad::Graph& g, const std::vector<Var>& leaves,
                                 const ModelState& state, const Tensor3& batch,
                                 const train::WindowPlan& plan, const ForwardOptions& opts) {
    const ModelSpec& spec = state.spec;
    spec.validate();
    const long B = batch.samples(), D = batch.channels(), T = batch.time();
    if (B < 1 || T < 1) throw InvalidArgument("model forward: empty batch");
    if (D != spec.input_dim)
        throw InvalidArgument("model forward: batch has " + std::to_string(D) +
                              " channels, spec expects " + std::to_string(spec.input_dim));
    if (opts.horizon < 0) throw InvalidArgument("model forward: negative horizon");

    if (spec.variant == Variant::naive) return naive_forward(g, batch, opts.horizon);

    if (plan.seq_len != T)
        throw InvalidArgument("model forward: window plan covers " +
                              std::to_string(plan.seq_len) + " frames, batch has " +
                              std::to_string(T));
    if (spec.variant == Variant::lstm_baseline && plan.n_windows != 1)
        throw InvalidArgument("model forward: the LSTM baseline is a single-shooting model");
    if (leaves.size() != state.params.size())
        throw InvalidArgument("model forward: leaf list does not match the state");

    Pm p{&state, &leaves};
    const int Wn = plan.n_windows;
    const int L = plan.window_len;
    const long S = spec.de_state_dim;

    GraphForward out;
    Var frames = ad::make_constant(g, batch_to_frames(batch));
    Var features = resnet(p, "feature_extractor", "fe", frames);

    Var patz0 = z0_path(g, p, spec, features, plan, B);
    auto hz0 = latent_in(g, p, "li_z0", patz0, spec.variational, opts.sample_seed, "eps-z0");
    out.z0_mean = hz0.mean;
    out.z0_logvar = hz0.logvar;
    Var z0de = decode_z0(p, hz0.sample);  // [S x Wn*B]
    out.z0 = z0de;

    std::function<Var(Var)> drift_tiled, drift_single;
    sde::GraphSolveOptions sopt;
    sopt.dt = spec.dt;

    if (spec.has_theta_path()) {
        auto th = theta_path(g, p, spec, features, B, T);
        out.attention = th.attention;
        auto hth = latent_in(g, p, "li_th", th.pooled, spec.variational, opts.sample_seed,
                             "eps-theta");
        out.theta_mean = hth.mean;
        out.theta_logvar = hth.logvar;
        Var theta = decode_theta(g, p, spec, hth.sample);
        out.theta = theta;

        const int N = spec.n_oscillators();
        Var growth = ad::slice_rows(theta, 0, N);
        Var freq = ad::slice_rows(theta, N, N);
        Var cflat = ad::slice_rows(theta, 2 * N, static_cast<long>(N) * N);
        Var growth_w = Wn == 1 ? growth : ad::tile_cols(growth, Wn);
        Var freq_w = Wn == 1 ? freq : ad::tile_cols(freq, Wn);
        Var cflat_w = Wn == 1 ? cflat : ad::tile_cols(cflat, Wn);
        const double G = spec.global_coupling;
        const double rs = spec.rate_scale;
        drift_tiled = [=](Var s) { return sde::sl_drift_graph(s, growth_w, freq_w, cflat_w, G, rs); };
        drift_single = [=](Var s) { return sde::sl_drift_graph(s, growth, freq, cflat, G, rs); };

        sopt.scheme = sde::Scheme::euler_maruyama;
        sopt.diffusion = Vec::Constant(S, spec.noise_intensity * spec.rate_scale);
    } else if (spec.variant == Variant::latent_ode_baseline) {
        std::vector<Var> fw = {p("de_layer", "de_field_1_W"), p("de_layer", "de_field_2_W"),
                               p("de_layer", "de_field_3_W")};
        std::vector<Var> fb = {p("de_layer", "de_field_1_b"), p("de_layer", "de_field_2_b"),
                               p("de_layer", "de_field_3_b")};
        drift_tiled = [=](Var s) { return sde::neural_vector_field_graph(fw, fb, s); };
        drift_single = drift_tiled;
        sopt.scheme = sde::Scheme::rk4_deterministic;
    }

    std::vector<Var> latall;  // per frame [S x B], stitched order
    if (spec.variant == Variant::lstm_baseline) {
        Var Wx = p("de_layer", "de_lstm_Wx");
        Var Wh = p("de_layer", "de_lstm_Wh");
        Var bb = p("de_layer", "de_lstm_b");
        LstmVars st{zeros(g, S, B), zeros(g, S, B)};
        latall.push_back(z0de);
        Var x = z0de;
        const long total = T - 1 + opts.horizon;
        for (long k = 0; k < total; ++k) {
            st = lstm_step(Wx, Wh, bb, x, st);
            latall.push_back(st.h);
            x = st.h;
        }
        out.window_ends = latall[static_cast<std::size_t>(T - 1)];
    } else {
        sopt.n_steps = L - 1;
        sopt.describe_column = [B](Eigen::Index j) {
            return "window " + std::to_string(j / B) + ", sample " + std::to_string(j % B);
        };
        const std::uint64_t nseed = opts.noise_seed;
        const train::WindowPlan plan_copy = plan;
        sopt.noise = [B, Wn, S, nseed, plan_copy](int k) {
            Mat xi(S, Wn * B);
            for (int w = 0; w < Wn; ++w)
                for (long b = 0; b < B; ++b) {
                    const std::uint64_t cs = combine_seed(nseed, static_cast<std::uint64_t>(b));
                    const std::uint64_t step = static_cast<std::uint64_t>(plan_copy.start(w) + k);
                    for (long d = 0; d < S; ++d)
                        xi(d, w * B + b) = normal_at(cs, step, static_cast<std::uint64_t>(d));
                }
            return xi;
        };
        auto states = sde::integrate_graph(drift_tiled, z0de, sopt);
        out.window_ends = states.back();
        for (long t = 0; t < T; ++t) {
            int w = 0, k = 0;
            frame_owner(plan, t, w, k);
            latall.push_back(ad::slice_cols(states[static_cast<std::size_t>(k)], w * B, B));
        }
        if (opts.horizon > 0) {
            Var last = Wn == 1 ? states.back() : ad::slice_cols(states.back(), (Wn - 1) * B, B);
            sde::GraphSolveOptions fopt = sopt;
            fopt.n_steps = opts.horizon;
            fopt.describe_column = [](Eigen::Index j) {
                return "forecast sample " + std::to_string(j);
            };
            fopt.noise = [B, S, T, nseed](int k) {
                Mat xi(S, B);
                for (long b = 0; b < B; ++b) {
                    const std::uint64_t cs = combine_seed(nseed, static_cast<std::uint64_t>(b));
                    const std::uint64_t step = static_cast<std::uint64_t>(T - 1 + k);
                    for (long d = 0; d < S; ++d)
                        xi(d, b) = normal_at(cs, step, static_cast<std::uint64_t>(d));
                }
                return xi;
            };
            auto fstates = sde::integrate_graph(drift_single, last, fopt);
            for (std::size_t k = 1; k < fstates.size(); ++k) latall.push_back(fstates[k]);
        }
    }

    std::vector<Var> recon_lat(latall.begin(), latall.begin() + T);
    out.latents = recon_lat.size() == 1 ? recon_lat[0] : ad::hcat(recon_lat);
    out.reconstruction = resnet(p, "reconstructor", "rc", out.latents);
    if (opts.horizon > 0) {
        std::vector<Var> fc_lat(latall.begin() + T, latall.end());
        out.forecast_latents = fc_lat.size() == 1 ? fc_lat[0] : ad::hcat(fc_lat);
        out.forecast = resnet(p, "reconstructor", "rc", out.forecast_latents);
    }
    return out;
}

ForwardResult model_forward(const ModelState& state, const Tensor3& batch,
                            const train::WindowPlan& plan, const ForwardOptions& opts) {
    ad::Graph g;
    std::vector<Var> leaves;
    leaves.reserve(state.params.size());
    for (const auto& e : state.params) leaves.push_back(ad::make_constant(g, e.m));
    GraphForward gf = model_forward_graph(g, leaves, state, batch, plan, opts);

    const long B = batch.samples();
    ForwardResult r;
    r.reconstruction = frames_to_batch(gf.reconstruction.value(), B, batch.time());
    if (gf.forecast.valid()) r.forecast = frames_to_batch(gf.forecast.value(), B, opts.horizon);
    if (gf.forecast_latents.valid())
        r.forecast_latents = frames_to_batch(gf.forecast_latents.value(), B, opts.horizon);
    if (gf.latents.valid()) r.latents = frames_to_batch(gf.latents.value(), B, batch.time());
    if (gf.z0_mean.valid()) r.encoding.z0_mean = gf.z0_mean.value();
    if (gf.theta_mean.valid()) r.encoding.theta_mean = gf.theta_mean.value();
    if (gf.z0_logvar.valid()) r.encoding.z0_logvar = gf.z0_logvar.value();
    if (gf.theta_logvar.valid()) r.encoding.theta_logvar = gf.theta_logvar.value();
    if (gf.attention.valid()) r.encoding.attention_weights = gf.attention.value();
    if (gf.theta.valid()) r.theta = gf.theta.value();
    return r;
}

Tensor3 feature_extract(const ModelState& state, const Tensor3& batch) {
    if (state.spec.variant == Variant::naive)
        throw InvalidArgument("feature_extract: the naive predictor has no feature extractor");
    if (batch.channels() != state.spec.input_dim)
        throw InvalidArgument("feature_extract: channel count does not match input_dim");
    if (batch.time() < 1) throw InvalidArgument("feature_extract: need at least one frame");
    ad::Graph g;
    std::vector<Var> leaves;
    leaves.reserve(state.params.size());
    for (const auto& e : state.params) leaves.push_back(ad::make_constant(g, e.m));
    Pm p{&state, &leaves};
    Var features = resnet(p, "feature_extractor", "fe", ad::make_constant(g, batch_to_frames(batch)));
    return frames_to_batch(features.value(), batch.samples(), batch.time());
}

LatentEncoding pattern_extract(const ModelState& state, const Tensor3& batch,
                               const train::WindowPlan& plan) {
    const ModelSpec& spec = state.spec;
    if (spec.variant == Variant::naive)
        throw InvalidArgument("pattern_extract: the naive predictor has no pattern extractor");
    if (plan.seq_len != batch.time())
        throw InvalidArgument("pattern_extract: window plan does not cover the batch length");
    ad::Graph g;
    std::vector<Var> leaves;
    leaves.reserve(state.params.size());
    for (const auto& e : state.params) leaves.push_back(ad::make_constant(g, e.m));
    Pm p{&state, &leaves};
    const long B = batch.samples();

    Var features = resnet(p, "feature_extractor", "fe", ad::make_constant(g, batch_to_frames(batch)));
    Var patz0 = z0_path(g, p, spec, features, plan, B);
    auto hz0 = latent_in(g, p, "li_z0", patz0, spec.variational, 0, "eps-z0");
    LatentEncoding enc;
    enc.z0_mean = hz0.mean.value();
    if (hz0.logvar.valid()) enc.z0_logvar = hz0.logvar.value();
    if (spec.has_theta_path()) {
        auto th = theta_path(g, p, spec, features, B, batch.time());
        auto hth = latent_in(g, p, "li_th", th.pooled, spec.variational, 0, "eps-theta");
        enc.theta_mean = hth.mean.value();
        if (hth.logvar.valid()) enc.theta_logvar = hth.logvar.value();
        if (th.attention.valid()) enc.attention_weights = th.attention.value();
    }
    return enc;
}

std::pair<Mat, Mat> latent_decode(const ModelState& state, const LatentEncoding& encoding) {
    const ModelSpec& spec = state.spec;
    if (spec.variant == Variant::naive)
        throw InvalidArgument("latent_decode: the naive predictor has no latent heads");
    if (encoding.z0_mean.rows() != spec.pattern_z0_out())
        throw InvalidArgument("latent_decode: z0 encoding dimension mismatch");
    ad::Graph g;
    std::vector<Var> leaves;
    leaves.reserve(state.params.size());
    for (const auto& e : state.params) leaves.push_back(ad::make_constant(g, e.m));
    Pm p{&state, &leaves};

    Mat z0 = decode_z0(p, ad::make_constant(g, encoding.z0_mean)).value();
    Mat theta;
    if (spec.has_theta_path()) {
        if (encoding.theta_mean.rows() != spec.pattern_theta_out())
            throw InvalidArgument("latent_decode: theta encoding dimension mismatch");
        theta = decode_theta(g, p, spec, ad::make_constant(g, encoding.theta_mean)).value();
    }
    return {std::move(z0), std::move(theta)};
}

ForwardResult goku_forward(const ModelState& state, const Tensor3& batch,
                           const train::WindowPlan& plan, const ForwardOptions& opts) {
    if (!state.spec.has_theta_path())
        throw InvalidArgument("goku_forward: state is not a GOKU variant");
    return model_forward(state, batch, plan, opts);
}

ForwardResult lstm_forward(const ModelState& state, const Tensor3& batch, int horizon) {
    if (state.spec.variant != Variant::lstm_baseline)
        throw InvalidArgument("lstm_forward: state is not the LSTM baseline");
    train::WindowPlan plan;
    plan.seq_len = static_cast<int>(batch.time());
    plan.window_len = plan.seq_len;
    plan.n_windows = 1;
    ForwardOptions opts;
    opts.horizon = horizon;
    return model_forward(state, batch, plan, opts);
}

ForwardResult latent_ode_forward(const ModelState& state, const Tensor3& batch,
                                 const train::WindowPlan& plan, int horizon) {
    if (state.spec.variant != Variant::latent_ode_baseline)
        throw InvalidArgument("latent_ode_forward: state is not the latent ODE baseline");
    ForwardOptions opts;
    opts.horizon = horizon;
    return model_forward(state, batch, plan, opts);
}

ForwardResult naive_predict(const Tensor3& batch, int horizon) {
    ad::Graph g;
    GraphForward gf = naive_forward(g, batch, horizon);
    ForwardResult r;
    r.reconstruction = frames_to_batch(gf.reconstruction.value(), batch.samples(), batch.time());
    if (gf.forecast.valid())
        r.forecast = frames_to_batch(gf.forecast.value(), batch.samples(), horizon);
    return r;
}

std::pair<Vec, Vec> attention_pool(const Mat& sequence, const Mat& scorer_W, double scorer_b) {
    if (sequence.rows() < 1) throw InvalidArgument("attention_pool: empty sequence");
    if (scorer_W.rows() != 1 || scorer_W.cols() != sequence.cols())
        throw InvalidArgument("attention_pool: scorer shape must be [1 x feature dim]");
    Vec scores = (sequence * scorer_W.transpose()).col(0).array() + scorer_b;
    const double m = scores.maxCoeff();
    Vec weights = (scores.array() - m).exp();
    weights /= weights.sum();
    Vec pooled = sequence.transpose() * weights;
    return {std::move(pooled), std::move(weights)};
}

}  // namespace goku::models
