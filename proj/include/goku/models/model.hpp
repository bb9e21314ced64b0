#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "goku/ad/ops.hpp"
#include "goku/core/container.hpp"
#include "goku/core/tensor.hpp"
#include "goku/train/window.hpp"

namespace goku::models {

enum class Variant { goku_basic, goku_attention, lstm_baseline, latent_ode_baseline, naive };

std::string variant_name(Variant v);
Variant variant_from_name(const std::string& name);

struct ParamRange {
    double lo = 0.0;
    double hi = 0.0;
};

// Parameter boxes for a Stuart-Landau network with n oscillators, in the
// layout used throughout: growth a (n entries, [-1, 1]), frequency w
// (n entries, [0, 1]), coupling C row-major (n*n entries, [0, 0.2]).
std::vector<ParamRange> sl_param_ranges(int n_oscillators);

struct ModelSpec {
    Variant variant = Variant::goku_attention;
    int input_dim = 0;    // D, channels per time frame
    int feature_dim = 128;
    int feature_hidden = 200;
    int de_state_dim = 0;  // 2N for the oscillator variants, z_dim for baselines
    std::vector<ParamRange> de_param_ranges;  // empty for baselines
    bool variational = false;
    std::optional<long> baseline_size_target;

    // Width knobs; the defaults give the full-size model, smaller values
    // make gradcheck-sized instances.
    int pattern_z0_hidden = 64;     // per-layer RNN width, z0 path (basic wiring)
    int pattern_theta_hidden = 64;  // per-direction LSTM width, theta path
    int latent_out_hidden = 200;
    int node_hidden_dim = 0;        // latent_ode_baseline vector field width

    // Differential-equation layer constants for the oscillator variants.
    double global_coupling = 0.1;
    double noise_intensity = 0.02;
    double rate_scale = 20.0;
    double dt = 0.05;

    void validate() const;

    int n_oscillators() const { return de_state_dim / 2; }
    int n_de_params() const { return static_cast<int>(de_param_ranges.size()); }
    bool has_theta_path() const {
        return variant == Variant::goku_basic || variant == Variant::goku_attention;
    }
    // Output width of the z0 branch of the pattern extractor; the attention
    // variant uses a single LSTM as wide as the feature space.
    int pattern_z0_out() const {
        return variant == Variant::goku_attention ? feature_dim : pattern_z0_hidden;
    }
    // Both BiLSTM directions concatenated.
    int pattern_theta_out() const { return 2 * pattern_theta_hidden; }
};

void to_json(nlohmann::json& j, const ModelSpec& s);
void from_json(const nlohmann::json& j, ModelSpec& s);

ModelSpec make_goku_spec(Variant variant, int input_dim, int n_oscillators);
ModelSpec make_lstm_spec(int input_dim, int z_dim);
ModelSpec make_latent_ode_spec(int input_dim, int z_dim, int node_hidden_dim);
ModelSpec make_naive_spec(int input_dim);

// Trainable weights, grouped by pipeline stage. Entry order is fixed by
// construction and shared with the graph leaves built from the state, so
// optimizers can pair gradients with entries by index.
struct ModelState {
    struct Entry {
        std::string stage;
        std::string name;
        Mat m;
    };

    ModelSpec spec;
    std::vector<Entry> params;
    long parameter_count = 0;

    Mat& at(const std::string& stage, const std::string& name);
    const Mat& at(const std::string& stage, const std::string& name) const;
    bool all_finite() const;
};

// Glorot-uniform weights, zero biases, drawn in entry order from a stream
// derived from `seed`.
ModelState init_model(const ModelSpec& spec, std::uint64_t seed);

long count_parameters(const ModelState& state);

// Fills in de_state_dim (and node_hidden_dim for the latent ODE baseline) so
// the total parameter count lands as close as possible to target_count.
// Throws NoSolutionError if the best achievable mismatch exceeds 2%.
ModelSpec match_baseline_size(const ModelSpec& base, long target_count);

// Checkpoints share the dataset container convention: manifest.json plus one
// float32 array file per weight matrix. Loading re-validates checksums.
void save_checkpoint(const ModelState& state, const std::filesystem::path& dir,
                     const nlohmann::json& metadata = nlohmann::json::object());
struct Checkpoint {
    ModelState state;
    nlohmann::json metadata;
};
Checkpoint load_checkpoint(const std::filesystem::path& dir);

// Posterior statistics produced by the encoder half. Column layouts follow
// the batch convention below; log-variances are empty unless the model is
// variational, attention weights are empty unless the variant pools with
// attention. Exactly one theta per sample regardless of the window count.
struct LatentEncoding {
    Mat z0_mean;            // [latent dim x n_windows*B], column w*B + b
    Mat theta_mean;         // [latent dim x B]
    Mat z0_logvar;
    Mat theta_logvar;
    Mat attention_weights;  // [T x B], each column a simplex over time
};

struct ForwardOptions {
    int horizon = 0;
    // Latent SDE noise stream; batch slot b draws from (noise_seed, b) and
    // the step counter is the absolute frame index, so window solves and the
    // forecast continuation never reuse a draw.
    std::uint64_t noise_seed = 0;
    // Reparameterization draws in variational mode.
    std::uint64_t sample_seed = 0;
};

// Batch matrix convention: a [B x D x T] tensor is flattened to [D x B*T]
// with column t*B + b, so a time range is a contiguous column block.
Mat batch_to_frames(const Tensor3& batch);
Tensor3 frames_to_batch(const Mat& frames, long n_samples, long n_time);

// Tape forward pass; every field is a node of `g`, so losses composed from
// them reach all weight leaves. Invalid Vars mark absent outputs (forecast
// with horizon 0, theta for baselines, logvars in non-variational mode).
struct GraphForward {
    ad::Var reconstruction;  // [D x B*T]
    ad::Var forecast;        // [D x B*horizon]
    ad::Var forecast_latents;  // [state x B*horizon]
    ad::Var latents;         // stitched DE states [state x B*T]
    ad::Var z0;              // decoded per-window initial states [state x n_windows*B]
    ad::Var window_ends;     // final integrated state per window [state x n_windows*B]
    ad::Var theta;           // decoded DE parameters [P x B]
    ad::Var z0_mean;         // encoder outputs (latent space)
    ad::Var theta_mean;
    ad::Var z0_logvar;
    ad::Var theta_logvar;
    ad::Var attention;       // [T x B]
};

// Leaves for every state entry, in entry order, requires_grad on.
std::vector<ad::Var> make_leaves(ad::Graph& g, const ModelState& state);

GraphForward model_forward_graph(ad::Graph& g, const std::vector<ad::Var>& leaves,
                                 const ModelState& state, const Tensor3& batch,
                                 const train::WindowPlan& plan, const ForwardOptions& opts);

// Value-level results with tensors back in [B x channels x time] layout.
struct ForwardResult {
    Tensor3 reconstruction;  // [B x D x T]
    Tensor3 forecast;        // [B x D x horizon]
    Tensor3 forecast_latents;  // [B x state x horizon]
    Tensor3 latents;         // [B x state x T]
    LatentEncoding encoding;
    Mat theta;               // [P x B]
};

ForwardResult model_forward(const ModelState& state, const Tensor3& batch,
                            const train::WindowPlan& plan, const ForwardOptions& opts = {});

// Named entry points matching the pipeline pieces.
Tensor3 feature_extract(const ModelState& state, const Tensor3& batch);
LatentEncoding pattern_extract(const ModelState& state, const Tensor3& batch,
                               const train::WindowPlan& plan);
// Decoded (z0 per window [state x n_windows*B], theta [P x B]); theta is
// empty for variants without a theta path.
std::pair<Mat, Mat> latent_decode(const ModelState& state, const LatentEncoding& encoding);

ForwardResult goku_forward(const ModelState& state, const Tensor3& batch,
                           const train::WindowPlan& plan, const ForwardOptions& opts = {});
// The LSTM baseline is a single-shooting model: the cell consumes the
// decoded z0 as its first input and then feeds its own outputs back.
ForwardResult lstm_forward(const ModelState& state, const Tensor3& batch, int horizon = 0);
ForwardResult latent_ode_forward(const ModelState& state, const Tensor3& batch,
                                 const train::WindowPlan& plan, int horizon = 0);
// Constant per-channel time-mean prediction; no parameters involved.
ForwardResult naive_predict(const Tensor3& batch, int horizon = 0);

// Pools a [T x F] sequence into a single [F] vector with softmax scores
// from a scalar-output dense layer; also returns the weights.
std::pair<Vec, Vec> attention_pool(const Mat& sequence, const Mat& scorer_W, double scorer_b);

}  // namespace goku::models
