#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "json.hpp"

#include "goku/core/rng.hpp"
#include "goku/core/tensor.hpp"
#include "goku/models/model.hpp"
#include "goku/train/window.hpp"

namespace goku::train {

struct TrainConfig {
    int batch_size = 64;
    int seq_len = 46;
    int window_len = 10;
    double continuity_coeff = 2.0;  // lambda
    double weight_decay = 1e-10;
    double lr_floor = 1e-7;
    double lr_peak = 0.005251;
    int warmup_epochs = 20;
    int plateau_patience = 50;
    int sinusoid_period = 50;
    double amplitude_decay = 0.5;
    int max_epochs = 500;
    int early_stop_patience = 0;  // 0 disables early stopping
    double val_fraction = 0.1;
    std::uint64_t seed = 0;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    double grad_clip_norm = 10.0;  // global-norm clip; 0 disables

    void validate() const;
};

void to_json(nlohmann::json& j, const TrainConfig& c);
void from_json(const nlohmann::json& j, TrainConfig& c);

struct TrainState {
    int epoch = 0;
    double best_val = std::numeric_limits<double>::infinity();
    int best_epoch = -1;
    int epochs_since_improvement = 0;
    int plateau_epoch = -1;  // -1 until the peak-lr phase stagnates
    int skipped_batches = 0;  // updates dropped because gradients went non-finite
    std::vector<double> lr_history;
    std::vector<double> train_loss_history;
    std::vector<double> val_loss_history;
};

void to_json(nlohmann::json& j, const TrainState& s);

// Warmup ramps linearly from lr_floor to lr_peak over warmup_epochs, then
// the rate holds at the peak. Once validation stagnates (plateau_epoch >= 0)
// the rate follows a cosine arch restarted every sinusoid_period epochs with
// its amplitude shrunk by amplitude_decay per period:
//   lr(e) = floor + (peak - floor) * decay^((e-p)/P) * (1 + cos(2 pi (e-p)/P)) / 2
double lr_schedule(int epoch, const TrainConfig& cfg, int plateau_epoch = -1);

// Uniform start index for a contiguous training slice of seq_len frames.
long sample_training_window(long sample_len, long seq_len, Rng& rng);

// Training objective on one batch, built on the tape so it can be
// differentiated: reconstruction + continuity (+ KL when variational).
// Parts that do not apply are invalid Vars.
struct BatchLoss {
    ad::Var total;
    ad::Var reconstruction;
    ad::Var continuity;
    ad::Var kl;
    models::GraphForward forward;
};

BatchLoss batch_loss_graph(ad::Graph& g, std::vector<ad::Var>& leaves,
                           const models::ModelState& state, const Tensor3& batch,
                           const WindowPlan& plan, const models::ForwardOptions& opts,
                           const TrainConfig& cfg);

struct FitResult {
    models::ModelState best_state;  // weights at the best validation epoch
    TrainState history;
};

// Full training loop: shuffled batches, one random window per sample per
// epoch, held-out validation split, best-validation tracking, and the
// three-phase learning-rate schedule. Deterministic per cfg.seed. When
// checkpoint_dir is non-empty the best weights are saved there; when
// log_path is non-empty one JSON record per epoch is appended.
FitResult fit(const models::ModelState& init, const Tensor3& train_data, const TrainConfig& cfg,
              const std::string& checkpoint_dir = "", const std::string& log_path = "");

}  // namespace goku::train
