#include "goku/train/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "goku/core/errors.hpp"
#include "goku/train/losses.hpp"
#include "goku/train/optimizer.hpp"

namespace goku::train {

void TrainConfig::validate() const {
    if (batch_size < 1) throw InvalidArgument("TrainConfig: batch_size must be positive");
    if (window_len < 2 || seq_len < window_len)
        throw InvalidArgument("TrainConfig: need seq_len >= window_len >= 2");
    if (continuity_coeff < 0.0) throw InvalidArgument("TrainConfig: negative continuity_coeff");
    if (weight_decay < 0.0) throw InvalidArgument("TrainConfig: negative weight_decay");
    if (!(lr_floor < lr_peak)) throw InvalidArgument("TrainConfig: lr_floor must be < lr_peak");
    if (lr_floor <= 0.0) throw InvalidArgument("TrainConfig: lr_floor must be positive");
    if (warmup_epochs < 0) throw InvalidArgument("TrainConfig: negative warmup_epochs");
    if (plateau_patience < 1) throw InvalidArgument("TrainConfig: plateau_patience must be >= 1");
    if (sinusoid_period < 1) throw InvalidArgument("TrainConfig: sinusoid_period must be >= 1");
    if (!(amplitude_decay > 0.0 && amplitude_decay <= 1.0))
        throw InvalidArgument("TrainConfig: amplitude_decay must lie in (0, 1]");
    if (max_epochs < 1) throw InvalidArgument("TrainConfig: max_epochs must be >= 1");
    if (early_stop_patience < 0) throw InvalidArgument("TrainConfig: negative early_stop_patience");
    if (!(val_fraction >= 0.0 && val_fraction < 1.0))
        throw InvalidArgument("TrainConfig: val_fraction must lie in [0, 1)");
    if (grad_clip_norm < 0.0) throw InvalidArgument("TrainConfig: negative grad_clip_norm");
}

void to_json(nlohmann::json& j, const TrainConfig& c) {
    j = nlohmann::json{{"batch_size", c.batch_size},
                       {"seq_len", c.seq_len},
                       {"window_len", c.window_len},
                       {"continuity_coeff", c.continuity_coeff},
                       {"weight_decay", c.weight_decay},
                       {"lr_floor", c.lr_floor},
                       {"lr_peak", c.lr_peak},
                       {"warmup_epochs", c.warmup_epochs},
                       {"plateau_patience", c.plateau_patience},
                       {"sinusoid_period", c.sinusoid_period},
                       {"amplitude_decay", c.amplitude_decay},
                       {"max_epochs", c.max_epochs},
                       {"early_stop_patience", c.early_stop_patience},
                       {"val_fraction", c.val_fraction},
                       {"seed", c.seed},
                       {"adam_beta1", c.adam_beta1},
                       {"adam_beta2", c.adam_beta2},
                       {"adam_eps", c.adam_eps},
                       {"grad_clip_norm", c.grad_clip_norm}};
}

void from_json(const nlohmann::json& j, TrainConfig& c) {
    static const std::vector<std::string> known = {
        "batch_size",       "seq_len",      "window_len",       "continuity_coeff",
        "weight_decay",     "lr_floor",     "lr_peak",          "warmup_epochs",
        "plateau_patience", "sinusoid_period", "amplitude_decay", "max_epochs",
        "early_stop_patience", "val_fraction", "seed",          "adam_beta1",
        "adam_beta2",       "adam_eps",     "grad_clip_norm"};
    for (const auto& [key, value] : j.items()) {
        (void)value;
        if (std::find(known.begin(), known.end(), key) == known.end())
            throw InvalidArgument("TrainConfig: unknown key '" + key + "'");
    }
    TrainConfig d;
    c.batch_size = j.value("batch_size", d.batch_size);
    c.seq_len = j.value("seq_len", d.seq_len);
    c.window_len = j.value("window_len", d.window_len);
    c.continuity_coeff = j.value("continuity_coeff", d.continuity_coeff);
    c.weight_decay = j.value("weight_decay", d.weight_decay);
    c.lr_floor = j.value("lr_floor", d.lr_floor);
    c.lr_peak = j.value("lr_peak", d.lr_peak);
    c.warmup_epochs = j.value("warmup_epochs", d.warmup_epochs);
    c.plateau_patience = j.value("plateau_patience", d.plateau_patience);
    c.sinusoid_period = j.value("sinusoid_period", d.sinusoid_period);
    c.amplitude_decay = j.value("amplitude_decay", d.amplitude_decay);
    c.max_epochs = j.value("max_epochs", d.max_epochs);
    c.early_stop_patience = j.value("early_stop_patience", d.early_stop_patience);
    c.val_fraction = j.value("val_fraction", d.val_fraction);
    c.seed = j.value("seed", d.seed);
    c.adam_beta1 = j.value("adam_beta1", d.adam_beta1);
    c.adam_beta2 = j.value("adam_beta2", d.adam_beta2);
    c.adam_eps = j.value("adam_eps", d.adam_eps);
    c.grad_clip_norm = j.value("grad_clip_norm", d.grad_clip_norm);
    c.validate();
}

void to_json(nlohmann::json& j, const TrainState& s) {
    j = nlohmann::json{{"epoch", s.epoch},
                       {"best_val", s.best_val},
                       {"best_epoch", s.best_epoch},
                       {"epochs_since_improvement", s.epochs_since_improvement},
                       {"plateau_epoch", s.plateau_epoch},
                       {"skipped_batches", s.skipped_batches},
                       {"lr_history", s.lr_history},
                       {"train_loss_history", s.train_loss_history},
                       {"val_loss_history", s.val_loss_history}};
}

double lr_schedule(int epoch, const TrainConfig& cfg, int plateau_epoch) {
    if (epoch < 0) throw InvalidArgument("lr_schedule: negative epoch");
    if (plateau_epoch >= 0 && epoch >= plateau_epoch) {
        constexpr double two_pi = 6.283185307179586476925286766559;
        const double x =
            static_cast<double>(epoch - plateau_epoch) / static_cast<double>(cfg.sinusoid_period);
        const double arch = (1.0 + std::cos(two_pi * x)) / 2.0;
        return cfg.lr_floor +
               (cfg.lr_peak - cfg.lr_floor) * std::pow(cfg.amplitude_decay, x) * arch;
    }
    if (epoch < cfg.warmup_epochs)
        return cfg.lr_floor + (cfg.lr_peak - cfg.lr_floor) * static_cast<double>(epoch) /
                                  static_cast<double>(cfg.warmup_epochs);
    return cfg.lr_peak;
}

long sample_training_window(long sample_len, long seq_len, Rng& rng) {
    if (seq_len < 1) throw InvalidArgument("sample_training_window: seq_len must be positive");
    if (sample_len < seq_len)
        throw InvalidArgument("sample_training_window: sample shorter than requested window (" +
                              std::to_string(sample_len) + " < " + std::to_string(seq_len) + ")");
    return static_cast<long>(rng.below(static_cast<std::uint64_t>(sample_len - seq_len + 1)));
}

BatchLoss batch_loss_graph(ad::Graph& g, std::vector<ad::Var>& leaves,
                           const models::ModelState& state, const Tensor3& batch,
                           const WindowPlan& plan, const models::ForwardOptions& opts,
                           const TrainConfig& cfg) {
    BatchLoss out;
    out.forward = models::model_forward_graph(g, leaves, state, batch, plan, opts);
    const Mat target = models::batch_to_frames(batch);
    out.reconstruction = reconstruction_loss_graph(g, out.forward.reconstruction, target);
    out.total = out.reconstruction;
    if (out.forward.window_ends.valid() && out.forward.z0.valid()) {
        out.continuity = continuity_penalty_graph(g, out.forward.window_ends, out.forward.z0,
                                                  plan, cfg.continuity_coeff);
        if (out.continuity.valid()) out.total = ad::add(out.total, out.continuity);
    }
    if (state.spec.variational) {
        ad::Var kl;
        if (out.forward.z0_mean.valid() && out.forward.z0_logvar.valid())
            kl = kl_term_graph(g, out.forward.z0_mean, out.forward.z0_logvar);
        if (out.forward.theta_mean.valid() && out.forward.theta_logvar.valid()) {
            auto kt = kl_term_graph(g, out.forward.theta_mean, out.forward.theta_logvar);
            kl = kl.valid() ? ad::add(kl, kt) : kt;
        }
        if (kl.valid()) {
            out.kl = kl;
            out.total = ad::add(out.total, out.kl);
        }
    }
    return out;
}

namespace {

Tensor3 slice_batch(const Tensor3& data, const std::vector<long>& ids,
                    const std::vector<long>& starts, long seq_len) {
    Tensor3 out(static_cast<long>(ids.size()), data.channels(), seq_len);
    for (std::size_t b = 0; b < ids.size(); ++b)
        for (long d = 0; d < data.channels(); ++d)
            for (long t = 0; t < seq_len; ++t)
                out.at(static_cast<long>(b), d, t) = data.at(ids[b], d, starts[b] + t);
    return out;
}

std::string theta_stats(const models::GraphForward& fwd) {
    if (!fwd.theta.valid()) return "theta: n/a";
    const Mat& th = fwd.theta.value();
    std::ostringstream os;
    os << "theta min " << th.minCoeff() << " max " << th.maxCoeff() << " mean " << th.mean();
    return os.str();
}

struct EvalPass {
    double loss = 0.0;
    long weight = 0;
};

}  // namespace

FitResult fit(const models::ModelState& init, const Tensor3& train_data, const TrainConfig& cfg,
              const std::string& checkpoint_dir, const std::string& log_path) {
    cfg.validate();
    init.spec.validate();
    if (init.spec.variant == models::Variant::naive)
        throw InvalidArgument("fit: the naive baseline has no trainable parameters");
    if (train_data.channels() != init.spec.input_dim)
        throw InvalidArgument("fit: dataset channel count does not match the model input size");
    if (train_data.time() < cfg.seq_len)
        throw InvalidArgument("fit: samples are shorter than the training window");
    if (train_data.samples() < 1) throw InvalidArgument("fit: empty dataset");

    const auto plan = plan_windows(cfg.seq_len, cfg.window_len);
    if (init.spec.variant == models::Variant::lstm_baseline && plan.n_windows != 1)
        throw InvalidArgument(
            "fit: the lstm baseline trains single-shooting; set window_len == seq_len");
    models::ModelState state = init;

    // Seeded validation split.
    const long n = train_data.samples();
    std::vector<long> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    Rng split_rng(derive_seed(cfg.seed, "val-split"));
    split_rng.shuffle(order);
    const long n_val = static_cast<long>(std::floor(static_cast<double>(n) * cfg.val_fraction));
    std::vector<long> train_ids(order.begin(), order.end() - n_val);
    std::vector<long> val_ids(order.end() - n_val, order.end());

    // Validation windows are drawn once so the loss is comparable across
    // epochs.
    Rng val_rng(derive_seed(cfg.seed, "val-window"));
    std::vector<long> val_starts(val_ids.size());
    for (auto& s : val_starts) s = sample_training_window(train_data.time(), cfg.seq_len, val_rng);
    models::ForwardOptions val_opts;
    val_opts.noise_seed = derive_seed(cfg.seed, "val-noise");
    val_opts.sample_seed = derive_seed(cfg.seed, "val-draw");

    std::vector<Mat*> param_ptrs;
    for (auto& e : state.params) param_ptrs.push_back(&e.m);
    std::vector<Mat> param_copies;
    for (const auto& e : state.params) param_copies.push_back(e.m);
    Adam adam(param_copies, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps, cfg.weight_decay);

    const std::uint64_t noise_base = derive_seed(cfg.seed, "latent-noise");
    const std::uint64_t draw_base = derive_seed(cfg.seed, "posterior-draw");

    std::ofstream log;
    if (!log_path.empty()) {
        log.open(log_path, std::ios::app);
        if (!log) throw InvalidArgument("fit: cannot open log file " + log_path);
    }

    TrainState ts;
    models::ModelState best_state = state;

    auto eval_split = [&](const std::vector<long>& ids, const std::vector<long>& starts) {
        EvalPass pass;
        for (std::size_t at = 0; at < ids.size(); at += static_cast<std::size_t>(cfg.batch_size)) {
            const std::size_t hi = std::min(ids.size(), at + static_cast<std::size_t>(cfg.batch_size));
            std::vector<long> bids(ids.begin() + static_cast<long>(at),
                                   ids.begin() + static_cast<long>(hi));
            std::vector<long> bstarts(starts.begin() + static_cast<long>(at),
                                      starts.begin() + static_cast<long>(hi));
            Tensor3 batch = slice_batch(train_data, bids, bstarts, cfg.seq_len);
            ad::Graph g;
            auto leaves = models::make_leaves(g, state);
            auto loss = batch_loss_graph(g, leaves, state, batch, plan, val_opts, cfg);
            pass.loss += loss.total.value()(0, 0) * static_cast<double>(bids.size());
            pass.weight += static_cast<long>(bids.size());
        }
        if (pass.weight > 0) pass.loss /= static_cast<double>(pass.weight);
        return pass;
    };

    for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();
        const double lr = lr_schedule(epoch, cfg, ts.plateau_epoch);

        Rng order_rng(derive_seed(cfg.seed, "batch-order", static_cast<std::uint64_t>(epoch)));
        std::vector<long> epoch_order = train_ids;
        order_rng.shuffle(epoch_order);
        Rng window_rng(derive_seed(cfg.seed, "window-start", static_cast<std::uint64_t>(epoch)));

        double epoch_loss = 0.0, epoch_recon = 0.0, epoch_cont = 0.0, epoch_kl = 0.0;
        long seen = 0;
        int batch_index = 0;
        for (std::size_t at = 0; at < epoch_order.size();
             at += static_cast<std::size_t>(cfg.batch_size), ++batch_index) {
            const std::size_t hi =
                std::min(epoch_order.size(), at + static_cast<std::size_t>(cfg.batch_size));
            std::vector<long> ids(epoch_order.begin() + static_cast<long>(at),
                                  epoch_order.begin() + static_cast<long>(hi));
            std::vector<long> starts(ids.size());
            for (auto& s : starts)
                s = sample_training_window(train_data.time(), cfg.seq_len, window_rng);
            Tensor3 batch = slice_batch(train_data, ids, starts, cfg.seq_len);

            models::ForwardOptions opts;
            const std::uint64_t tick =
                (static_cast<std::uint64_t>(epoch) << 20) + static_cast<std::uint64_t>(batch_index);
            opts.noise_seed = combine_seed(noise_base, tick);
            opts.sample_seed = combine_seed(draw_base, tick);

            ad::Graph g;
            auto leaves = models::make_leaves(g, state);
            auto loss = batch_loss_graph(g, leaves, state, batch, plan, opts, cfg);
            const double total = loss.total.value()(0, 0);
            if (!std::isfinite(total)) {
                std::ostringstream os;
                os << "fit: non-finite loss at epoch " << epoch << ", batch " << batch_index
                   << " (" << theta_stats(loss.forward) << ")";
                throw NonFiniteLossError(os.str());
            }

            g.backward(loss.total.id);
            std::vector<Mat> grads;
            grads.reserve(leaves.size());
            for (auto& leaf : leaves) grads.push_back(leaf.grad());

            // Drop the update if the gradient is NaN/Inf (or its norm
            // overflows); otherwise clip to the configured global norm.
            double grad_sq = 0.0;
            for (const auto& gm : grads) grad_sq += gm.squaredNorm();
            if (!std::isfinite(grad_sq)) {
                ++ts.skipped_batches;
            } else {
                if (cfg.grad_clip_norm > 0.0 && grad_sq > cfg.grad_clip_norm * cfg.grad_clip_norm) {
                    const double scale = cfg.grad_clip_norm / std::sqrt(grad_sq);
                    for (auto& gm : grads) gm *= scale;
                }
                adam.step(param_ptrs, grads, lr);
            }

            const double w = static_cast<double>(ids.size());
            epoch_loss += total * w;
            epoch_recon += loss.reconstruction.value()(0, 0) * w;
            if (loss.continuity.valid()) epoch_cont += loss.continuity.value()(0, 0) * w;
            if (loss.kl.valid()) epoch_kl += loss.kl.value()(0, 0) * w;
            seen += static_cast<long>(ids.size());
        }
        epoch_loss /= static_cast<double>(seen);
        epoch_recon /= static_cast<double>(seen);
        epoch_cont /= static_cast<double>(seen);
        epoch_kl /= static_cast<double>(seen);

        // Hold-out validation; with no hold-out the training loss stands in.
        double val_loss = epoch_loss;
        if (!val_ids.empty()) val_loss = eval_split(val_ids, val_starts).loss;

        ts.epoch = epoch + 1;
        ts.lr_history.push_back(lr);
        ts.train_loss_history.push_back(epoch_loss);
        ts.val_loss_history.push_back(val_loss);
        if (val_loss < ts.best_val) {
            ts.best_val = val_loss;
            ts.best_epoch = epoch;
            ts.epochs_since_improvement = 0;
            best_state = state;
        } else {
            ++ts.epochs_since_improvement;
        }
        if (ts.plateau_epoch < 0 && epoch + 1 >= cfg.warmup_epochs &&
            ts.epochs_since_improvement >= cfg.plateau_patience)
            ts.plateau_epoch = epoch + 1;

        if (log) {
            const double seconds =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            nlohmann::json rec{{"epoch", epoch},
                               {"lr", lr},
                               {"train_loss", epoch_loss},
                               {"val_loss", val_loss},
                               {"reconstruction", epoch_recon},
                               {"continuity", epoch_cont},
                               {"kl", epoch_kl},
                               {"best_val", ts.best_val},
                               {"skipped_batches", ts.skipped_batches},
                               {"seconds", seconds}};
            log << rec.dump() << "\n";
            log.flush();
        }

        if (cfg.early_stop_patience > 0 && ts.epochs_since_improvement >= cfg.early_stop_patience)
            break;
    }

    if (!checkpoint_dir.empty()) {
        nlohmann::json meta;
        meta["best_epoch"] = ts.best_epoch;
        meta["best_val"] = ts.best_val;
        meta["epochs_trained"] = ts.epoch;
        meta["train_config"] = cfg;
        models::save_checkpoint(best_state, checkpoint_dir, meta);
    }
    return FitResult{std::move(best_state), std::move(ts)};
}

}  // namespace goku::train
