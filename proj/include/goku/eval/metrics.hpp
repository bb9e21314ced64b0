#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "goku/core/tensor.hpp"
#include "goku/models/model.hpp"

namespace goku::eval {

// Normalization constant for the error: mean absolute value of the target
// (same scale the training loss divides by) or its population standard
// deviation, selectable for comparison runs.
enum class NrmseNorm { mean_abs, target_std };

std::string nrmse_norm_name(NrmseNorm n);
NrmseNorm nrmse_norm_from_name(const std::string& name);

// Root-mean-square error over all channel-time elements divided by the
// chosen scale of the target. Throws DegenerateInput when that scale is
// zero, InvalidArgument on shape mismatch.
double nrmse(const Mat& pred, const Mat& target, NrmseNorm norm = NrmseNorm::mean_abs);

// Median with the usual even-count convention (mean of the two middle
// values). Throws InvalidArgument on an empty input.
double median(std::vector<double> values);

// One measurement. `sample` >= 0 for per-sample granularity, -1 once the
// median across evaluation samples has been taken. `swept` is empty outside
// sweeps. `seconds` is wall time and excluded from determinism guarantees.
struct MetricRow {
    std::string variant;
    std::uint64_t seed = 0;
    std::string task;  // "reconstruction" or "forecast"
    std::string swept;
    double swept_value = 0.0;
    long sample = -1;
    double nrmse = 0.0;
    double seconds = 0.0;
};

void to_json(nlohmann::json& j, const MetricRow& r);
void from_json(const nlohmann::json& j, MetricRow& r);

struct MetricsReport {
    std::vector<MetricRow> rows;
    nlohmann::json metadata = nlohmann::json::object();
};

struct EvalOptions {
    int seq_len = 46;
    int window_len = 10;
    int horizon = 20;
    std::uint64_t eval_seed = 0;
    NrmseNorm norm = NrmseNorm::mean_abs;
    // Number of latent noise realizations; > 1 averages the predictions
    // before scoring. Draw k for sample s uses the stream keyed by
    // (eval_seed, "eval-noise", s, k), so single-draw scores are fixed per
    // (sample, eval seed).
    int noise_draws = 1;
    long max_samples = 0;  // 0 evaluates the whole set

    void validate() const;
};

void to_json(nlohmann::json& j, const EvalOptions& o);
void from_json(const nlohmann::json& j, EvalOptions& o);

// Twelve seconds ahead for three-second-resolution recordings, twenty steps
// otherwise.
int default_horizon(double dt_seconds);

// Scores one checkpointed model on a test set: one reconstruction row per
// sample over the first seq_len frames, and when horizon > 0 one forecast
// row per sample over the immediately following horizon frames. Each sample
// is forwarded on its own with noise and posterior draws keyed by (eval
// seed, sample index). Throws InvalidArgument when samples are shorter than
// seq_len + horizon.
std::vector<MetricRow> evaluate(const models::ModelState& state, const Tensor3& test,
                                const EvalOptions& opts);

// Collapses per-sample rows to one row per (variant, seed, task, swept,
// value) holding the median NRMSE across samples; seconds are summed.
std::vector<MetricRow> fold_sample_median(const std::vector<MetricRow>& rows);

// Median across seeds of the per-seed sample medians, plus the standard
// error across seeds (sample standard deviation / sqrt(n); absent for a
// single seed).
struct AggregateRow {
    std::string variant;
    std::string task;
    std::string swept;
    double swept_value = 0.0;
    int n_seeds = 0;
    double median_nrmse = 0.0;
    std::optional<double> std_error;
};

std::vector<AggregateRow> aggregate(const MetricsReport& report);

// Tab-separated table with a header row; numbers are printed with enough
// digits to round-trip exactly. Throws InvalidArgument on an empty report.
void emit_report(const MetricsReport& report, const std::filesystem::path& file);
MetricsReport load_report(const std::filesystem::path& file);

void emit_aggregate_report(const std::vector<AggregateRow>& rows,
                           const std::filesystem::path& file);

}  // namespace goku::eval
