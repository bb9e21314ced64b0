#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

#include "goku/data/synthetic.hpp"
#include "goku/eval/metrics.hpp"
#include "goku/models/model.hpp"
#include "goku/train/trainer.hpp"

namespace goku::eval {

enum class SweepParam { train_size, continuity_coeff, window_len, model_n_oscillators };

std::string sweep_param_name(SweepParam p);
SweepParam sweep_param_from_name(const std::string& name);

struct SweepSpec {
    SweepParam param = SweepParam::train_size;
    std::vector<double> values;
    std::vector<std::uint64_t> seeds;

    void validate() const;  // non-empty values and seeds
};

void to_json(nlohmann::json& j, const SweepSpec& s);
void from_json(const nlohmann::json& j, SweepSpec& s);

// Everything one training-plus-evaluation run needs. The model's input_dim
// and the eval window geometry are resolved from the dataset and training
// config when a cell runs, so they may be left at their defaults here.
struct ExperimentConfig {
    data::SyntheticDatasetSpec dataset;
    models::ModelSpec model;
    train::TrainConfig train;
    EvalOptions eval;
};

void to_json(nlohmann::json& j, const ExperimentConfig& c);
void from_json(const nlohmann::json& j, ExperimentConfig& c);

// Fans one master seed out to the dataset, training, and evaluation streams
// via labeled sub-streams, and mirrors the training window geometry into the
// evaluation options.
void apply_master_seed(ExperimentConfig& cfg, std::uint64_t seed);

// Fills model dimensions that default to the dataset geometry: the input
// width always tracks the projection dim; a zero DE state dim becomes the
// generator's 2N (with the oscillator parameter boxes for the GOKU
// variants); the latent ODE field width falls back to the reconstructor
// width.
void resolve_model_dims(models::ModelSpec& model, const data::SyntheticDatasetSpec& dataset);

// Applies baseline size matching when requested, then draws seeded initial
// weights.
models::ModelState build_model(const models::ModelSpec& spec, std::uint64_t seed);

struct SweepCell {
    SweepParam param = SweepParam::train_size;
    double value = 0.0;
    std::uint64_t seed = 0;

    std::string dir_name() const;  // e.g. "train_size-75-seed-1"
};

// The cross product, values outer, seeds inner.
std::vector<SweepCell> sweep_cells(const SweepSpec& spec);

// Applies the swept value to the right config field (integer-valued
// parameters reject fractional values) and fans the cell seed out to the
// dataset, initialization/training, and evaluation streams.
ExperimentConfig cell_config(const ExperimentConfig& base, const SweepCell& cell);

// Datasets are cached under cache_root keyed by a content hash of the spec,
// and always read back from the cache so every consumer sees the stored
// float32 precision. Safe against concurrent builders: the build lands in a
// temporary directory and is renamed into place.
std::filesystem::path cached_dataset_dir(const data::SyntheticDatasetSpec& spec,
                                         const std::filesystem::path& cache_root);
data::Dataset cached_dataset(const data::SyntheticDatasetSpec& spec,
                             const std::filesystem::path& cache_root);

struct CellResult {
    std::vector<MetricRow> rows;  // per-task medians, tagged with seed and swept value
    bool trained = false;         // false when the completion marker was reused
    std::string error;            // non-empty when the cell failed
};

// Trains and evaluates one cell under out_dir/cells/<name>/, writing the
// per-sample table, the checkpoint, the training log, and finally rows.json
// as the completion marker. A finished cell is never retrained; a failed
// cell records failed.json and is retried on the next run. Datasets are
// cached under dataset_cache (out_dir/datasets when empty).
CellResult run_sweep_cell(const SweepCell& cell, const ExperimentConfig& base,
                          const std::filesystem::path& out_dir,
                          const std::filesystem::path& dataset_cache = {});

// Reads completed cells into one report; missing or failed cells land in
// metadata["failures"] and the sweep result stays usable.
MetricsReport collect_sweep(const SweepSpec& spec, const ExperimentConfig& base,
                            const std::filesystem::path& out_dir);

// Assembly shared by the serial driver and parallel workers: collects,
// stamps the trained-cell count, and writes report.tsv, aggregate.tsv and
// report_meta.json under out_dir.
MetricsReport finalize_sweep(const SweepSpec& spec, const ExperimentConfig& base,
                             const std::filesystem::path& out_dir, int trained_cells);

// Serial driver: every cell in order, then assembly. A completed sweep
// re-runs as a no-op (trained_cells stays 0 and the report bytes repeat).
MetricsReport run_sweep(const SweepSpec& spec, const ExperimentConfig& base,
                        const std::filesystem::path& out_dir,
                        const std::filesystem::path& dataset_cache = {});

}  // namespace goku::eval
