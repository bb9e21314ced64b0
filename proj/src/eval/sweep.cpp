#include "goku/eval/sweep.hpp"

#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "goku/core/container.hpp"
#include "goku/core/errors.hpp"
#include "goku/core/rng.hpp"
#include "goku/train/trainer.hpp"

namespace fs = std::filesystem;

namespace goku::eval {

std::string sweep_param_name(SweepParam p) {
    switch (p) {
        case SweepParam::train_size: return "train_size";
        case SweepParam::continuity_coeff: return "continuity_coeff";
        case SweepParam::window_len: return "window_len";
        case SweepParam::model_n_oscillators: return "model_n_oscillators";
    }
    throw InvalidArgument("sweep_param_name: bad enum value");
}

SweepParam sweep_param_from_name(const std::string& name) {
    if (name == "train_size") return SweepParam::train_size;
    if (name == "continuity_coeff") return SweepParam::continuity_coeff;
    if (name == "window_len") return SweepParam::window_len;
    if (name == "model_n_oscillators") return SweepParam::model_n_oscillators;
    throw InvalidArgument("unknown sweep parameter '" + name + "'");
}

void SweepSpec::validate() const {
    if (values.empty()) throw InvalidArgument("SweepSpec: empty value list");
    if (seeds.empty()) throw InvalidArgument("SweepSpec: empty seed list");
}

void to_json(nlohmann::json& j, const SweepSpec& s) {
    j = nlohmann::json{
        {"param", sweep_param_name(s.param)}, {"values", s.values}, {"seeds", s.seeds}};
}

void from_json(const nlohmann::json& j, SweepSpec& s) {
    static const std::vector<std::string> known = {"param", "values", "seeds"};
    for (const auto& it : j.items())
        if (std::find(known.begin(), known.end(), it.key()) == known.end())
            throw InvalidArgument("SweepSpec: unknown key \"" + it.key() + "\"");
    if (j.contains("param")) s.param = sweep_param_from_name(j.at("param").get<std::string>());
    if (j.contains("values")) s.values = j.at("values").get<std::vector<double>>();
    if (j.contains("seeds")) s.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    s.validate();
}

void to_json(nlohmann::json& j, const ExperimentConfig& c) {
    j = nlohmann::json{
        {"dataset", c.dataset}, {"model", c.model}, {"train", c.train}, {"eval", c.eval}};
}

void from_json(const nlohmann::json& j, ExperimentConfig& c) {
    static const std::vector<std::string> known = {"dataset", "model", "train", "eval"};
    for (const auto& it : j.items())
        if (std::find(known.begin(), known.end(), it.key()) == known.end())
            throw InvalidArgument("ExperimentConfig: unknown key \"" + it.key() + "\"");
    if (j.contains("dataset")) c.dataset = j.at("dataset").get<data::SyntheticDatasetSpec>();
    if (j.contains("model")) c.model = j.at("model").get<models::ModelSpec>();
    if (j.contains("train")) c.train = j.at("train").get<train::TrainConfig>();
    if (j.contains("eval")) c.eval = j.at("eval").get<EvalOptions>();
}

std::string SweepCell::dir_name() const {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%g", value);
    return sweep_param_name(param) + "-" + buf + "-seed-" + std::to_string(seed);
}

std::vector<SweepCell> sweep_cells(const SweepSpec& spec) {
    spec.validate();
    std::vector<SweepCell> cells;
    cells.reserve(spec.values.size() * spec.seeds.size());
    for (double v : spec.values)
        for (std::uint64_t s : spec.seeds) cells.push_back({spec.param, v, s});
    return cells;
}

namespace {

long integral_value(double v, const char* what) {
    if (!(std::floor(v) == v))
        throw InvalidArgument(std::string(what) + " must be an integer, got " +
                              std::to_string(v));
    return static_cast<long>(v);
}

}  // namespace

void apply_master_seed(ExperimentConfig& cfg, std::uint64_t seed) {
    cfg.dataset.master_seed = derive_seed(seed, "dataset");
    cfg.train.seed = seed;
    cfg.eval.eval_seed = derive_seed(seed, "eval");
    cfg.eval.seq_len = cfg.train.seq_len;
    cfg.eval.window_len = cfg.train.window_len;
}

void resolve_model_dims(models::ModelSpec& model, const data::SyntheticDatasetSpec& dataset) {
    model.input_dim = dataset.output_dim;
    if (model.de_state_dim == 0) model.de_state_dim = 2 * dataset.n_oscillators;
    if (model.has_theta_path() && model.de_param_ranges.empty())
        model.de_param_ranges = models::sl_param_ranges(model.de_state_dim / 2);
    if (model.variant == models::Variant::latent_ode_baseline && model.node_hidden_dim == 0)
        model.node_hidden_dim = model.latent_out_hidden;
}

models::ModelState build_model(const models::ModelSpec& spec, std::uint64_t seed) {
    models::ModelSpec resolved = spec;
    if (spec.baseline_size_target)
        resolved = models::match_baseline_size(spec, *spec.baseline_size_target);
    return models::init_model(resolved, seed);
}

ExperimentConfig cell_config(const ExperimentConfig& base, const SweepCell& cell) {
    ExperimentConfig cfg = base;
    switch (cell.param) {
        case SweepParam::train_size: {
            const long v = integral_value(cell.value, "train_size");
            if (v < 1) throw InvalidArgument("train_size must be positive");
            cfg.dataset.n_train = static_cast<int>(v);
            break;
        }
        case SweepParam::continuity_coeff:
            if (cell.value < 0.0) throw InvalidArgument("continuity_coeff must be >= 0");
            cfg.train.continuity_coeff = cell.value;
            break;
        case SweepParam::window_len: {
            const long v = integral_value(cell.value, "window_len");
            cfg.train.window_len = static_cast<int>(v);
            break;
        }
        case SweepParam::model_n_oscillators: {
            const long v = integral_value(cell.value, "model_n_oscillators");
            if (v < 1) throw InvalidArgument("model_n_oscillators must be positive");
            cfg.model.de_state_dim = static_cast<int>(2 * v);
            if (cfg.model.has_theta_path())
                cfg.model.de_param_ranges = models::sl_param_ranges(static_cast<int>(v));
            break;
        }
    }
    resolve_model_dims(cfg.model, cfg.dataset);
    apply_master_seed(cfg, cell.seed);
    return cfg;
}

fs::path cached_dataset_dir(const data::SyntheticDatasetSpec& spec, const fs::path& cache_root) {
    nlohmann::json j = spec;
    const std::string dump = j.dump();
    const std::uint64_t key = io::fnv1a(dump.data(), dump.size());
    char buf[24];
    std::snprintf(buf, sizeof(buf), "ds-%016llx", static_cast<unsigned long long>(key));
    return cache_root / buf;
}

data::Dataset cached_dataset(const data::SyntheticDatasetSpec& spec, const fs::path& cache_root) {
    const fs::path dir = cached_dataset_dir(spec, cache_root);
    if (!fs::exists(dir / "manifest.json")) {
        data::Dataset ds = data::build_dataset(spec);
        fs::create_directories(cache_root);
        const fs::path tmp = dir.string() + ".tmp-" + std::to_string(::getpid());
        data::save_dataset(ds, tmp);
        std::error_code ec;
        fs::rename(tmp, dir, ec);
        if (ec) fs::remove_all(tmp);  // lost the race; the winner's copy is used
    }
    return data::load_dataset(dir);
}

CellResult run_sweep_cell(const SweepCell& cell, const ExperimentConfig& base,
                          const fs::path& out_dir, const fs::path& dataset_cache) {
    const fs::path cell_dir = out_dir / "cells" / cell.dir_name();
    fs::create_directories(cell_dir);
    const fs::path rows_path = cell_dir / "rows.json";
    const fs::path fail_path = cell_dir / "failed.json";

    CellResult result;
    if (fs::exists(rows_path)) {
        const auto j = io::read_json(rows_path);
        result.rows = j.get<std::vector<MetricRow>>();
        return result;
    }
    fs::remove(fail_path);

    try {
        const ExperimentConfig cfg = cell_config(base, cell);
        cfg.dataset.validate();
        cfg.model.validate();
        cfg.train.validate();
        cfg.eval.validate();

        io::write_json(cell_dir / "config.json", nlohmann::json(cfg));
        const fs::path cache = dataset_cache.empty() ? out_dir / "datasets" : dataset_cache;
        data::Dataset ds = cached_dataset(cfg.dataset, cache);

        auto init = build_model(cfg.model, cell.seed);
        auto fitres = train::fit(init, ds.train.data, cfg.train,
                                 (cell_dir / "checkpoint").string(),
                                 (cell_dir / "train_log.jsonl").string());

        auto rows = evaluate(fitres.best_state, ds.test.data, cfg.eval);
        for (auto& r : rows) {
            r.seed = cell.seed;
            r.swept = sweep_param_name(cell.param);
            r.swept_value = cell.value;
        }
        MetricsReport samples;
        samples.rows = rows;
        emit_report(samples, cell_dir / "samples.tsv");
        result.rows = fold_sample_median(rows);
        result.trained = true;

        const fs::path tmp = rows_path.string() + ".tmp";
        io::write_json(tmp, nlohmann::json(result.rows));
        fs::rename(tmp, rows_path);
    } catch (const std::exception& e) {
        result.rows.clear();
        result.trained = false;
        result.error = e.what();
        io::write_json(fail_path, nlohmann::json{{"error", result.error}});
    }
    return result;
}

MetricsReport collect_sweep(const SweepSpec& spec, const ExperimentConfig& base,
                            const fs::path& out_dir) {
    spec.validate();
    MetricsReport report;
    report.metadata["swept"] = sweep_param_name(spec.param);
    report.metadata["values"] = spec.values;
    report.metadata["seeds"] = spec.seeds;
    report.metadata["norm"] = nrmse_norm_name(base.eval.norm);
    auto failures = nlohmann::json::array();
    for (const auto& cell : sweep_cells(spec)) {
        const fs::path cell_dir = out_dir / "cells" / cell.dir_name();
        const fs::path rows_path = cell_dir / "rows.json";
        const fs::path fail_path = cell_dir / "failed.json";
        if (fs::exists(rows_path)) {
            const auto rows = io::read_json(rows_path).get<std::vector<MetricRow>>();
            report.rows.insert(report.rows.end(), rows.begin(), rows.end());
        } else if (fs::exists(fail_path)) {
            failures.push_back({{"cell", cell.dir_name()},
                                {"error", io::read_json(fail_path).value("error", "")}});
        } else {
            failures.push_back({{"cell", cell.dir_name()}, {"error", "cell never completed"}});
        }
    }
    report.metadata["failures"] = failures;
    return report;
}

MetricsReport finalize_sweep(const SweepSpec& spec, const ExperimentConfig& base,
                             const fs::path& out_dir, int trained_cells) {
    MetricsReport report = collect_sweep(spec, base, out_dir);
    report.metadata["trained_cells"] = trained_cells;
    io::write_json(out_dir / "report_meta.json", report.metadata);
    if (!report.rows.empty()) {
        emit_report(report, out_dir / "report.tsv");
        emit_aggregate_report(aggregate(report), out_dir / "aggregate.tsv");
    }
    return report;
}

MetricsReport run_sweep(const SweepSpec& spec, const ExperimentConfig& base,
                        const fs::path& out_dir, const fs::path& dataset_cache) {
    spec.validate();
    fs::create_directories(out_dir);
    int trained = 0;
    for (const auto& cell : sweep_cells(spec)) {
        const auto res = run_sweep_cell(cell, base, out_dir, dataset_cache);
        if (res.trained) ++trained;
    }
    return finalize_sweep(spec, base, out_dir, trained);
}

}  // namespace goku::eval
