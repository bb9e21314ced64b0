#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "goku/eval/sweep.hpp"

namespace goku::cli {

// One hierarchical document drives every command. Each section mirrors the
// matching config struct and may be omitted to take the defaults; unknown
// keys are rejected at every level. The master seed fans out to the dataset,
// initialization, batching, and evaluation streams via labeled sub-streams.
struct RunConfig {
    std::uint64_t seed = 0;
    eval::ExperimentConfig experiment;
    eval::SweepSpec sweep;
    bool has_sweep = false;     // whether the document carried a sweep section
    std::string data_root;      // dataset cache root; GOKU_DATA_ROOT when empty
};

void to_json(nlohmann::json& j, const RunConfig& c);
void from_json(const nlohmann::json& j, RunConfig& c);

RunConfig load_run_config(const std::filesystem::path& file);

// Cache root resolution: explicit config value, then the GOKU_DATA_ROOT
// environment variable, then empty (callers fall back to their output dir).
std::filesystem::path resolve_data_root(const RunConfig& cfg);

// FNV-1a over the file bytes, rendered as 16 hex digits.
std::string content_hash(const std::filesystem::path& file);

// Writes the resolved-config echo (run_config.json, skipped when null) and
// a name -> content hash map of the inputs (inputs.json) into out_dir.
void write_provenance(const std::filesystem::path& out_dir, const nlohmann::json& resolved,
                      const std::vector<std::pair<std::string, std::filesystem::path>>& inputs);

struct GenerateDataArgs {
    std::string config;
    std::string out;
    std::optional<std::uint64_t> seed;  // overrides the config's master seed
};

struct TrainArgs {
    std::string config;
    std::string data;
    std::string out;
    std::optional<std::uint64_t> seed;
};

struct EvaluateArgs {
    std::string checkpoint;
    std::string data;
    std::string out;
    int horizon = -1;  // < 0 picks the default for the data's time resolution
};

struct SweepArgs {
    std::string config;
    std::string out;
    std::string param;                  // overrides the config's sweep section
    std::vector<double> values;
    std::vector<std::uint64_t> seeds;
    int jobs = 1;                       // > 1 forks worker processes
};

struct PlotArgs {
    std::string report;
    std::string out;
};

// Commands throw on failure; run_guarded maps exceptions to the exit-code
// contract (0 success, 1 invalid input or config, 2 runtime failure) and
// prints the message to stderr.
void cmd_generate_data(const GenerateDataArgs& args);
void cmd_train(const TrainArgs& args);
void cmd_evaluate(const EvaluateArgs& args);
void cmd_sweep(const SweepArgs& args);
void cmd_plot(const PlotArgs& args);

int run_guarded(const std::function<void()>& body);

}  // namespace goku::cli
