#include "goku/cli/commands.hpp"

#include <sys/wait.h>
#include <unistd.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "goku/core/container.hpp"
#include "goku/core/errors.hpp"
#include "goku/core/rng.hpp"
#include "goku/data/synthetic.hpp"
#include "goku/eval/plots.hpp"

namespace fs = std::filesystem;

namespace goku::cli {

void to_json(nlohmann::json& j, const RunConfig& c) {
    j = nlohmann::json{{"seed", c.seed},
                       {"dataset", c.experiment.dataset},
                       {"model", c.experiment.model},
                       {"train", c.experiment.train},
                       {"eval", c.experiment.eval},
                       {"data_root", c.data_root}};
    if (c.has_sweep) j["sweep"] = c.sweep;
}

void from_json(const nlohmann::json& j, RunConfig& c) {
    static const char* known[] = {"seed", "dataset", "model", "train",
                                  "eval", "sweep", "data_root"};
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool ok = false;
        for (const char* k : known) ok = ok || it.key() == k;
        if (!ok) throw InvalidArgument("unknown config key: " + it.key());
    }
    c = RunConfig{};
    if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("dataset")) j.at("dataset").get_to(c.experiment.dataset);
    if (j.contains("model")) j.at("model").get_to(c.experiment.model);
    if (j.contains("train")) j.at("train").get_to(c.experiment.train);
    if (j.contains("eval")) j.at("eval").get_to(c.experiment.eval);
    if (j.contains("sweep")) {
        j.at("sweep").get_to(c.sweep);
        c.has_sweep = true;
    }
    if (j.contains("data_root")) c.data_root = j.at("data_root").get<std::string>();
}

RunConfig load_run_config(const fs::path& file) {
    std::ifstream in(file);
    if (!in) throw InvalidArgument("cannot open config file: " + file.string());
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        // the library message already carries the position
        throw ParseError("config " + file.string() + ": " + e.what(), 0, 0);
    }
    return j.get<RunConfig>();
}

fs::path resolve_data_root(const RunConfig& cfg) {
    if (!cfg.data_root.empty()) return cfg.data_root;
    if (const char* env = std::getenv("GOKU_DATA_ROOT"); env && *env) return env;
    return {};
}

std::string content_hash(const fs::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw InvalidArgument("cannot open input for hashing: " + file.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    const std::string bytes = buf.str();
    char hex[17];
    std::snprintf(hex, sizeof hex, "%016llx",
                  (unsigned long long)io::fnv1a(bytes.data(), bytes.size()));
    return hex;
}

void write_provenance(const fs::path& out_dir, const nlohmann::json& resolved,
                      const std::vector<std::pair<std::string, fs::path>>& inputs) {
    fs::create_directories(out_dir);
    if (!resolved.is_null()) io::write_json(out_dir / "run_config.json", resolved);
    nlohmann::json hashes = nlohmann::json::object();
    for (const auto& [name, path] : inputs) hashes[name] = content_hash(path);
    io::write_json(out_dir / "inputs.json", hashes);
}

void cmd_generate_data(const GenerateDataArgs& args) {
    RunConfig rc = load_run_config(args.config);
    if (args.seed) rc.seed = *args.seed;
    eval::apply_master_seed(rc.experiment, rc.seed);
    rc.experiment.dataset.validate();
    data::Dataset ds = data::build_dataset(rc.experiment.dataset);
    data::save_dataset(ds, args.out);
    write_provenance(args.out, nlohmann::json(rc), {{"config", args.config}});
}

void cmd_train(const TrainArgs& args) {
    RunConfig rc = load_run_config(args.config);
    if (args.seed) rc.seed = *args.seed;
    eval::apply_master_seed(rc.experiment, rc.seed);

    data::Dataset ds = data::load_dataset(args.data);
    // The stored spec is the truth about the data; echo it and resolve the
    // model geometry against it rather than the config's dataset section.
    rc.experiment.dataset = ds.manifest.at("spec").get<data::SyntheticDatasetSpec>();
    eval::resolve_model_dims(rc.experiment.model, rc.experiment.dataset);
    rc.experiment.model.validate();
    rc.experiment.train.validate();

    fs::create_directories(args.out);
    write_provenance(args.out, nlohmann::json(rc),
                     {{"config", args.config},
                      {"data_manifest", fs::path(args.data) / "manifest.json"}});

    models::ModelState init = eval::build_model(rc.experiment.model, rc.seed);
    const fs::path log = fs::path(args.out) / "train_log.jsonl";
    fs::remove(log);  // the trainer appends; a re-run should reproduce, not accumulate
    train::fit(init, ds.train.data, rc.experiment.train,
               (fs::path(args.out) / "checkpoint").string(), log.string());
}

void cmd_evaluate(const EvaluateArgs& args) {
    models::Checkpoint cp = models::load_checkpoint(args.checkpoint);
    data::Dataset ds = data::load_dataset(args.data);

    train::TrainConfig tc;
    if (cp.metadata.contains("train_config"))
        cp.metadata.at("train_config").get_to(tc);

    eval::EvalOptions opts;
    opts.seq_len = tc.seq_len;
    opts.window_len = tc.window_len;
    opts.eval_seed = derive_seed(tc.seed, "eval");
    opts.horizon = args.horizon >= 0 ? args.horizon : eval::default_horizon(ds.test.dt_seconds);
    opts.validate();

    eval::MetricsReport report;
    report.rows = eval::evaluate(cp.state, ds.test.data, opts);
    fs::create_directories(args.out);
    eval::emit_report(report, fs::path(args.out) / "report.tsv");
    eval::emit_aggregate_report(eval::aggregate(report), fs::path(args.out) / "aggregate.tsv");

    RunConfig echo;
    echo.seed = tc.seed;
    echo.experiment.dataset = ds.manifest.at("spec").get<data::SyntheticDatasetSpec>();
    echo.experiment.model = cp.state.spec;
    echo.experiment.train = tc;
    echo.experiment.eval = opts;
    write_provenance(args.out, nlohmann::json(echo),
                     {{"checkpoint_manifest", fs::path(args.checkpoint) / "manifest.json"},
                      {"data_manifest", fs::path(args.data) / "manifest.json"}});
}

namespace {

int count_cell_markers(const fs::path& out_dir, const std::vector<eval::SweepCell>& cells) {
    int n = 0;
    for (const auto& cell : cells)
        if (fs::exists(out_dir / "cells" / cell.dir_name() / "rows.json")) ++n;
    return n;
}

void run_sweep_parallel(const eval::SweepSpec& spec, const eval::ExperimentConfig& base,
                        const fs::path& out_dir, const fs::path& cache, int jobs) {
    const auto cells = eval::sweep_cells(spec);
    if (jobs > (int)cells.size()) jobs = (int)cells.size();
    const int before = count_cell_markers(out_dir, cells);

    // Workers split the cell list round-robin. Forking happens before any
    // OpenMP region, so the children start with a clean thread pool.
    std::vector<pid_t> kids;
    for (int w = 0; w < jobs; ++w) {
        pid_t pid = fork();
        if (pid < 0) throw std::runtime_error("fork failed");
        if (pid == 0) {
            int code = 0;
            try {
                for (std::size_t i = w; i < cells.size(); i += jobs)
                    eval::run_sweep_cell(cells[i], base, out_dir, cache);
            } catch (const std::exception& e) {
                std::fprintf(stderr, "sweep worker %d: %s\n", w, e.what());
                code = 2;
            }
            _exit(code);
        }
        kids.push_back(pid);
    }

    bool worker_failed = false;
    for (pid_t pid : kids) {
        int status = 0;
        if (waitpid(pid, &status, 0) < 0 || !WIFEXITED(status) || WEXITSTATUS(status) != 0)
            worker_failed = true;
    }

    const int after = count_cell_markers(out_dir, cells);
    eval::finalize_sweep(spec, base, out_dir, after - before);
    if (worker_failed) throw std::runtime_error("a sweep worker exited abnormally");
}

}  // namespace

void cmd_sweep(const SweepArgs& args) {
    RunConfig rc = load_run_config(args.config);
    if (args.jobs < 1) throw InvalidArgument("--jobs must be at least 1");

    eval::SweepSpec sw;
    if (rc.has_sweep) sw = rc.sweep;
    if (!args.param.empty())
        sw.param = eval::sweep_param_from_name(args.param);
    else if (!rc.has_sweep)
        throw InvalidArgument("config has no sweep section; pass --param/--values/--seeds");
    if (!args.values.empty()) sw.values = args.values;
    if (!args.seeds.empty()) sw.seeds = args.seeds;
    sw.validate();

    rc.sweep = sw;
    rc.has_sweep = true;
    fs::create_directories(args.out);
    write_provenance(args.out, nlohmann::json(rc), {{"config", args.config}});

    const fs::path cache = resolve_data_root(rc);
    if (args.jobs == 1)
        eval::run_sweep(sw, rc.experiment, args.out, cache);
    else
        run_sweep_parallel(sw, rc.experiment, args.out, cache, args.jobs);
}

void cmd_plot(const PlotArgs& args) {
    eval::MetricsReport report = eval::load_report(args.report);
    fs::create_directories(args.out);
    eval::emit_plots(report, args.out);
    write_provenance(args.out, nlohmann::json(), {{"report", args.report}});
}

int run_guarded(const std::function<void()>& body) {
    try {
        body();
        return 0;
    } catch (const InvalidArgument& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const ParseError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const CorruptDataset& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const DegenerateInput& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const NoSolutionError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const nlohmann::json::exception& e) {
        // malformed or mistyped config fields
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
}

}  // namespace goku::cli
