#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "goku/cli/commands.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Latent differential-equation generative models: dataset generation, "
                 "training, evaluation, parameter sweeps, and figures."};
    app.require_subcommand(1);

    goku::cli::GenerateDataArgs gen;
    auto* cgen = app.add_subcommand("generate-data", "Build a synthetic dataset directory");
    cgen->add_option("--config", gen.config, "Run config (JSON)")->required();
    cgen->add_option("--out", gen.out, "Output dataset directory")->required();
    cgen->add_option("--seed", gen.seed, "Master seed override");

    goku::cli::TrainArgs tr;
    auto* ctr = app.add_subcommand("train", "Train a model on a dataset directory");
    ctr->add_option("--config", tr.config, "Run config (JSON)")->required();
    ctr->add_option("--data", tr.data, "Dataset directory")->required();
    ctr->add_option("--out", tr.out, "Output directory (checkpoint + logs)")->required();
    ctr->add_option("--seed", tr.seed, "Master seed override");

    goku::cli::EvaluateArgs ev;
    auto* cev = app.add_subcommand("evaluate", "Score a checkpoint on a dataset's test split");
    cev->add_option("--checkpoint", ev.checkpoint, "Checkpoint directory")->required();
    cev->add_option("--data", ev.data, "Dataset directory")->required();
    cev->add_option("--horizon", ev.horizon, "Forecast steps (default: by time resolution)");
    cev->add_option("--out", ev.out, "Output directory (report + aggregate)")->required();

    goku::cli::SweepArgs sw;
    auto* csw = app.add_subcommand("sweep", "Train/evaluate a parameter grid across seeds");
    csw->add_option("--config", sw.config, "Run config (JSON)")->required();
    csw->add_option("--param", sw.param,
                    "Swept parameter (train_size, continuity_coeff, window_len, "
                    "model_n_oscillators)");
    csw->add_option("--values", sw.values, "Swept values")->delimiter(',');
    csw->add_option("--seeds", sw.seeds, "Seed list")->delimiter(',');
    csw->add_option("--out", sw.out, "Sweep output directory")->required();
    csw->add_option("--jobs", sw.jobs, "Parallel worker processes");

    goku::cli::PlotArgs pl;
    auto* cpl = app.add_subcommand("plot", "Render figures from a report table");
    cpl->add_option("--report", pl.report, "Report file (TSV)")->required();
    cpl->add_option("--out", pl.out, "Figure output directory")->required();

    int rcode = 0;
    cgen->callback([&] { rcode = goku::cli::run_guarded([&] { cmd_generate_data(gen); }); });
    ctr->callback([&] { rcode = goku::cli::run_guarded([&] { cmd_train(tr); }); });
    cev->callback([&] { rcode = goku::cli::run_guarded([&] { cmd_evaluate(ev); }); });
    csw->callback([&] { rcode = goku::cli::run_guarded([&] { cmd_sweep(sw); }); });
    cpl->callback([&] { rcode = goku::cli::run_guarded([&] { cmd_plot(pl); }); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }
    return rcode;
}
