// Timing harness for the OpenMP kernels against the serial reference path.
// Each workload runs under both switches and the outputs are checked
// bit-identical before the speedup is reported.

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

#include "goku/ad/ops.hpp"
#include "goku/core/container.hpp"
#include "goku/core/parallel.hpp"
#include "goku/core/rng.hpp"
#include "goku/data/synthetic.hpp"
#include "goku/models/model.hpp"
#include "goku/sde/integrate.hpp"
#include "goku/train/trainer.hpp"
#include "goku/train/window.hpp"

using namespace goku;

namespace {

std::uint64_t hash_doubles(const double* p, std::size_t n,
                           std::uint64_t h = 0xcbf29ce484222325ULL) {
    return io::fnv1a(p, n * sizeof(double), h);
}

std::uint64_t bench_dataset() {
    data::SyntheticDatasetSpec spec;
    spec.n_oscillators = 3;
    spec.output_dim = 64;
    spec.n_train = 32;
    spec.n_test = 4;
    spec.total_time = 10.0;  // 100 saved points after the transient trim
    spec.master_seed = 99;
    data::Dataset ds = data::build_dataset(spec);
    std::uint64_t h = hash_doubles(ds.train.data.data(), (std::size_t)ds.train.data.size());
    return hash_doubles(ds.test.data.data(), (std::size_t)ds.test.data.size(), h);
}

std::uint64_t bench_sde_batch() {
    const int batch = 192;
    data::SyntheticDatasetSpec spec;
    spec.master_seed = 4242;
    std::vector<Vec> z0(batch);
    std::vector<sde::OscillatorNetworkParams> params(batch);
    for (int b = 0; b < batch; ++b) {
        data::SampleDraw draw = data::sample_generator_params(spec, b);
        params[b] = draw.params;
        z0[b] = draw.init_state;
    }
    sde::SolverConfig cfg;
    cfg.noise_seed = 7;
    auto trajs = sde::integrate_batch(z0, params, {0.0, 25.0}, cfg);
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const auto& t : trajs) h = hash_doubles(t.states.data(), (std::size_t)t.states.size(), h);
    return h;
}

std::uint64_t bench_train_step() {
    models::ModelSpec spec = models::make_goku_spec(models::Variant::goku_attention, 32, 2);
    models::ModelState state = models::init_model(spec, 7);

    const int batch = 16;
    const int seq = 46;
    Rng rng(31337);
    Tensor3 data(batch, spec.input_dim, seq);
    for (std::int64_t i = 0; i < data.size(); ++i) data.data()[i] = 0.5 * rng.normal();

    train::TrainConfig tc;
    train::WindowPlan plan = train::plan_windows(tc.seq_len, tc.window_len);
    models::ForwardOptions opts;
    opts.noise_seed = 11;

    ad::Graph g;
    std::vector<ad::Var> leaves = models::make_leaves(g, state);
    train::BatchLoss loss = train::batch_loss_graph(g, leaves, state, data, plan, opts, tc);
    g.backward(loss.total.id);

    std::uint64_t h = hash_doubles(loss.total.value().data(), 1);
    for (const ad::Var& v : leaves)
        h = hash_doubles(v.grad().data(), (std::size_t)v.grad().size(), h);
    return h;
}

struct Timing {
    double ms = 1e300;
    std::uint64_t hash = 0;
};

template <typename F>
Timing best_of(int repeats, F&& body) {
    Timing t;
    for (int i = 0; i < repeats; ++i) {
        auto t0 = std::chrono::steady_clock::now();
        std::uint64_t h = body();
        auto t1 = std::chrono::steady_clock::now();
        t.ms = std::min(t.ms, std::chrono::duration<double, std::milli>(t1 - t0).count());
        t.hash = h;
    }
    return t;
}

template <typename F>
bool report(const char* name, int repeats, F&& body) {
    par::set_enabled(false);
    Timing serial = best_of(repeats, body);
    par::set_enabled(true);
    Timing parallel = best_of(repeats, body);
    const bool same = serial.hash == parallel.hash;
    std::printf("%-14s %10.1f %10.1f %8.2fx   %s\n", name, serial.ms, parallel.ms,
                serial.ms / parallel.ms, same ? "yes" : "NO");
    std::fflush(stdout);
    return same;
}

}  // namespace

int main(int argc, char** argv) {
    const int repeats = argc > 1 ? std::atoi(argv[1]) : 3;
    if (repeats < 1) {
        std::fprintf(stderr, "usage: %s [repeats]\n", argv[0]);
        return 1;
    }
    std::printf("threads: %d, repeats: %d (best-of timing)\n", par::max_threads(), repeats);
    std::printf("%-14s %10s %10s %9s   %s\n", "workload", "serial ms", "openmp ms", "speedup",
                "identical");
    bool ok = true;
    ok &= report("dataset-build", repeats, bench_dataset);
    ok &= report("sde-batch", repeats, bench_sde_batch);
    ok &= report("train-step", repeats, bench_train_step);
    return ok ? 0 : 1;
}
