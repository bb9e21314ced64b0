#include <atomic>
#include <cstdlib>
#include <cstring>
#include <vector>

#include "doctest.h"
#include "goku/ad/ops.hpp"
#include "goku/core/parallel.hpp"
#include "goku/core/rng.hpp"
#include "goku/data/synthetic.hpp"
#include "goku/models/model.hpp"
#include "goku/sde/integrate.hpp"
#include "goku/train/trainer.hpp"
#include "goku/train/window.hpp"

using namespace goku;

namespace {

bool same_bytes(const double* a, const double* b, std::size_t n) {
    return std::memcmp(a, b, n * sizeof(double)) == 0;
}

data::SyntheticDatasetSpec small_spec() {
    data::SyntheticDatasetSpec spec;
    spec.output_dim = 12;
    spec.n_train = 8;
    spec.n_test = 2;
    spec.total_time = 7.0;
    spec.trim_steps = 20;
    spec.master_seed = 1234;
    return spec;
}

}  // namespace

// Must run before anything else touches the switch: the environment variable
// is sampled once, on first use.
TEST_CASE("GOKU_SERIAL=1 starts the process on the serial path") {
    setenv("GOKU_SERIAL", "1", 1);
    CHECK(par::enabled() == false);
    CHECK(par::max_threads() == 1);
    unsetenv("GOKU_SERIAL");
    par::set_enabled(true);
    CHECK(par::enabled() == true);
}

TEST_CASE("parallel_for visits every index exactly once") {
    const std::int64_t n = 1000;
    std::vector<std::atomic<int>> hits(n);
    for (auto& h : hits) h = 0;
    par::parallel_for(n, [&](std::int64_t i) { ++hits[i]; });
    for (std::int64_t i = 0; i < n; ++i) CHECK(hits[i] == 1);

    par::parallel_for(0, [&](std::int64_t) { FAIL("body ran for n = 0"); });
    par::parallel_for(-3, [&](std::int64_t) { FAIL("body ran for n < 0"); });
}

TEST_CASE("the switch round-trips and caps the thread count") {
    par::set_enabled(false);
    CHECK(par::enabled() == false);
    CHECK(par::max_threads() == 1);
    par::set_enabled(true);
    CHECK(par::enabled() == true);
    CHECK(par::max_threads() >= 1);
}

TEST_CASE("dataset generation is bit-identical on both paths") {
    const auto spec = small_spec();
    par::set_enabled(false);
    data::Dataset serial = data::build_dataset(spec);
    par::set_enabled(true);
    data::Dataset parallel = data::build_dataset(spec);

    REQUIRE(serial.train.data.size() == parallel.train.data.size());
    REQUIRE(serial.test.data.size() == parallel.test.data.size());
    CHECK(same_bytes(serial.train.data.data(), parallel.train.data.data(),
                     (std::size_t)serial.train.data.size()));
    CHECK(same_bytes(serial.test.data.data(), parallel.test.data.data(),
                     (std::size_t)serial.test.data.size()));
}

TEST_CASE("batch integration is bit-identical on both paths") {
    const auto spec = small_spec();
    std::vector<Vec> z0;
    std::vector<sde::OscillatorNetworkParams> params;
    for (int b = 0; b < 24; ++b) {
        data::SampleDraw draw = data::sample_generator_params(spec, b);
        params.push_back(draw.params);
        z0.push_back(draw.init_state);
    }
    sde::SolverConfig cfg;
    cfg.noise_seed = 5;

    par::set_enabled(false);
    auto serial = sde::integrate_batch(z0, params, {0.0, 5.0}, cfg);
    par::set_enabled(true);
    auto parallel = sde::integrate_batch(z0, params, {0.0, 5.0}, cfg);

    REQUIRE(serial.size() == parallel.size());
    for (std::size_t i = 0; i < serial.size(); ++i) {
        REQUIRE(serial[i].states.size() == parallel[i].states.size());
        CHECK(same_bytes(serial[i].states.data(), parallel[i].states.data(),
                         (std::size_t)serial[i].states.size()));
    }
}

TEST_CASE("a training step is bit-identical on both paths") {
    models::ModelSpec spec = models::make_goku_spec(models::Variant::goku_attention, 5, 1);
    spec.feature_dim = 6;
    spec.feature_hidden = 7;
    spec.pattern_z0_hidden = 4;
    spec.pattern_theta_hidden = 3;
    spec.latent_out_hidden = 5;
    models::ModelState state = models::init_model(spec, 77);

    Rng rng(derive_seed(77, "batch"));
    Tensor3 batch(4, spec.input_dim, 13);
    for (std::int64_t i = 0; i < batch.size(); ++i) batch.data()[i] = rng.uniform(-1.0, 1.0);

    train::TrainConfig tc;
    tc.seq_len = 13;
    tc.window_len = 7;
    train::WindowPlan plan = train::plan_windows(tc.seq_len, tc.window_len);
    models::ForwardOptions opts;
    opts.noise_seed = 3;

    auto run = [&] {
        ad::Graph g;
        std::vector<ad::Var> leaves = models::make_leaves(g, state);
        train::BatchLoss loss = train::batch_loss_graph(g, leaves, state, batch, plan, opts, tc);
        g.backward(loss.total.id);
        std::vector<double> flat{loss.total.value()(0, 0)};
        for (const ad::Var& v : leaves)
            flat.insert(flat.end(), v.grad().data(), v.grad().data() + v.grad().size());
        return flat;
    };

    par::set_enabled(false);
    std::vector<double> serial = run();
    par::set_enabled(true);
    std::vector<double> parallel = run();

    REQUIRE(serial.size() == parallel.size());
    CHECK(same_bytes(serial.data(), parallel.data(), serial.size()));
}
