#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "gradcheck.hpp"
#include "goku/core/errors.hpp"
#include "goku/core/rng.hpp"
#include "goku/models/model.hpp"
#include "goku/train/losses.hpp"
#include "goku/train/optimizer.hpp"
#include "goku/train/trainer.hpp"
#include "goku/train/window.hpp"

using namespace goku;
namespace fs = std::filesystem;

namespace {

models::ModelSpec tiny_spec(models::Variant variant) {
    auto spec = models::make_goku_spec(variant, 3, 1);
    spec.feature_dim = 6;
    spec.feature_hidden = 7;
    spec.pattern_z0_hidden = 4;
    spec.pattern_theta_hidden = 3;
    spec.latent_out_hidden = 5;
    return spec;
}

Tensor3 random_batch(Rng& rng, long B, long D, long T) {
    Tensor3 t(B, D, T);
    for (long b = 0; b < B; ++b)
        for (long d = 0; d < D; ++d)
            for (long k = 0; k < T; ++k) t.at(b, d, k) = rng.uniform(-1.0, 1.0);
    return t;
}

}  // namespace

TEST_CASE("window planning matches the overlap arithmetic") {
    auto p = train::plan_windows(46, 10);
    CHECK(p.n_windows == 5);
    CHECK(p.n_junctions() == 4);
    REQUIRE(p.junction_index_pairs.size() == 4);
    for (int j = 0; j < 4; ++j) {
        CHECK(p.junction_index_pairs[static_cast<std::size_t>(j)].first == 9 * (j + 1));
        CHECK(p.junction_index_pairs[static_cast<std::size_t>(j)].second == 9 * (j + 1));
    }

    auto single = train::plan_windows(10, 10);
    CHECK(single.n_windows == 1);
    CHECK(single.n_junctions() == 0);

    CHECK(train::plan_windows(28, 10).n_windows == 3);
}

TEST_CASE("window planning holds for every valid length pair") {
    for (int win = 2; win <= 12; ++win)
        for (int n = 1; n <= 20; ++n) {
            const int seq = win + (n - 1) * (win - 1);
            auto p = train::plan_windows(seq, win);
            CHECK(p.n_windows == n);
            CHECK(p.seq_len == win + (p.n_windows - 1) * (win - 1));
            CHECK(static_cast<int>(p.junction_index_pairs.size()) == n - 1);
            CHECK(p.start(p.n_windows - 1) + win == seq);
        }
}

TEST_CASE("indivisible window lengths report the nearest valid sizes") {
    try {
        train::plan_windows(47, 10);
        FAIL("expected InvalidArgument");
    } catch (const InvalidArgument& e) {
        const std::string msg = e.what();
        CHECK(msg.find("46") != std::string::npos);
        CHECK(msg.find("55") != std::string::npos);
    }
    try {
        train::plan_windows(12, 10);
        FAIL("expected InvalidArgument");
    } catch (const InvalidArgument& e) {
        const std::string msg = e.what();
        CHECK(msg.find("10") != std::string::npos);
        CHECK(msg.find("19") != std::string::npos);
    }
    CHECK_THROWS_AS(train::plan_windows(9, 10), InvalidArgument);
    CHECK_THROWS_AS(train::plan_windows(5, 1), InvalidArgument);
}

TEST_CASE("reconstruction loss closed forms and oracle") {
    Rng rng(derive_seed(41, "recon"));
    Mat target = testutil::random_mat(rng, 4, 6);
    CHECK(train::reconstruction_loss(target, target) == 0.0);

    Mat ones = Mat::Ones(3, 3), zeros = Mat::Zero(3, 3);
    CHECK(train::reconstruction_loss(zeros, ones) == doctest::Approx(1.0).epsilon(1e-15));

    Mat pred = testutil::random_mat(rng, 4, 6);
    double se = 0.0, sa = 0.0;
    for (long j = 0; j < 6; ++j)
        for (long i = 0; i < 4; ++i) {
            se += (pred(i, j) - target(i, j)) * (pred(i, j) - target(i, j));
            sa += std::abs(target(i, j));
        }
    const double expect = (se / 24.0) / (sa / 24.0);
    CHECK(train::reconstruction_loss(pred, target) == doctest::Approx(expect).epsilon(1e-13));

    CHECK_THROWS_AS(train::reconstruction_loss(zeros, zeros), DegenerateInput);
    CHECK_THROWS_AS(train::reconstruction_loss(zeros, ones.topRows(2)), InvalidArgument);

    // Graph version agrees with the value version and differentiates.
    ad::Graph g;
    auto pv = ad::make_leaf(g, pred);
    auto lv = train::reconstruction_loss_graph(g, pv, target);
    CHECK(lv.value()(0, 0) == doctest::Approx(expect).epsilon(1e-13));
    testutil::check_grads({pred}, [&](ad::Graph& gg, std::vector<ad::Var>& v) {
        return train::reconstruction_loss_graph(gg, v[0], target);
    });

    // Tensor form matches the matrix form on identical data.
    Tensor3 tp(2, 2, 3), tt(2, 2, 3);
    for (long i = 0; i < tp.size(); ++i) {
        tp.data()[i] = pred(i % 4, i % 6);
        tt.data()[i] = target(i % 4, i % 6);
    }
    double se2 = 0.0, sa2 = 0.0;
    for (long i = 0; i < tp.size(); ++i) {
        se2 += (tp.data()[i] - tt.data()[i]) * (tp.data()[i] - tt.data()[i]);
        sa2 += std::abs(tt.data()[i]);
    }
    CHECK(train::reconstruction_loss(tp, tt) ==
          doctest::Approx((se2 / 12.0) / (sa2 / 12.0)).epsilon(1e-13));
}

TEST_CASE("continuity penalty closed forms and scaling laws") {
    auto plan = train::plan_windows(10, 4);  // 3 windows, 2 junctions
    Rng rng(derive_seed(42, "cont"));

    SUBCASE("continuous junctions cost nothing") {
        Mat z0 = testutil::random_mat(rng, 6, 3);
        Mat ends = testutil::random_mat(rng, 6, 3);
        ends.col(0) = z0.col(1);
        ends.col(1) = z0.col(2);
        CHECK(train::continuity_penalty(ends, z0, plan, 2.0) == 0.0);
    }
    SUBCASE("pinned single-junction example") {
        auto two = train::plan_windows(7, 4);  // 2 windows, 1 junction
        Mat z0 = Mat::Zero(6, 2), ends = Mat::Zero(6, 2);
        ends(0, 0) = 0.1;  // window 0 endpoint differs from window 1 z0
        CHECK(train::continuity_penalty(ends, z0, two, 2.0) ==
              doctest::Approx(0.02).epsilon(1e-15));
    }
    SUBCASE("hand-summed three-junction oracle, linearity, quadratic gaps") {
        auto four = train::plan_windows(13, 4);  // 4 windows
        Mat z0 = testutil::random_mat(rng, 5, 4);
        Mat ends = testutil::random_mat(rng, 5, 4);
        double acc = 0.0;
        for (int j = 0; j < 3; ++j) acc += (ends.col(j) - z0.col(j + 1)).squaredNorm();
        const double expect = 2.0 * acc / 3.0;
        const double got = train::continuity_penalty(ends, z0, four, 2.0);
        CHECK(got == doctest::Approx(expect).epsilon(1e-13));
        CHECK(got >= 0.0);
        CHECK(train::continuity_penalty(ends, z0, four, 6.0) ==
              doctest::Approx(3.0 * got).epsilon(1e-13));
        Mat z0s = 3.0 * z0, endss = 3.0 * ends;
        CHECK(train::continuity_penalty(endss, z0s, four, 2.0) ==
              doctest::Approx(9.0 * got).epsilon(1e-13));
    }
    SUBCASE("single window or zero lambda contribute nothing") {
        auto one = train::plan_windows(4, 4);
        Mat m = testutil::random_mat(rng, 5, 1);
        CHECK(train::continuity_penalty(m, 2.0 * m, one, 5.0) == 0.0);
        ad::Graph g;
        auto v = ad::make_leaf(g, m);
        CHECK(!train::continuity_penalty_graph(g, v, v, one, 5.0).valid());
        CHECK(!train::continuity_penalty_graph(g, v, v, plan, 0.0).valid());
    }
    SUBCASE("batched graph version averages per sample and differentiates") {
        const long B = 2;
        Mat z0 = testutil::random_mat(rng, 5, 3 * B);
        Mat ends = testutil::random_mat(rng, 5, 3 * B);
        double acc = 0.0;
        for (int j = 0; j < 2; ++j)
            for (long b = 0; b < B; ++b)
                acc += (ends.col(j * B + b) - z0.col((j + 1) * B + b)).squaredNorm();
        const double expect = 2.0 * acc / (2.0 * static_cast<double>(B));
        CHECK(train::continuity_penalty(ends, z0, plan, 2.0) ==
              doctest::Approx(expect).epsilon(1e-13));
        ad::Graph g;
        auto ev = ad::make_leaf(g, ends);
        auto zv = ad::make_leaf(g, z0);
        auto pv = train::continuity_penalty_graph(g, ev, zv, plan, 2.0);
        REQUIRE(pv.valid());
        CHECK(pv.value()(0, 0) == doctest::Approx(expect).epsilon(1e-13));
        testutil::check_grads({ends, z0}, [&](ad::Graph& gg, std::vector<ad::Var>& v) {
            return train::continuity_penalty_graph(gg, v[0], v[1], plan, 2.0);
        });
    }
}

TEST_CASE("kl term closed forms and oracle") {
    Mat zero = Mat::Zero(4, 3);
    CHECK(train::kl_term(zero, zero) == 0.0);

    Mat mu1 = Mat::Ones(1, 1);
    CHECK(train::kl_term(mu1, Mat::Zero(1, 1)) == doctest::Approx(0.5).epsilon(1e-15));

    Rng rng(derive_seed(43, "kl"));
    Mat mu = testutil::random_mat(rng, 3, 4);
    Mat lv = testutil::random_mat(rng, 3, 4);
    double acc = 0.0;
    for (long j = 0; j < 4; ++j)
        for (long i = 0; i < 3; ++i)
            acc += 0.5 * (std::exp(lv(i, j)) + mu(i, j) * mu(i, j) - 1.0 - lv(i, j));
    const double expect = acc / 4.0;
    CHECK(train::kl_term(mu, lv) == doctest::Approx(expect).epsilon(1e-13));

    ad::Graph g;
    auto mv = ad::make_leaf(g, mu);
    auto lvv = ad::make_leaf(g, lv);
    auto kv = train::kl_term_graph(g, mv, lvv);
    CHECK(kv.value()(0, 0) == doctest::Approx(expect).epsilon(1e-13));
    testutil::check_grads({mu, lv}, [&](ad::Graph& gg, std::vector<ad::Var>& v) {
        return train::kl_term_graph(gg, v[0], v[1]);
    });
}

TEST_CASE("learning rate schedule anchors, continuity, and bounds") {
    train::TrainConfig cfg;
    CHECK(train::lr_schedule(0, cfg) == 1e-7);
    CHECK(train::lr_schedule(20, cfg) == 0.005251);
    CHECK(train::lr_schedule(10, cfg) ==
          doctest::Approx(1e-7 + (0.005251 - 1e-7) / 2.0).epsilon(1e-15));
    // Constant peak through the plateau phase.
    CHECK(train::lr_schedule(19, cfg) < cfg.lr_peak);
    CHECK(train::lr_schedule(21, cfg) == cfg.lr_peak);
    CHECK(train::lr_schedule(400, cfg) == cfg.lr_peak);

    // Continuous hand-off into the sinusoidal phase.
    const int p = 140;
    CHECK(train::lr_schedule(p, cfg, p) == doctest::Approx(cfg.lr_peak).epsilon(1e-15));
    // Trough of the first arch sits on the floor; one full period later the
    // crest has decayed by amplitude_decay.
    CHECK(train::lr_schedule(p + 25, cfg, p) == doctest::Approx(cfg.lr_floor).epsilon(1e-9));
    CHECK(train::lr_schedule(p + 50, cfg, p) ==
          doctest::Approx(cfg.lr_floor + (cfg.lr_peak - cfg.lr_floor) * 0.5).epsilon(1e-12));

    for (int e = 0; e <= 10000; ++e) {
        const double lr = train::lr_schedule(e, cfg, 100);
        CHECK(lr >= cfg.lr_floor);
        CHECK(lr <= cfg.lr_peak * (1.0 + 1e-15));
    }
    CHECK_THROWS_AS(train::lr_schedule(-1, cfg), InvalidArgument);
}

TEST_CASE("training window sampling stays in bounds") {
    Rng rng(derive_seed(44, "win"));
    for (int k = 0; k < 200; ++k) {
        const long s = train::sample_training_window(600, 46, rng);
        CHECK(s >= 0);
        CHECK(s <= 554);
    }
    CHECK(train::sample_training_window(46, 46, rng) == 0);
    CHECK_THROWS_AS(train::sample_training_window(45, 46, rng), InvalidArgument);

    Rng a(7), b(7);
    for (int k = 0; k < 32; ++k)
        CHECK(train::sample_training_window(100, 10, a) ==
              train::sample_training_window(100, 10, b));
}

TEST_CASE("adam follows the decoupled weight decay update rule") {
    Mat p0(2, 2);
    p0 << 1.0, -2.0, 0.5, 3.0;
    Mat g1(2, 2);
    g1 << 0.3, -0.1, 0.2, 0.4;
    Mat g2(2, 2);
    g2 << -0.2, 0.1, 0.05, -0.3;

    const double lr = 1e-2, wd = 1e-3, b1 = 0.9, b2 = 0.999, eps = 1e-8;
    Mat p = p0;
    std::vector<Mat*> ptrs = {&p};
    train::Adam adam({p0}, b1, b2, eps, wd);
    adam.step(ptrs, {g1}, lr);
    adam.step(ptrs, {g2}, lr);
    CHECK(adam.steps_taken() == 2);

    // Scalar-by-scalar reference of the same two steps.
    Mat q = p0, m = Mat::Zero(2, 2), v = Mat::Zero(2, 2);
    const Mat* gs[2] = {&g1, &g2};
    for (int t = 1; t <= 2; ++t) {
        for (long j = 0; j < 2; ++j)
            for (long i = 0; i < 2; ++i) {
                const double gg = (*gs[t - 1])(i, j);
                m(i, j) = b1 * m(i, j) + (1 - b1) * gg;
                v(i, j) = b2 * v(i, j) + (1 - b2) * gg * gg;
                const double mhat = m(i, j) / (1 - std::pow(b1, t));
                const double vhat = v(i, j) / (1 - std::pow(b2, t));
                q(i, j) -= lr * mhat / (std::sqrt(vhat) + eps);
                q(i, j) -= lr * wd * q(i, j);
            }
    }
    CHECK((p - q).cwiseAbs().maxCoeff() < 1e-14);

    CHECK_THROWS_AS(adam.step(ptrs, {g1.topRows(1)}, lr), InvalidArgument);
    std::vector<Mat*> wrong = {&p, &p};
    CHECK_THROWS_AS(adam.step(wrong, {g1, g2}, lr), InvalidArgument);
}

TEST_CASE("train config json round trip rejects unknown keys") {
    train::TrainConfig cfg;
    cfg.seed = 99;
    cfg.max_epochs = 7;
    nlohmann::json j = cfg;
    auto back = j.get<train::TrainConfig>();
    CHECK(back.seed == 99);
    CHECK(back.max_epochs == 7);
    CHECK(back.lr_peak == cfg.lr_peak);
    j["typo"] = 1;
    CHECK_THROWS_AS(j.get<train::TrainConfig>(), InvalidArgument);

    train::TrainConfig bad;
    bad.lr_floor = bad.lr_peak;
    CHECK_THROWS_AS(bad.validate(), InvalidArgument);
    bad = train::TrainConfig{};
    bad.plateau_patience = 0;
    CHECK_THROWS_AS(bad.validate(), InvalidArgument);
}

TEST_CASE("one window with any lambda equals single shooting exactly") {
    auto spec = tiny_spec(models::Variant::goku_basic);
    auto state = models::init_model(spec, 50);
    Rng rng(derive_seed(50, "single"));
    Tensor3 batch = random_batch(rng, 2, 3, 8);
    auto plan = train::plan_windows(8, 8);
    models::ForwardOptions opts;
    opts.noise_seed = 4;

    train::TrainConfig with_penalty;
    with_penalty.seq_len = 8;
    with_penalty.window_len = 8;
    with_penalty.continuity_coeff = 7.5;
    train::TrainConfig without = with_penalty;
    without.continuity_coeff = 0.0;

    ad::Graph ga;
    auto la = models::make_leaves(ga, state);
    auto lossa = train::batch_loss_graph(ga, la, state, batch, plan, opts, with_penalty);
    ga.backward(lossa.total.id);

    ad::Graph gb;
    auto lb = models::make_leaves(gb, state);
    auto lossb = train::batch_loss_graph(gb, lb, state, batch, plan, opts, without);
    gb.backward(lossb.total.id);

    CHECK(!lossa.continuity.valid());
    CHECK(lossa.total.value()(0, 0) == lossb.total.value()(0, 0));
    REQUIRE(la.size() == lb.size());
    for (std::size_t i = 0; i < la.size(); ++i) {
        const Mat& gra = la[i].grad();
        const Mat& grb = lb[i].grad();
        REQUIRE(gra.size() == grb.size());
        CHECK(std::memcmp(gra.data(), grb.data(),
                          sizeof(double) * static_cast<std::size_t>(gra.size())) == 0);
    }
}

TEST_CASE("total training loss passes a gradient check on a tiny model") {
    auto spec = tiny_spec(models::Variant::goku_basic);
    auto state = models::init_model(spec, 51);
    Rng rng(derive_seed(51, "loss-grad"));
    Tensor3 batch = random_batch(rng, 2, 3, 5);
    auto plan = train::plan_windows(5, 3);
    models::ForwardOptions opts;
    opts.noise_seed = 11;
    train::TrainConfig cfg;
    cfg.seq_len = 5;
    cfg.window_len = 3;
    cfg.continuity_coeff = 2.0;

    std::vector<Mat> xs;
    for (const auto& e : state.params) xs.push_back(e.m);
    testutil::check_grads(
        xs,
        [&](ad::Graph& g, std::vector<ad::Var>& v) {
            return train::batch_loss_graph(g, v, state, batch, plan, opts, cfg).total;
        },
        1e-5, 1e-4, 1e-8);
}

TEST_CASE("fit descends, is deterministic, and records its run") {
    auto spec = tiny_spec(models::Variant::goku_basic);
    spec.noise_intensity = 0.0;
    auto state = models::init_model(spec, 52);
    Rng rng(derive_seed(52, "fit"));
    Tensor3 data = random_batch(rng, 6, 3, 12);

    train::TrainConfig cfg;
    cfg.batch_size = 3;
    cfg.seq_len = 9;
    cfg.window_len = 5;
    cfg.max_epochs = 4;
    cfg.warmup_epochs = 0;
    cfg.lr_peak = 3e-4;
    cfg.lr_floor = 1e-7;
    cfg.val_fraction = 0.2;
    cfg.seed = 5;

    const fs::path dir = fs::temp_directory_path() / "goku_fit_test";
    fs::remove_all(dir);
    const fs::path logp = fs::temp_directory_path() / "goku_fit_test.log";
    fs::remove(logp);

    auto res = train::fit(state, data, cfg, dir.string(), logp.string());
    REQUIRE(res.history.train_loss_history.size() == 4);
    REQUIRE(res.history.val_loss_history.size() == 4);
    REQUIRE(res.history.lr_history.size() == 4);
    CHECK(res.history.epoch == 4);
    CHECK(res.history.train_loss_history.back() < res.history.train_loss_history.front());
    CHECK(res.history.best_val <= res.history.val_loss_history.front());
    CHECK(res.history.best_epoch >= 0);
    CHECK(res.best_state.all_finite());

    // Identical rerun: identical histories and identical best weights.
    auto res2 = train::fit(state, data, cfg);
    CHECK(res2.history.train_loss_history == res.history.train_loss_history);
    CHECK(res2.history.val_loss_history == res.history.val_loss_history);
    for (std::size_t i = 0; i < res.best_state.params.size(); ++i) {
        const Mat& a = res.best_state.params[i].m;
        const Mat& b = res2.best_state.params[i].m;
        CHECK(std::memcmp(a.data(), b.data(), sizeof(double) * static_cast<std::size_t>(a.size())) ==
              0);
    }

    // The checkpoint reloads and the log parses as one record per epoch.
    auto cp = models::load_checkpoint(dir.string());
    CHECK(cp.metadata.at("best_epoch") == res.history.best_epoch);
    CHECK(cp.state.spec.variant == spec.variant);
    std::ifstream lf(logp);
    std::string line;
    int lines = 0;
    while (std::getline(lf, line)) {
        auto rec = nlohmann::json::parse(line);
        CHECK(rec.contains("epoch"));
        CHECK(rec.contains("val_loss"));
        ++lines;
    }
    CHECK(lines == 4);
    fs::remove_all(dir);
    fs::remove(logp);
}

TEST_CASE("fit aborts with diagnostics when the loss turns non-finite") {
    auto spec = tiny_spec(models::Variant::goku_basic);
    spec.noise_intensity = 0.0;
    auto state = models::init_model(spec, 53);
    state.at("reconstructor", "rc_out_W")(0, 0) = std::numeric_limits<double>::quiet_NaN();
    Rng rng(derive_seed(53, "nan"));
    Tensor3 data = random_batch(rng, 2, 3, 9);

    train::TrainConfig cfg;
    cfg.batch_size = 2;
    cfg.seq_len = 9;
    cfg.window_len = 5;
    cfg.max_epochs = 1;
    cfg.val_fraction = 0.0;
    try {
        train::fit(state, data, cfg);
        FAIL("expected NonFiniteLossError");
    } catch (const NonFiniteLossError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("batch") != std::string::npos);
        CHECK(msg.find("theta") != std::string::npos);
    }
}

TEST_CASE("fit rejects mismatched setups") {
    auto spec = tiny_spec(models::Variant::goku_basic);
    auto state = models::init_model(spec, 54);
    Rng rng(derive_seed(54, "rej"));
    Tensor3 data = random_batch(rng, 3, 3, 12);
    train::TrainConfig cfg;
    cfg.seq_len = 9;
    cfg.window_len = 5;
    cfg.max_epochs = 1;

    auto naive = models::init_model(models::make_naive_spec(3), 0);
    CHECK_THROWS_AS(train::fit(naive, data, cfg), InvalidArgument);

    Tensor3 wrong = random_batch(rng, 3, 4, 12);
    CHECK_THROWS_AS(train::fit(state, wrong, cfg), InvalidArgument);

    Tensor3 short_data = random_batch(rng, 3, 3, 5);
    CHECK_THROWS_AS(train::fit(state, short_data, cfg), InvalidArgument);

    auto lstm = models::init_model(models::make_lstm_spec(3, 2), 1);
    CHECK_THROWS_AS(train::fit(lstm, data, cfg), InvalidArgument);
}
