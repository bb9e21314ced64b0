#include "goku/data/synthetic.hpp"

#include <cmath>
#include <mutex>
#include <set>

#include "goku/core/errors.hpp"
#include "goku/core/parallel.hpp"
#include "goku/core/rng.hpp"

namespace goku::data {

namespace {

void require_range(const std::array<double, 2>& r, const char* name) {
    if (!(r[0] <= r[1]) || !std::isfinite(r[0]) || !std::isfinite(r[1]))
        throw InvalidArgument(std::string("dataset spec: invalid ") + name + " range");
}

constexpr const char* kFormatTag = "goku-dataset-v1";

// one strict field reader so typos in configs fail loudly
template <typename T>
void pick(const nlohmann::json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

void SyntheticDatasetSpec::validate() const {
    if (n_oscillators < 1) throw InvalidArgument("dataset spec: n_oscillators must be >= 1");
    if (output_dim < 1) throw InvalidArgument("dataset spec: output_dim must be >= 1");
    if (n_train < 1 || n_test < 1)
        throw InvalidArgument("dataset spec: n_train and n_test must be positive");
    require_range(growth_range, "growth");
    require_range(frequency_range, "frequency");
    require_range(coupling_range, "coupling");
    require_range(init_range, "init");
    require_range(projection_range, "projection");
    if (noise_intensity < 0.0) throw InvalidArgument("dataset spec: noise_intensity < 0");
    if (rate_scale <= 0.0) throw InvalidArgument("dataset spec: rate_scale must be > 0");
    if (dt <= 0.0 || total_time <= 0.0)
        throw InvalidArgument("dataset spec: dt and total_time must be positive");
    steps_total();
    if (trim_steps < 0 || trim_steps >= steps_total())
        throw InvalidArgument("dataset spec: trim_steps must lie in [0, total_time/dt)");
}

long SyntheticDatasetSpec::steps_total() const {
    const double r = total_time / dt;
    const long n = std::lround(r);
    if (n < 1 || std::abs(r - static_cast<double>(n)) > 1e-9 * std::max(1.0, r))
        throw InvalidArgument("dataset spec: total_time must be an integer multiple of dt");
    return n;
}

void to_json(nlohmann::json& j, const SyntheticDatasetSpec& s) {
    j = nlohmann::json{{"n_oscillators", s.n_oscillators},
                       {"output_dim", s.output_dim},
                       {"n_train", s.n_train},
                       {"n_test", s.n_test},
                       {"growth_range", s.growth_range},
                       {"frequency_range", s.frequency_range},
                       {"coupling_range", s.coupling_range},
                       {"global_coupling", s.global_coupling},
                       {"noise_intensity", s.noise_intensity},
                       {"rate_scale", s.rate_scale},
                       {"init_range", s.init_range},
                       {"total_time", s.total_time},
                       {"dt", s.dt},
                       {"trim_steps", s.trim_steps},
                       {"projection_range", s.projection_range},
                       {"master_seed", s.master_seed}};
}

void from_json(const nlohmann::json& j, SyntheticDatasetSpec& s) {
    static const std::set<std::string> known = {
        "n_oscillators",  "output_dim",     "n_train",       "n_test",
        "growth_range",   "frequency_range", "coupling_range", "global_coupling",
        "noise_intensity", "rate_scale",    "init_range",    "total_time",
        "dt",             "trim_steps",     "projection_range", "master_seed"};
    for (const auto& [key, _] : j.items())
        if (!known.count(key))
            throw InvalidArgument("dataset spec: unknown key \"" + key + "\"");
    pick(j, "n_oscillators", s.n_oscillators);
    pick(j, "output_dim", s.output_dim);
    pick(j, "n_train", s.n_train);
    pick(j, "n_test", s.n_test);
    pick(j, "growth_range", s.growth_range);
    pick(j, "frequency_range", s.frequency_range);
    pick(j, "coupling_range", s.coupling_range);
    pick(j, "global_coupling", s.global_coupling);
    pick(j, "noise_intensity", s.noise_intensity);
    pick(j, "rate_scale", s.rate_scale);
    pick(j, "init_range", s.init_range);
    pick(j, "total_time", s.total_time);
    pick(j, "dt", s.dt);
    pick(j, "trim_steps", s.trim_steps);
    pick(j, "projection_range", s.projection_range);
    pick(j, "master_seed", s.master_seed);
}

SampleDraw sample_generator_params(const SyntheticDatasetSpec& spec, long sample_index) {
    if (sample_index < 0 ||
        sample_index >= static_cast<long>(spec.n_train) + static_cast<long>(spec.n_test))
        throw InvalidArgument("sample_generator_params: index out of range");
    Rng rng(derive_seed(spec.master_seed, "params", static_cast<std::uint64_t>(sample_index)));
    const int n = spec.n_oscillators;
    SampleDraw d;
    d.params.n_oscillators = n;
    d.params.growth = Vec(n);
    d.params.frequency = Vec(n);
    d.params.coupling = Mat(n, n);
    for (int i = 0; i < n; ++i)
        d.params.growth[i] = rng.uniform(spec.growth_range[0], spec.growth_range[1]);
    for (int i = 0; i < n; ++i)
        d.params.frequency[i] = rng.uniform(spec.frequency_range[0], spec.frequency_range[1]);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            d.params.coupling(i, j) = rng.uniform(spec.coupling_range[0], spec.coupling_range[1]);
    d.params.global_coupling = spec.global_coupling;
    d.params.noise_intensity = spec.noise_intensity;
    d.params.rate_scale = spec.rate_scale;
    d.init_state = Vec(2 * n);
    for (int i = 0; i < 2 * n; ++i)
        d.init_state[i] = rng.uniform(spec.init_range[0], spec.init_range[1]);
    return d;
}

sde::LatentTrajectory generate_latent(const SyntheticDatasetSpec& spec, long sample_index) {
    spec.validate();
    SampleDraw draw = sample_generator_params(spec, sample_index);
    sde::SolverConfig cfg;
    cfg.scheme = sde::Scheme::euler_maruyama;
    cfg.dt = spec.dt;
    cfg.save_every = spec.dt;
    cfg.noise_seed =
        derive_seed(spec.master_seed, "noise", static_cast<std::uint64_t>(sample_index));
    sde::LatentTrajectory full =
        sde::integrate_sl(draw.params, draw.init_state, {0.0, spec.total_time}, cfg);
    const long keep = spec.time_points();
    sde::LatentTrajectory out;
    out.params = full.params;
    out.states = full.states.bottomRows(keep);
    out.times = full.times.tail(keep);
    return out;
}

Mat make_projection(const SyntheticDatasetSpec& spec, std::uint64_t seed) {
    Rng rng(seed);
    Mat p(spec.output_dim, 2 * spec.n_oscillators);
    for (Eigen::Index j = 0; j < p.cols(); ++j)
        for (Eigen::Index i = 0; i < p.rows(); ++i)
            p(i, j) = rng.uniform(spec.projection_range[0], spec.projection_range[1]);
    return p;
}

nlohmann::json describe_dataset(const SyntheticDatasetSpec& spec) {
    spec.validate();
    const long t = spec.time_points();
    const long d = spec.output_dim;
    const long n2 = 2L * spec.n_oscillators;
    nlohmann::json j;
    j["format"] = kFormatTag;
    j["kind"] = "synthetic";
    j["dtype"] = "float32-le";
    j["spec"] = spec;
    j["seeds"] = {{"projection", derive_seed(spec.master_seed, "projection")},
                  {"params_base", derive_seed(spec.master_seed, "params")},
                  {"noise_base", derive_seed(spec.master_seed, "noise")}};
    j["arrays"] = {
        {"train_data", {{"shape", {spec.n_train, d, t}}}},
        {"test_data", {{"shape", {spec.n_test, d, t}}}},
        {"train_latents", {{"shape", {spec.n_train, n2, t}}}},
        {"test_latents", {{"shape", {spec.n_test, n2, t}}}},
        {"projection", {{"shape", {d, n2}}}},
    };
    return j;
}

Dataset build_dataset(const SyntheticDatasetSpec& spec) {
    spec.validate();
    const long t = spec.time_points();
    const long d = spec.output_dim;
    const int n2 = 2 * spec.n_oscillators;
    Dataset ds;
    ds.projection = make_projection(spec, derive_seed(spec.master_seed, "projection"));
    ds.train.data = Tensor3(spec.n_train, d, t);
    ds.test.data = Tensor3(spec.n_test, d, t);
    ds.train_latents = Tensor3(spec.n_train, n2, t);
    ds.test_latents = Tensor3(spec.n_test, n2, t);
    ds.train.dt_seconds = spec.dt;
    ds.test.dt_seconds = spec.dt;
    ds.train.provenance = "synthetic train";
    ds.test.provenance = "synthetic test";

    const long total = static_cast<long>(spec.n_train) + spec.n_test;
    std::exception_ptr failure;
    std::mutex failure_mu;
    par::parallel_for(total, [&](std::int64_t i) {
        try {
            sde::LatentTrajectory lat = generate_latent(spec, i);
            const bool is_train = i < spec.n_train;
            const std::int64_t s = is_train ? i : i - spec.n_train;
            Tensor3& data = is_train ? ds.train.data : ds.test.data;
            Tensor3& latents = is_train ? ds.train_latents : ds.test_latents;
            latents.sample(s) = lat.states.transpose();
            data.sample(s) = ds.projection * lat.states.transpose();
        } catch (...) {
            std::lock_guard<std::mutex> lock(failure_mu);
            if (!failure) failure = std::current_exception();
        }
    });
    if (failure) std::rethrow_exception(failure);

    ds.manifest = describe_dataset(spec);
    nlohmann::json samples = nlohmann::json::array();
    for (long i = 0; i < total; ++i) {
        SampleDraw draw = sample_generator_params(spec, i);
        nlohmann::json rec;
        rec["growth"] = std::vector<double>(draw.params.growth.begin(),
                                            draw.params.growth.end());
        rec["frequency"] = std::vector<double>(draw.params.frequency.begin(),
                                               draw.params.frequency.end());
        std::vector<double> c;
        c.reserve(static_cast<std::size_t>(draw.params.coupling.size()));
        for (Eigen::Index r = 0; r < draw.params.coupling.rows(); ++r)
            for (Eigen::Index cc = 0; cc < draw.params.coupling.cols(); ++cc)
                c.push_back(draw.params.coupling(r, cc));
        rec["coupling"] = c;
        rec["init"] = std::vector<double>(draw.init_state.begin(), draw.init_state.end());
        samples.push_back(std::move(rec));
    }
    ds.manifest["samples"] = std::move(samples);
    return ds;
}

void save_dataset(const Dataset& ds, const std::filesystem::path& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    nlohmann::json manifest = ds.manifest;

    auto put = [&](const char* name, const double* data, std::size_t n,
                   std::vector<std::int64_t> shape) {
        io::ArrayInfo info = io::write_f32(dir / (std::string(name) + ".f32"), data, n,
                                           std::move(shape));
        manifest["arrays"][name] = {{"shape", info.shape}, {"checksum", info.checksum}};
    };
    auto put_tensor = [&](const char* name, const Tensor3& t) {
        put(name, t.data(), static_cast<std::size_t>(t.size()),
            {t.samples(), t.channels(), t.time()});
    };
    put_tensor("train_data", ds.train.data);
    put_tensor("test_data", ds.test.data);
    put_tensor("train_latents", ds.train_latents);
    put_tensor("test_latents", ds.test_latents);
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> proj = ds.projection;
    put("projection", proj.data(), static_cast<std::size_t>(proj.size()),
        {proj.rows(), proj.cols()});

    io::write_json(dir / "manifest.json", manifest);
}

Dataset load_dataset(const std::filesystem::path& dir) {
    nlohmann::json manifest = io::read_json(dir / "manifest.json");
    if (!manifest.contains("format") || manifest.at("format") != kFormatTag)
        throw CorruptDataset("unrecognized dataset format in " + dir.string());
    Dataset ds;
    ds.manifest = manifest;
    SyntheticDatasetSpec spec = manifest.at("spec").get<SyntheticDatasetSpec>();

    auto fetch_tensor = [&](const char* name) {
        const nlohmann::json& entry = manifest.at("arrays").at(name);
        std::vector<double> raw = io::read_f32(dir / (std::string(name) + ".f32"), entry);
        const auto& shape = entry.at("shape");
        if (shape.size() != 3)
            throw CorruptDataset(std::string("array ") + name + " is not rank 3");
        Tensor3 t(shape[0].get<std::int64_t>(), shape[1].get<std::int64_t>(),
                  shape[2].get<std::int64_t>());
        std::copy(raw.begin(), raw.end(), t.data());
        return t;
    };
    ds.train.data = fetch_tensor("train_data");
    ds.test.data = fetch_tensor("test_data");
    ds.train_latents = fetch_tensor("train_latents");
    ds.test_latents = fetch_tensor("test_latents");

    const nlohmann::json& pentry = manifest.at("arrays").at("projection");
    std::vector<double> praw = io::read_f32(dir / "projection.f32", pentry);
    const auto& pshape = pentry.at("shape");
    if (pshape.size() != 2) throw CorruptDataset("projection is not rank 2");
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> pm(
        praw.data(), pshape[0].get<std::int64_t>(), pshape[1].get<std::int64_t>());
    ds.projection = pm;

    ds.train.dt_seconds = spec.dt;
    ds.test.dt_seconds = spec.dt;
    ds.train.provenance = (dir / "manifest.json").string();
    ds.test.provenance = ds.train.provenance;
    return ds;
}

}  // namespace goku::data
