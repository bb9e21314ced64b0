#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <set>

#include "goku/core/errors.hpp"
#include "goku/core/rng.hpp"
#include "goku/models/model.hpp"

namespace goku::models {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct ShapeEntry {
    std::string stage;
    std::string name;
    long rows;
    long cols;
    bool bias;
};

void push_dense(std::vector<ShapeEntry>& out, const std::string& stage, const std::string& base,
                long rows, long cols) {
    out.push_back({stage, base + "_W", rows, cols, false});
    out.push_back({stage, base + "_b", rows, 1, true});
}

void push_resnet(std::vector<ShapeEntry>& out, const std::string& stage, const std::string& prefix,
                 long in, long hidden, long outdim) {
    push_dense(out, stage, prefix + "_in", hidden, in);
    for (int k = 1; k <= 3; ++k) push_dense(out, stage, prefix + "_res" + std::to_string(k), hidden, hidden);
    push_dense(out, stage, prefix + "_out", outdim, hidden);
}

void push_lstm(std::vector<ShapeEntry>& out, const std::string& stage, const std::string& base,
               long in, long hidden) {
    out.push_back({stage, base + "_Wx", 4 * hidden, in, false});
    out.push_back({stage, base + "_Wh", 4 * hidden, hidden, false});
    out.push_back({stage, base + "_b", 4 * hidden, 1, true});
}

void push_rnn(std::vector<ShapeEntry>& out, const std::string& stage, const std::string& base,
              long in, long hidden) {
    out.push_back({stage, base + "_Wx", hidden, in, false});
    out.push_back({stage, base + "_Wh", hidden, hidden, false});
    out.push_back({stage, base + "_b", hidden, 1, true});
}

std::vector<ShapeEntry> shape_inventory(const ModelSpec& s) {
    std::vector<ShapeEntry> inv;
    if (s.variant == Variant::naive) return inv;

    const long D = s.input_dim;
    const long F = s.feature_dim;
    const long H = s.feature_hidden;
    const long S = s.de_state_dim;
    const long Z = s.pattern_z0_out();
    const long Q = s.pattern_theta_hidden;
    const long L = s.latent_out_hidden;

    push_resnet(inv, "feature_extractor", "fe", D, H, F);

    if (s.variant == Variant::goku_attention) {
        push_lstm(inv, "pattern_extractor", "pe_z0_lstm", F, F);
        push_lstm(inv, "pattern_extractor", "pe_th_fwd", F, Q);
        push_lstm(inv, "pattern_extractor", "pe_th_bwd", F, Q);
        push_dense(inv, "pattern_extractor", "pe_att", 1, 2 * Q);
    } else {
        push_rnn(inv, "pattern_extractor", "pe_z0_l1", F, Z);
        push_rnn(inv, "pattern_extractor", "pe_z0_l2", Z, Z);
        if (s.variant == Variant::goku_basic) {
            push_lstm(inv, "pattern_extractor", "pe_th_l1_fwd", F, Q);
            push_lstm(inv, "pattern_extractor", "pe_th_l1_bwd", F, Q);
            push_lstm(inv, "pattern_extractor", "pe_th_l2_fwd", 2 * Q, Q);
            push_lstm(inv, "pattern_extractor", "pe_th_l2_bwd", 2 * Q, Q);
        }
    }

    push_dense(inv, "latent_in", "li_z0", Z, Z);
    if (s.variational) push_dense(inv, "latent_in", "li_z0_lv", Z, Z);
    if (s.has_theta_path()) {
        push_dense(inv, "latent_in", "li_th", 2 * Q, 2 * Q);
        if (s.variational) push_dense(inv, "latent_in", "li_th_lv", 2 * Q, 2 * Q);
    }

    push_dense(inv, "latent_out", "lo_z0_1", L, Z);
    push_dense(inv, "latent_out", "lo_z0_2", S, L);
    if (s.has_theta_path()) {
        push_dense(inv, "latent_out", "lo_th_1", L, 2 * Q);
        push_dense(inv, "latent_out", "lo_th_2", s.n_de_params(), L);
    }

    if (s.variant == Variant::lstm_baseline) {
        push_lstm(inv, "de_layer", "de_lstm", S, S);
    } else if (s.variant == Variant::latent_ode_baseline) {
        const long Hn = s.node_hidden_dim;
        push_dense(inv, "de_layer", "de_field_1", Hn, S);
        push_dense(inv, "de_layer", "de_field_2", Hn, Hn);
        push_dense(inv, "de_layer", "de_field_3", S, Hn);
    }

    push_resnet(inv, "reconstructor", "rc", S, H, D);
    return inv;
}

long inventory_count(const ModelSpec& s) {
    long total = 0;
    for (const auto& e : shape_inventory(s)) total += e.rows * e.cols;
    return total;
}

const char* kCheckpointTag = "goku-checkpoint-v1";

}  // namespace

std::string variant_name(Variant v) {
    switch (v) {
        case Variant::goku_basic: return "goku_basic";
        case Variant::goku_attention: return "goku_attention";
        case Variant::lstm_baseline: return "lstm_baseline";
        case Variant::latent_ode_baseline: return "latent_ode_baseline";
        case Variant::naive: return "naive";
    }
    throw InvalidArgument("variant_name: unknown variant");
}

Variant variant_from_name(const std::string& name) {
    if (name == "goku_basic") return Variant::goku_basic;
    if (name == "goku_attention") return Variant::goku_attention;
    if (name == "lstm_baseline") return Variant::lstm_baseline;
    if (name == "latent_ode_baseline") return Variant::latent_ode_baseline;
    if (name == "naive") return Variant::naive;
    throw InvalidArgument("unknown model variant: " + name);
}

std::vector<ParamRange> sl_param_ranges(int n_oscillators) {
    if (n_oscillators <= 0) throw InvalidArgument("sl_param_ranges: need at least one oscillator");
    std::vector<ParamRange> ranges;
    const long n = n_oscillators;
    for (long i = 0; i < n; ++i) ranges.push_back({-1.0, 1.0});
    for (long i = 0; i < n; ++i) ranges.push_back({0.0, 1.0});
    for (long i = 0; i < n * n; ++i) ranges.push_back({0.0, 0.2});
    return ranges;
}

void ModelSpec::validate() const {
    if (input_dim <= 0) throw InvalidArgument("ModelSpec: input_dim must be positive");
    if (variant == Variant::naive) {
        if (!de_param_ranges.empty())
            throw InvalidArgument("ModelSpec: the naive predictor takes no DE parameters");
        return;
    }
    if (feature_dim <= 0 || feature_hidden <= 0 || pattern_z0_hidden <= 0 ||
        pattern_theta_hidden <= 0 || latent_out_hidden <= 0)
        throw InvalidArgument("ModelSpec: layer widths must be positive");
    if (de_state_dim <= 0) throw InvalidArgument("ModelSpec: de_state_dim must be positive");
    for (const auto& r : de_param_ranges) {
        if (!std::isfinite(r.lo) || !std::isfinite(r.hi) || r.lo > r.hi)
            throw InvalidArgument("ModelSpec: every parameter range needs finite lo <= hi");
    }
    if (has_theta_path()) {
        if (de_state_dim % 2 != 0)
            throw InvalidArgument("ModelSpec: oscillator variants need an even de_state_dim");
        const long n = n_oscillators();
        if (static_cast<long>(de_param_ranges.size()) != 2 * n + n * n)
            throw InvalidArgument(
                "ModelSpec: oscillator variants need 2N + N^2 parameter ranges (growth, "
                "frequency, coupling)");
        if (noise_intensity < 0.0) throw InvalidArgument("ModelSpec: noise_intensity must be >= 0");
        if (rate_scale <= 0.0) throw InvalidArgument("ModelSpec: rate_scale must be positive");
        if (dt <= 0.0) throw InvalidArgument("ModelSpec: dt must be positive");
    } else {
        if (!de_param_ranges.empty())
            throw InvalidArgument("ModelSpec: baselines take no DE parameter ranges");
        if (variant == Variant::latent_ode_baseline && node_hidden_dim <= 0)
            throw InvalidArgument("ModelSpec: latent_ode_baseline needs node_hidden_dim");
        if (variant == Variant::latent_ode_baseline && dt <= 0.0)
            throw InvalidArgument("ModelSpec: dt must be positive");
    }
}

void to_json(nlohmann::json& j, const ModelSpec& s) {
    j = nlohmann::json::object();
    j["variant"] = variant_name(s.variant);
    j["input_dim"] = s.input_dim;
    j["feature_dim"] = s.feature_dim;
    j["feature_hidden"] = s.feature_hidden;
    j["de_state_dim"] = s.de_state_dim;
    auto ranges = nlohmann::json::array();
    for (const auto& r : s.de_param_ranges) ranges.push_back({r.lo, r.hi});
    j["de_param_ranges"] = std::move(ranges);
    j["variational"] = s.variational;
    if (s.baseline_size_target)
        j["baseline_size_target"] = *s.baseline_size_target;
    else
        j["baseline_size_target"] = nullptr;
    j["pattern_z0_hidden"] = s.pattern_z0_hidden;
    j["pattern_theta_hidden"] = s.pattern_theta_hidden;
    j["latent_out_hidden"] = s.latent_out_hidden;
    j["node_hidden_dim"] = s.node_hidden_dim;
    j["global_coupling"] = s.global_coupling;
    j["noise_intensity"] = s.noise_intensity;
    j["rate_scale"] = s.rate_scale;
    j["dt"] = s.dt;
}

void from_json(const nlohmann::json& j, ModelSpec& s) {
    static const std::set<std::string> known = {
        "variant",           "input_dim",          "feature_dim",
        "feature_hidden",    "de_state_dim",       "de_param_ranges",
        "variational",       "baseline_size_target", "pattern_z0_hidden",
        "pattern_theta_hidden", "latent_out_hidden", "node_hidden_dim",
        "global_coupling",   "noise_intensity",    "rate_scale",
        "dt"};
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (!known.count(it.key()))
            throw InvalidArgument("ModelSpec: unknown key \"" + it.key() + "\"");
    }
    s = ModelSpec{};
    if (j.contains("variant")) s.variant = variant_from_name(j.at("variant").get<std::string>());
    if (j.contains("input_dim")) s.input_dim = j.at("input_dim").get<int>();
    if (j.contains("feature_dim")) s.feature_dim = j.at("feature_dim").get<int>();
    if (j.contains("feature_hidden")) s.feature_hidden = j.at("feature_hidden").get<int>();
    if (j.contains("de_state_dim")) s.de_state_dim = j.at("de_state_dim").get<int>();
    if (j.contains("de_param_ranges")) {
        for (const auto& r : j.at("de_param_ranges")) {
            if (!r.is_array() || r.size() != 2)
                throw InvalidArgument("ModelSpec: each parameter range must be [lo, hi]");
            s.de_param_ranges.push_back({r[0].get<double>(), r[1].get<double>()});
        }
    }
    if (j.contains("variational")) s.variational = j.at("variational").get<bool>();
    if (j.contains("baseline_size_target") && !j.at("baseline_size_target").is_null())
        s.baseline_size_target = j.at("baseline_size_target").get<long>();
    if (j.contains("pattern_z0_hidden")) s.pattern_z0_hidden = j.at("pattern_z0_hidden").get<int>();
    if (j.contains("pattern_theta_hidden"))
        s.pattern_theta_hidden = j.at("pattern_theta_hidden").get<int>();
    if (j.contains("latent_out_hidden")) s.latent_out_hidden = j.at("latent_out_hidden").get<int>();
    if (j.contains("node_hidden_dim")) s.node_hidden_dim = j.at("node_hidden_dim").get<int>();
    if (j.contains("global_coupling")) s.global_coupling = j.at("global_coupling").get<double>();
    if (j.contains("noise_intensity")) s.noise_intensity = j.at("noise_intensity").get<double>();
    if (j.contains("rate_scale")) s.rate_scale = j.at("rate_scale").get<double>();
    if (j.contains("dt")) s.dt = j.at("dt").get<double>();
}

ModelSpec make_goku_spec(Variant variant, int input_dim, int n_oscillators) {
    if (variant != Variant::goku_basic && variant != Variant::goku_attention)
        throw InvalidArgument("make_goku_spec: variant must be goku_basic or goku_attention");
    ModelSpec s;
    s.variant = variant;
    s.input_dim = input_dim;
    s.de_state_dim = 2 * n_oscillators;
    s.de_param_ranges = sl_param_ranges(n_oscillators);
    s.validate();
    return s;
}

ModelSpec make_lstm_spec(int input_dim, int z_dim) {
    ModelSpec s;
    s.variant = Variant::lstm_baseline;
    s.input_dim = input_dim;
    s.de_state_dim = z_dim;
    s.validate();
    return s;
}

ModelSpec make_latent_ode_spec(int input_dim, int z_dim, int node_hidden_dim) {
    ModelSpec s;
    s.variant = Variant::latent_ode_baseline;
    s.input_dim = input_dim;
    s.de_state_dim = z_dim;
    s.node_hidden_dim = node_hidden_dim;
    s.validate();
    return s;
}

ModelSpec make_naive_spec(int input_dim) {
    ModelSpec s;
    s.variant = Variant::naive;
    s.input_dim = input_dim;
    s.de_state_dim = 0;
    s.validate();
    return s;
}

Mat& ModelState::at(const std::string& stage, const std::string& name) {
    for (auto& e : params)
        if (e.stage == stage && e.name == name) return e.m;
    throw InvalidArgument("ModelState: no parameter " + stage + "/" + name);
}

const Mat& ModelState::at(const std::string& stage, const std::string& name) const {
    for (const auto& e : params)
        if (e.stage == stage && e.name == name) return e.m;
    throw InvalidArgument("ModelState: no parameter " + stage + "/" + name);
}

bool ModelState::all_finite() const {
    for (const auto& e : params)
        if (!e.m.allFinite()) return false;
    return true;
}

ModelState init_model(const ModelSpec& spec, std::uint64_t seed) {
    spec.validate();
    ModelState state;
    state.spec = spec;
    Rng rng(derive_seed(seed, "model-init"));
    for (const auto& e : shape_inventory(spec)) {
        Mat m;
        if (e.bias) {
            m = Mat::Zero(e.rows, e.cols);
        } else {
            const double limit = std::sqrt(6.0 / static_cast<double>(e.rows + e.cols));
            m.resize(e.rows, e.cols);
            for (long c = 0; c < e.cols; ++c)
                for (long r = 0; r < e.rows; ++r) m(r, c) = rng.uniform(-limit, limit);
        }
        state.parameter_count += e.rows * e.cols;
        state.params.push_back({e.stage, e.name, std::move(m)});
    }
    // Damp the z0 output head so freshly initialized latents start near the
    // origin: the fixed-step Euler-Maruyama solve at dt * rate_scale = 1 only
    // tolerates |z| up to sqrt(2) per oscillator, and plain Glorot puts a
    // large fraction of draws outside that basin.
    for (auto& p : state.params)
        if (p.name == "lo_z0_2_W") p.m *= 0.1;
    return state;
}

long count_parameters(const ModelState& state) {
    long total = 0;
    for (const auto& e : state.params) total += e.m.size();
    return total;
}

ModelSpec match_baseline_size(const ModelSpec& base, long target_count) {
    if (target_count <= 0) throw InvalidArgument("match_baseline_size: target must be positive");
    if (base.variant != Variant::lstm_baseline && base.variant != Variant::latent_ode_baseline)
        throw InvalidArgument("match_baseline_size: only the LSTM and latent ODE baselines are sized");

    ModelSpec best;
    long best_err = -1;
    auto consider = [&](const ModelSpec& cand) {
        const long err = std::labs(inventory_count(cand) - target_count);
        if (best_err < 0 || err < best_err) {
            best_err = err;
            best = cand;
        }
    };

    if (base.variant == Variant::lstm_baseline) {
        ModelSpec cand = base;
        for (int z = 1; z <= 8192; ++z) {
            cand.de_state_dim = z;
            consider(cand);
            if (inventory_count(cand) > target_count) break;
        }
    } else {
        // Field parameters total Hn^2 + (2z + 3)Hn on top of the z-dependent
        // base, so the best Hn per z solves a quadratic.
        ModelSpec cand = base;
        for (int z = 1; z <= 1024; ++z) {
            cand.de_state_dim = z;
            cand.node_hidden_dim = 1;
            const long b = 2 * z + 3;
            const long base_count = inventory_count(cand) - (1 + b);
            const double rest = static_cast<double>(target_count - base_count);
            double root = (-static_cast<double>(b) + std::sqrt(static_cast<double>(b) * b + 4.0 * std::max(rest, 0.0))) / 2.0;
            for (long h : {static_cast<long>(std::floor(root)), static_cast<long>(std::ceil(root))}) {
                if (h < 1) h = 1;
                cand.node_hidden_dim = static_cast<int>(h);
                consider(cand);
            }
            if (base_count > target_count) break;
        }
    }

    if (best_err > (target_count * 2) / 100)
        throw NoSolutionError("match_baseline_size: no " + variant_name(base.variant) +
                              " within 2% of " + std::to_string(target_count) +
                              " parameters (best mismatch " + std::to_string(best_err) + ")");
    best.baseline_size_target = target_count;
    best.validate();
    return best;
}

void save_checkpoint(const ModelState& state, const std::filesystem::path& dir,
                     const nlohmann::json& metadata) {
    std::filesystem::create_directories(dir);
    nlohmann::json manifest;
    manifest["format"] = kCheckpointTag;
    manifest["spec"] = state.spec;
    manifest["parameter_count"] = state.parameter_count;
    manifest["metadata"] = metadata;
    auto params = nlohmann::json::array();
    int idx = 0;
    for (const auto& e : state.params) {
        char tag[16];
        std::snprintf(tag, sizeof(tag), "p%03d_", idx++);
        const std::string file = std::string(tag) + e.name + ".f32";
        const RowMat rm = e.m;  // container arrays are C order
        const auto info = io::write_f32(dir / file, rm.data(), static_cast<std::size_t>(rm.size()),
                                        {e.m.rows(), e.m.cols()});
        nlohmann::json p;
        p["stage"] = e.stage;
        p["name"] = e.name;
        p["file"] = file;
        p["shape"] = info.shape;
        p["checksum"] = info.checksum;
        params.push_back(std::move(p));
    }
    manifest["params"] = std::move(params);
    io::write_json(dir / "manifest.json", manifest);
}

Checkpoint load_checkpoint(const std::filesystem::path& dir) {
    const auto manifest = io::read_json(dir / "manifest.json");
    if (!manifest.contains("format") || manifest.at("format") != kCheckpointTag)
        throw CorruptDataset("checkpoint manifest format tag mismatch in " + dir.string());
    Checkpoint cp;
    cp.state.spec = manifest.at("spec").get<ModelSpec>();
    cp.metadata = manifest.value("metadata", nlohmann::json::object());

    const auto inv = shape_inventory(cp.state.spec);
    const auto& params = manifest.at("params");
    if (params.size() != inv.size())
        throw CorruptDataset("checkpoint parameter list does not match the spec inventory");
    for (std::size_t i = 0; i < inv.size(); ++i) {
        const auto& p = params[i];
        if (p.at("stage") != inv[i].stage || p.at("name") != inv[i].name)
            throw CorruptDataset("checkpoint parameter order mismatch at index " +
                                 std::to_string(i));
        const auto values = io::read_f32(dir / p.at("file").get<std::string>(), p);
        const auto shape = p.at("shape").get<std::vector<std::int64_t>>();
        if (shape.size() != 2 || shape[0] != inv[i].rows || shape[1] != inv[i].cols)
            throw CorruptDataset("checkpoint shape mismatch for " + inv[i].name);
        Mat m = Eigen::Map<const RowMat>(values.data(), inv[i].rows, inv[i].cols);
        cp.state.parameter_count += m.size();
        cp.state.params.push_back({inv[i].stage, inv[i].name, std::move(m)});
    }
    if (manifest.contains("parameter_count") &&
        manifest.at("parameter_count").get<long>() != cp.state.parameter_count)
        throw CorruptDataset("checkpoint parameter_count disagrees with the stored arrays");
    return cp;
}

}  // namespace goku::models
