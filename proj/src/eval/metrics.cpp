#include "goku/eval/metrics.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <tuple>

#include "goku/core/errors.hpp"
#include "goku/core/rng.hpp"
#include "goku/train/window.hpp"

namespace goku::eval {

std::string nrmse_norm_name(NrmseNorm n) {
    return n == NrmseNorm::mean_abs ? "mean_abs" : "target_std";
}

NrmseNorm nrmse_norm_from_name(const std::string& name) {
    if (name == "mean_abs") return NrmseNorm::mean_abs;
    if (name == "target_std") return NrmseNorm::target_std;
    throw InvalidArgument("unknown nrmse normalization '" + name + "'");
}

double nrmse(const Mat& pred, const Mat& target, NrmseNorm norm) {
    if (pred.rows() != target.rows() || pred.cols() != target.cols())
        throw InvalidArgument("nrmse: shape mismatch");
    if (target.size() == 0) throw InvalidArgument("nrmse: empty target");
    double scale = 0.0;
    if (norm == NrmseNorm::mean_abs) {
        scale = target.cwiseAbs().mean();
    } else {
        const double mean = target.mean();
        scale = std::sqrt((target.array() - mean).square().mean());
    }
    if (scale == 0.0) throw DegenerateInput("nrmse: target has zero scale");
    const double rmse =
        std::sqrt((pred - target).squaredNorm() / static_cast<double>(target.size()));
    return rmse / scale;
}

double median(std::vector<double> values) {
    if (values.empty()) throw InvalidArgument("median: empty input");
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    if (n % 2 == 1) return values[n / 2];
    return 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

void to_json(nlohmann::json& j, const MetricRow& r) {
    j = nlohmann::json{{"variant", r.variant}, {"seed", r.seed},
                       {"task", r.task},       {"swept", r.swept},
                       {"swept_value", r.swept_value}, {"sample", r.sample},
                       {"nrmse", r.nrmse},     {"seconds", r.seconds}};
}

void from_json(const nlohmann::json& j, MetricRow& r) {
    r.variant = j.at("variant").get<std::string>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.task = j.at("task").get<std::string>();
    r.swept = j.at("swept").get<std::string>();
    r.swept_value = j.at("swept_value").get<double>();
    r.sample = j.at("sample").get<long>();
    r.nrmse = j.at("nrmse").get<double>();
    r.seconds = j.at("seconds").get<double>();
}

void EvalOptions::validate() const {
    if (seq_len < 1) throw InvalidArgument("EvalOptions: seq_len must be positive");
    if (window_len < 2) throw InvalidArgument("EvalOptions: window_len must be >= 2");
    if (horizon < 0) throw InvalidArgument("EvalOptions: negative horizon");
    if (noise_draws < 1) throw InvalidArgument("EvalOptions: noise_draws must be >= 1");
    if (max_samples < 0) throw InvalidArgument("EvalOptions: negative max_samples");
}

void to_json(nlohmann::json& j, const EvalOptions& o) {
    j = nlohmann::json{{"seq_len", o.seq_len},
                       {"window_len", o.window_len},
                       {"horizon", o.horizon},
                       {"eval_seed", o.eval_seed},
                       {"norm", nrmse_norm_name(o.norm)},
                       {"noise_draws", o.noise_draws},
                       {"max_samples", o.max_samples}};
}

void from_json(const nlohmann::json& j, EvalOptions& o) {
    static const std::vector<std::string> known = {"seq_len",     "window_len",  "horizon",
                                                   "eval_seed",   "norm",        "noise_draws",
                                                   "max_samples"};
    for (const auto& it : j.items())
        if (std::find(known.begin(), known.end(), it.key()) == known.end())
            throw InvalidArgument("EvalOptions: unknown key \"" + it.key() + "\"");
    EvalOptions d;
    o.seq_len = j.value("seq_len", d.seq_len);
    o.window_len = j.value("window_len", d.window_len);
    o.horizon = j.value("horizon", d.horizon);
    o.eval_seed = j.value("eval_seed", d.eval_seed);
    o.norm = j.contains("norm") ? nrmse_norm_from_name(j.at("norm").get<std::string>()) : d.norm;
    o.noise_draws = j.value("noise_draws", d.noise_draws);
    o.max_samples = j.value("max_samples", d.max_samples);
    o.validate();
}

int default_horizon(double dt_seconds) {
    if (dt_seconds > 0.0 && std::abs(dt_seconds - 3.0) < 1e-9) return 4;
    return 20;
}

namespace {

Mat tensor_sample_block(const Tensor3& t, long s, long t0, long len) {
    Mat out(t.channels(), len);
    for (long c = 0; c < t.channels(); ++c)
        for (long k = 0; k < len; ++k) out(c, k) = t.at(s, c, t0 + k);
    return out;
}

std::string fmt_g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

std::vector<MetricRow> evaluate(const models::ModelState& state, const Tensor3& test,
                                const EvalOptions& opts) {
    opts.validate();
    state.spec.validate();
    const auto& spec = state.spec;
    if (test.channels() != spec.input_dim)
        throw InvalidArgument("evaluate: test channel count does not match the model input size");
    const long needed = static_cast<long>(opts.seq_len) + opts.horizon;
    if (test.time() < needed)
        throw InvalidArgument("evaluate: samples are shorter than seq_len + horizon (" +
                              std::to_string(test.time()) + " < " + std::to_string(needed) + ")");
    if (test.samples() < 1) throw InvalidArgument("evaluate: empty test set");

    train::WindowPlan plan;
    if (spec.variant == models::Variant::lstm_baseline) {
        plan.seq_len = opts.seq_len;
        plan.window_len = opts.seq_len;
        plan.n_windows = 1;
    } else if (spec.variant != models::Variant::naive) {
        plan = train::plan_windows(opts.seq_len, opts.window_len);
    }

    const std::uint64_t noise_base = derive_seed(opts.eval_seed, "eval-noise");
    const std::uint64_t draw_base = derive_seed(opts.eval_seed, "eval-draw");

    long n = test.samples();
    if (opts.max_samples > 0) n = std::min(n, opts.max_samples);

    std::vector<MetricRow> rows;
    rows.reserve(static_cast<std::size_t>(n) * (opts.horizon > 0 ? 2 : 1));
    const std::string vname = models::variant_name(spec.variant);

    for (long s = 0; s < n; ++s) {
        const auto t0 = std::chrono::steady_clock::now();
        Tensor3 batch(1, test.channels(), opts.seq_len);
        for (long c = 0; c < test.channels(); ++c)
            for (long t = 0; t < opts.seq_len; ++t) batch.at(0, c, t) = test.at(s, c, t);

        Tensor3 recon_sum, forecast_sum;
        for (int k = 0; k < opts.noise_draws; ++k) {
            models::ForwardOptions fopts;
            fopts.horizon = opts.horizon;
            fopts.noise_seed =
                combine_seed(combine_seed(noise_base, static_cast<std::uint64_t>(s)),
                             static_cast<std::uint64_t>(k));
            fopts.sample_seed =
                combine_seed(combine_seed(draw_base, static_cast<std::uint64_t>(s)),
                             static_cast<std::uint64_t>(k));
            auto fr = models::model_forward(state, batch, plan, fopts);
            if (k == 0) {
                recon_sum = std::move(fr.reconstruction);
                forecast_sum = std::move(fr.forecast);
            } else {
                for (long i = 0; i < recon_sum.size(); ++i)
                    recon_sum.data()[i] += fr.reconstruction.data()[i];
                for (long i = 0; i < forecast_sum.size(); ++i)
                    forecast_sum.data()[i] += fr.forecast.data()[i];
            }
        }
        if (opts.noise_draws > 1) {
            const double inv = 1.0 / static_cast<double>(opts.noise_draws);
            for (long i = 0; i < recon_sum.size(); ++i) recon_sum.data()[i] *= inv;
            for (long i = 0; i < forecast_sum.size(); ++i) forecast_sum.data()[i] *= inv;
        }
        const double seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

        MetricRow recon;
        recon.variant = vname;
        recon.task = "reconstruction";
        recon.sample = s;
        recon.nrmse = nrmse(tensor_sample_block(recon_sum, 0, 0, opts.seq_len),
                            tensor_sample_block(test, s, 0, opts.seq_len), opts.norm);
        recon.seconds = seconds;
        rows.push_back(recon);

        if (opts.horizon > 0) {
            MetricRow fc = recon;
            fc.task = "forecast";
            fc.nrmse = nrmse(tensor_sample_block(forecast_sum, 0, 0, opts.horizon),
                             tensor_sample_block(test, s, opts.seq_len, opts.horizon), opts.norm);
            rows.push_back(fc);
        }
    }
    return rows;
}

namespace {

using GroupKey = std::tuple<std::string, std::uint64_t, std::string, std::string, double>;

GroupKey row_key(const MetricRow& r) {
    return {r.variant, r.seed, r.task, r.swept, r.swept_value};
}

}  // namespace

std::vector<MetricRow> fold_sample_median(const std::vector<MetricRow>& rows) {
    std::vector<GroupKey> order;
    std::map<GroupKey, std::vector<double>> values;
    std::map<GroupKey, double> seconds;
    for (const auto& r : rows) {
        const auto key = row_key(r);
        if (!values.count(key)) order.push_back(key);
        values[key].push_back(r.nrmse);
        seconds[key] += r.seconds;
    }
    std::vector<MetricRow> out;
    out.reserve(order.size());
    for (const auto& key : order) {
        MetricRow r;
        std::tie(r.variant, r.seed, r.task, r.swept, r.swept_value) = key;
        r.sample = -1;
        r.nrmse = median(values[key]);
        r.seconds = seconds[key];
        out.push_back(r);
    }
    return out;
}

std::vector<AggregateRow> aggregate(const MetricsReport& report) {
    if (report.rows.empty()) throw InvalidArgument("aggregate: empty report");
    using CellKey = std::tuple<std::string, std::string, std::string, double>;
    std::vector<CellKey> order;
    std::map<CellKey, std::map<std::uint64_t, std::vector<double>>> cells;
    for (const auto& r : report.rows) {
        const CellKey key{r.variant, r.task, r.swept, r.swept_value};
        if (!cells.count(key)) order.push_back(key);
        cells[key][r.seed].push_back(r.nrmse);
    }
    std::vector<AggregateRow> out;
    out.reserve(order.size());
    for (const auto& key : order) {
        std::vector<double> per_seed;
        for (auto& [seed, vals] : cells[key]) {
            (void)seed;
            per_seed.push_back(median(vals));
        }
        AggregateRow a;
        std::tie(a.variant, a.task, a.swept, a.swept_value) = key;
        a.n_seeds = static_cast<int>(per_seed.size());
        a.median_nrmse = median(per_seed);
        if (per_seed.size() > 1) {
            const double mean =
                std::accumulate(per_seed.begin(), per_seed.end(), 0.0) /
                static_cast<double>(per_seed.size());
            double sq = 0.0;
            for (double v : per_seed) sq += (v - mean) * (v - mean);
            const double sd = std::sqrt(sq / static_cast<double>(per_seed.size() - 1));
            a.std_error = sd / std::sqrt(static_cast<double>(per_seed.size()));
        }
        out.push_back(a);
    }
    return out;
}

namespace {

const char* kReportHeader = "variant\tseed\ttask\tswept\tvalue\tsample\tnrmse\tseconds";

std::vector<std::string> split_tabs(const std::string& line) {
    std::vector<std::string> out;
    std::size_t at = 0;
    while (true) {
        const std::size_t tab = line.find('\t', at);
        if (tab == std::string::npos) {
            out.push_back(line.substr(at));
            return out;
        }
        out.push_back(line.substr(at, tab - at));
        at = tab + 1;
    }
}

}  // namespace

void emit_report(const MetricsReport& report, const std::filesystem::path& file) {
    if (report.rows.empty()) throw InvalidArgument("emit_report: empty report");
    std::ofstream out(file);
    if (!out) throw InvalidArgument("emit_report: cannot open " + file.string());
    out << kReportHeader << "\n";
    for (const auto& r : report.rows) {
        out << r.variant << '\t' << r.seed << '\t' << r.task << '\t' << r.swept << '\t'
            << fmt_g17(r.swept_value) << '\t' << r.sample << '\t' << fmt_g17(r.nrmse) << '\t'
            << fmt_g17(r.seconds) << "\n";
    }
}

MetricsReport load_report(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw InvalidArgument("load_report: cannot open " + file.string());
    std::string line;
    if (!std::getline(in, line)) throw ParseError("load_report: empty file", 1, 1);
    if (line != kReportHeader) throw ParseError("load_report: unexpected header", 1, 1);
    MetricsReport report;
    long row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty()) continue;
        const auto fields = split_tabs(line);
        if (fields.size() != 8)
            throw ParseError("load_report: expected 8 fields", row,
                             static_cast<long>(fields.size()));
        MetricRow r;
        try {
            r.variant = fields[0];
            r.seed = std::stoull(fields[1]);
            r.task = fields[2];
            r.swept = fields[3];
            r.swept_value = std::stod(fields[4]);
            r.sample = std::stol(fields[5]);
            r.nrmse = std::stod(fields[6]);
            r.seconds = std::stod(fields[7]);
        } catch (const std::exception&) {
            throw ParseError("load_report: malformed number", row, 1);
        }
        report.rows.push_back(std::move(r));
    }
    return report;
}

void emit_aggregate_report(const std::vector<AggregateRow>& rows,
                           const std::filesystem::path& file) {
    if (rows.empty()) throw InvalidArgument("emit_aggregate_report: empty report");
    std::ofstream out(file);
    if (!out) throw InvalidArgument("emit_aggregate_report: cannot open " + file.string());
    out << "variant\ttask\tswept\tvalue\tn_seeds\tmedian_nrmse\tstd_error\n";
    for (const auto& a : rows) {
        out << a.variant << '\t' << a.task << '\t' << a.swept << '\t' << fmt_g17(a.swept_value)
            << '\t' << a.n_seeds << '\t' << fmt_g17(a.median_nrmse) << '\t';
        if (a.std_error) out << fmt_g17(*a.std_error);
        out << "\n";
    }
}

}  // namespace goku::eval
