#include "goku/eval/plots.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "goku/core/errors.hpp"

namespace fs = std::filesystem;

namespace goku::eval {

BoxStats box_stats(std::vector<double> values) {
    if (values.empty()) throw InvalidArgument("box_stats: empty input");
    std::sort(values.begin(), values.end());
    const auto quantile = [&](double p) {
        const double h = p * static_cast<double>(values.size() - 1);
        const std::size_t i = static_cast<std::size_t>(std::floor(h));
        if (i + 1 >= values.size()) return values.back();
        return values[i] + (h - std::floor(h)) * (values[i + 1] - values[i]);
    };
    BoxStats b;
    b.lo = values.front();
    b.q1 = quantile(0.25);
    b.med = quantile(0.5);
    b.q3 = quantile(0.75);
    b.hi = values.back();
    return b;
}

namespace {

constexpr double kWidth = 640.0, kHeight = 420.0;
constexpr double kLeft = 70.0, kRight = 150.0, kTop = 40.0, kBottom = 60.0;

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};
constexpr int kPaletteSize = 6;

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4g", v);
    return buf;
}

struct Axis {
    double lo = 0.0, hi = 1.0;
    double px0 = 0.0, px1 = 1.0;  // pixel range; y axes pass px0 > px1

    double map(double v) const { return px0 + (v - lo) / (hi - lo) * (px1 - px0); }
};

Axis make_axis(double lo, double hi, double px0, double px1) {
    if (lo == hi) {
        const double pad = std::max(0.5 * std::abs(lo), 0.5);
        lo -= pad;
        hi += pad;
    } else {
        const double pad = 0.05 * (hi - lo);
        lo -= pad;
        hi += pad;
    }
    return Axis{lo, hi, px0, px1};
}

struct Svg {
    std::ostringstream body;

    std::string finish() const {
        std::ostringstream out;
        out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
            << kHeight << "\" viewBox=\"0 0 " << kWidth << " " << kHeight << "\">\n"
            << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
            << body.str() << "</svg>\n";
        return out.str();
    }

    void text(double x, double y, const std::string& s, const std::string& anchor = "middle",
              double size = 12.0, const std::string& extra = "") {
        body << "<text x=\"" << x << "\" y=\"" << y << "\" font-family=\"sans-serif\" font-size=\""
             << size << "\" text-anchor=\"" << anchor << "\" " << extra << ">" << s << "</text>\n";
    }

    void line(double x1, double y1, double x2, double y2, const std::string& stroke = "#333",
              double width = 1.0) {
        body << "<line x1=\"" << x1 << "\" y1=\"" << y1 << "\" x2=\"" << x2 << "\" y2=\"" << y2
             << "\" stroke=\"" << stroke << "\" stroke-width=\"" << width << "\"/>\n";
    }

    void rect(double x, double y, double w, double h, const std::string& fill,
              const std::string& stroke = "none") {
        body << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << w << "\" height=\"" << h
             << "\" fill=\"" << fill << "\" stroke=\"" << stroke << "\"/>\n";
    }

    void axes(const Axis& x, const Axis& y, const std::string& x_label,
              const std::string& y_label) {
        line(kLeft, kHeight - kBottom, kWidth - kRight, kHeight - kBottom);
        line(kLeft, kTop, kLeft, kHeight - kBottom);
        for (int i = 0; i <= 4; ++i) {
            const double xv = x.lo + (x.hi - x.lo) * i / 4.0;
            const double yv = y.lo + (y.hi - y.lo) * i / 4.0;
            const double xp = x.map(xv), yp = y.map(yv);
            line(xp, kHeight - kBottom, xp, kHeight - kBottom + 4);
            text(xp, kHeight - kBottom + 18, fmt(xv));
            line(kLeft - 4, yp, kLeft, yp);
            text(kLeft - 8, yp + 4, fmt(yv), "end");
        }
        text((kLeft + kWidth - kRight) / 2, kHeight - 14, x_label);
        text(16, (kTop + kHeight - kBottom) / 2, y_label, "middle", 12.0,
             "transform=\"rotate(-90 16 " + fmt((kTop + kHeight - kBottom) / 2) + ")\"");
    }

    void legend(const std::vector<std::string>& names) {
        const double x = kWidth - kRight + 14;
        for (std::size_t i = 0; i < names.size(); ++i) {
            const double y = kTop + 10 + 20 * static_cast<double>(i);
            rect(x, y - 9, 12, 12, kPalette[i % kPaletteSize]);
            text(x + 18, y + 1, names[i], "start");
        }
    }
};

void write_file(const fs::path& file, const std::string& content) {
    std::ofstream out(file);
    if (!out) throw InvalidArgument("emit_plots: cannot open " + file.string());
    out << content;
}

std::string ramp_color(double t) {
    t = std::clamp(t, 0.0, 1.0);
    const int r = static_cast<int>(std::lround(44 + t * (253 - 44)));
    const int g = static_cast<int>(std::lround(123 + t * (231 - 123)));
    const int b = static_cast<int>(std::lround(182 + t * (37 - 182)));
    char buf[10];
    std::snprintf(buf, sizeof(buf), "#%02x%02x%02x", r, g, b);
    return buf;
}

// Keeps first-appearance order, which the palette indexes into.
std::vector<std::string> variant_order(const std::vector<MetricRow>& rows) {
    std::vector<std::string> order;
    for (const auto& r : rows)
        if (std::find(order.begin(), order.end(), r.variant) == order.end())
            order.push_back(r.variant);
    return order;
}

void emit_lines(const std::vector<AggregateRow>& aggs, const std::vector<std::string>& variants,
                const std::string& task, const std::string& swept, const fs::path& file) {
    double ylo = 1e300, yhi = -1e300, xlo = 1e300, xhi = -1e300;
    for (const auto& a : aggs) {
        const double se = a.std_error.value_or(0.0);
        ylo = std::min(ylo, a.median_nrmse - se);
        yhi = std::max(yhi, a.median_nrmse + se);
        xlo = std::min(xlo, a.swept_value);
        xhi = std::max(xhi, a.swept_value);
    }
    const Axis x = make_axis(xlo, xhi, kLeft, kWidth - kRight);
    const Axis y = make_axis(ylo, yhi, kHeight - kBottom, kTop);

    Svg svg;
    svg.text((kLeft + kWidth - kRight) / 2, 22, "median NRMSE, " + task, "middle", 14.0);
    svg.axes(x, y, swept, "NRMSE");
    for (std::size_t vi = 0; vi < variants.size(); ++vi) {
        std::vector<const AggregateRow*> pts;
        for (const auto& a : aggs)
            if (a.variant == variants[vi]) pts.push_back(&a);
        std::sort(pts.begin(), pts.end(), [](const AggregateRow* a, const AggregateRow* b) {
            return a->swept_value < b->swept_value;
        });
        if (pts.empty()) continue;
        const std::string color = kPalette[vi % kPaletteSize];

        bool any_se = false;
        for (const auto* p : pts) any_se |= p->std_error.has_value();
        if (any_se && pts.size() > 1) {
            std::ostringstream poly;
            for (const auto* p : pts)
                poly << x.map(p->swept_value) << ","
                     << y.map(p->median_nrmse + p->std_error.value_or(0.0)) << " ";
            for (auto it = pts.rbegin(); it != pts.rend(); ++it)
                poly << x.map((*it)->swept_value) << ","
                     << y.map((*it)->median_nrmse - (*it)->std_error.value_or(0.0)) << " ";
            svg.body << "<polygon points=\"" << poly.str() << "\" fill=\"" << color
                     << "\" fill-opacity=\"0.2\" stroke=\"none\"/>\n";
        }
        std::ostringstream linepts;
        for (const auto* p : pts)
            linepts << x.map(p->swept_value) << "," << y.map(p->median_nrmse) << " ";
        svg.body << "<polyline points=\"" << linepts.str() << "\" fill=\"none\" stroke=\"" << color
                 << "\" stroke-width=\"2\"/>\n";
        for (const auto* p : pts)
            svg.body << "<circle cx=\"" << x.map(p->swept_value) << "\" cy=\""
                     << y.map(p->median_nrmse) << "\" r=\"3\" fill=\"" << color << "\"/>\n";
    }
    svg.legend(variants);
    write_file(file, svg.finish());
}

void emit_box(const std::vector<MetricRow>& rows, const std::vector<std::string>& variants,
              const std::string& task, const fs::path& file) {
    std::map<std::string, std::vector<double>> byv;
    for (const auto& r : rows) byv[r.variant].push_back(r.nrmse);
    double ylo = 1e300, yhi = -1e300;
    std::map<std::string, BoxStats> boxes;
    for (const auto& v : variants) {
        boxes[v] = box_stats(byv[v]);
        ylo = std::min(ylo, boxes[v].lo);
        yhi = std::max(yhi, boxes[v].hi);
    }
    const Axis y = make_axis(ylo, yhi, kHeight - kBottom, kTop);
    const double span = kWidth - kRight - kLeft;
    const double slot = span / static_cast<double>(variants.size());

    Svg svg;
    svg.text((kLeft + kWidth - kRight) / 2, 22, "NRMSE distribution, " + task, "middle", 14.0);
    svg.line(kLeft, kHeight - kBottom, kWidth - kRight, kHeight - kBottom);
    svg.line(kLeft, kTop, kLeft, kHeight - kBottom);
    for (int i = 0; i <= 4; ++i) {
        const double yv = y.lo + (y.hi - y.lo) * i / 4.0;
        svg.line(kLeft - 4, y.map(yv), kLeft, y.map(yv));
        svg.text(kLeft - 8, y.map(yv) + 4, fmt(yv), "end");
    }
    svg.text(16, (kTop + kHeight - kBottom) / 2, "NRMSE", "middle", 12.0,
             "transform=\"rotate(-90 16 " + fmt((kTop + kHeight - kBottom) / 2) + ")\"");
    for (std::size_t vi = 0; vi < variants.size(); ++vi) {
        const BoxStats& b = boxes[variants[vi]];
        const double cx = kLeft + slot * (static_cast<double>(vi) + 0.5);
        const double w = std::min(40.0, slot * 0.6);
        const std::string color = kPalette[vi % kPaletteSize];
        svg.line(cx, y.map(b.lo), cx, y.map(b.q1));
        svg.line(cx, y.map(b.q3), cx, y.map(b.hi));
        svg.line(cx - w / 4, y.map(b.lo), cx + w / 4, y.map(b.lo));
        svg.line(cx - w / 4, y.map(b.hi), cx + w / 4, y.map(b.hi));
        svg.rect(cx - w / 2, y.map(b.q3), w, y.map(b.q1) - y.map(b.q3), color + "33", color);
        svg.line(cx - w / 2, y.map(b.med), cx + w / 2, y.map(b.med), color, 2.0);
        svg.text(cx, kHeight - kBottom + 18, variants[vi]);
    }
    write_file(file, svg.finish());
}

void emit_heatmap(const std::vector<AggregateRow>& aggs, const std::vector<std::string>& variants,
                  const std::string& task, const std::string& swept, const fs::path& file) {
    std::set<double> value_set;
    for (const auto& a : aggs) value_set.insert(a.swept_value);
    const std::vector<double> values(value_set.begin(), value_set.end());
    std::map<std::pair<std::string, double>, double> grid;
    double lo = 1e300, hi = -1e300;
    for (const auto& a : aggs) {
        grid[{a.variant, a.swept_value}] = a.median_nrmse;
        lo = std::min(lo, a.median_nrmse);
        hi = std::max(hi, a.median_nrmse);
    }
    const double cw = std::min(90.0, (kWidth - kLeft - 40.0) / static_cast<double>(values.size()));
    const double ch = std::min(50.0, (kHeight - kTop - kBottom) / std::max<std::size_t>(
                                                                     1, variants.size()));

    Svg svg;
    svg.text((kLeft + kWidth - kRight) / 2, 22, "median NRMSE, " + task, "middle", 14.0);
    for (std::size_t r = 0; r < variants.size(); ++r) {
        svg.text(kLeft - 8, kTop + ch * (static_cast<double>(r) + 0.6), variants[r], "end");
        for (std::size_t c = 0; c < values.size(); ++c) {
            const auto it = grid.find({variants[r], values[c]});
            const double x0 = kLeft + cw * static_cast<double>(c);
            const double y0 = kTop + ch * static_cast<double>(r);
            if (it == grid.end()) {
                svg.rect(x0, y0, cw - 2, ch - 2, "#dddddd");
                continue;
            }
            const double t = hi > lo ? (it->second - lo) / (hi - lo) : 0.5;
            svg.rect(x0, y0, cw - 2, ch - 2, ramp_color(t));
            svg.text(x0 + (cw - 2) / 2, y0 + ch / 2 + 4, fmt(it->second), "middle", 11.0);
        }
    }
    for (std::size_t c = 0; c < values.size(); ++c)
        svg.text(kLeft + cw * (static_cast<double>(c) + 0.5) - 1,
                 kTop + ch * static_cast<double>(variants.size()) + 16, fmt(values[c]));
    svg.text(kLeft + cw * static_cast<double>(values.size()) / 2,
             kTop + ch * static_cast<double>(variants.size()) + 36, swept);
    write_file(file, svg.finish());
}

}  // namespace

std::vector<fs::path> emit_plots(const MetricsReport& report, const fs::path& out_dir) {
    if (report.rows.empty()) throw InvalidArgument("emit_plots: empty report");
    fs::create_directories(out_dir);
    const auto aggs = aggregate(report);
    const auto variants = variant_order(report.rows);

    std::set<std::string> tasks;
    for (const auto& r : report.rows) tasks.insert(r.task);
    std::string swept = report.rows.front().swept;
    if (swept.empty()) swept = "value";

    std::vector<fs::path> written;
    for (const auto& task : tasks) {
        std::vector<MetricRow> task_rows;
        for (const auto& r : report.rows)
            if (r.task == task) task_rows.push_back(r);
        std::vector<AggregateRow> task_aggs;
        std::set<double> task_values;
        for (const auto& a : aggs)
            if (a.task == task) {
                task_aggs.push_back(a);
                task_values.insert(a.swept_value);
            }

        if (task_values.size() >= 2) {
            const fs::path f = out_dir / ("lines_" + task + ".svg");
            emit_lines(task_aggs, variants, task, swept, f);
            written.push_back(f);
        }
        const fs::path bf = out_dir / ("box_" + task + ".svg");
        emit_box(task_rows, variants, task, bf);
        written.push_back(bf);
        const fs::path hf = out_dir / ("heatmap_" + task + ".svg");
        emit_heatmap(task_aggs, variants, task, swept, hf);
        written.push_back(hf);
    }
    return written;
}

}  // namespace goku::eval
