#include "goku/data/csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "goku/core/errors.hpp"

namespace goku::data {

namespace {

std::vector<std::string> split_row(const std::string& line) {
    std::vector<std::string> cells;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            cells.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur += ch;
        }
    }
    cells.push_back(cur);
    return cells;
}

std::string trimmed(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t");
    return s.substr(a, b - a + 1);
}

double parse_cell(const std::string& raw, long row, long col) {
    const std::string s = trimmed(raw);
    double v = 0.0;
    const char* begin = s.data();
    const char* end = begin + s.size();
    auto [ptr, ec] = std::from_chars(begin, end, v);
    if (ec != std::errc{} || ptr != end || s.empty())
        throw ParseError("not a number: \"" + s + "\"", row, col);
    return v;
}

}  // namespace

CsvIngest ingest_csv(const std::filesystem::path& file, const CsvIngestOptions& options) {
    std::ifstream in(file);
    if (!in) throw InvalidArgument("cannot open csv file: " + file.string());

    std::string line;
    if (!std::getline(in, line)) throw ParseError("empty file", 1, 1);
    std::vector<std::string> labels = split_row(line);
    for (auto& l : labels) l = trimmed(l);
    const std::size_t n_channels = labels.size();
    if (n_channels == 0) throw ParseError("empty header", 1, 1);

    std::vector<std::vector<double>> rows;  // [time][channel]
    long lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (trimmed(line).empty()) continue;
        std::vector<std::string> cells = split_row(line);
        if (cells.size() != n_channels)
            throw ParseError("expected " + std::to_string(n_channels) + " cells, found " +
                                 std::to_string(cells.size()),
                             lineno, static_cast<long>(std::min(cells.size(), n_channels)) + 1);
        std::vector<double> vals(n_channels);
        for (std::size_t c = 0; c < n_channels; ++c)
            vals[c] = parse_cell(cells[c], lineno, static_cast<long>(c) + 1);
        rows.push_back(std::move(vals));
    }
    const long t_total = static_cast<long>(rows.size());
    if (t_total < 2) throw DegenerateInput("csv has fewer than 2 time points");

    long split = options.train_split < 1.0
                     ? std::lround(std::floor(options.train_split * static_cast<double>(t_total)))
                     : std::lround(options.train_split);
    if (split < 1 || split >= t_total)
        throw InvalidArgument("csv split " + std::to_string(split) +
                              " leaves an empty train or test segment (rows: " +
                              std::to_string(t_total) + ")");

    const auto nc = static_cast<Eigen::Index>(n_channels);
    Mat all(nc, t_total);  // [channel x time]
    for (long tt = 0; tt < t_total; ++tt)
        for (Eigen::Index c = 0; c < nc; ++c)
            all(c, tt) = rows[static_cast<std::size_t>(tt)][static_cast<std::size_t>(c)];

    auto train_view = all.leftCols(split);
    Vec stds;
    if (options.per_channel_norm) {
        stds = Vec(nc);
        for (Eigen::Index c = 0; c < nc; ++c) {
            const double mean = train_view.row(c).mean();
            const double var =
                (train_view.row(c).array() - mean).square().sum() / static_cast<double>(split);
            stds[c] = std::sqrt(var);
            if (!(stds[c] > 0.0))
                throw DegenerateInput("channel \"" + labels[static_cast<std::size_t>(c)] +
                                      "\" has zero variance in the training split");
            all.row(c) /= stds[c];
        }
    } else {
        const double mean = train_view.mean();
        const double var = (train_view.array() - mean).square().sum() /
                           static_cast<double>(split * nc);
        const double sd = std::sqrt(var);
        if (!(sd > 0.0))
            throw DegenerateInput("training split has zero variance");
        stds = Vec::Constant(1, sd);
        all /= sd;
    }

    CsvIngest out;
    out.train_std = stds;
    out.train.data = Tensor3(1, nc, split);
    out.test.data = Tensor3(1, nc, t_total - split);
    out.train.data.sample(0) = all.leftCols(split);
    out.test.data.sample(0) = all.rightCols(t_total - split);
    out.train.dt_seconds = options.dt_seconds;
    out.test.dt_seconds = options.dt_seconds;
    out.train.channel_labels = labels;
    out.test.channel_labels = labels;
    out.train.provenance = file.string() + " [0, " + std::to_string(split) + ")";
    out.test.provenance =
        file.string() + " [" + std::to_string(split) + ", " + std::to_string(t_total) + ")";
    return out;
}

}  // namespace goku::data
