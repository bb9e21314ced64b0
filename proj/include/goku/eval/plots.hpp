#pragma once

#include <filesystem>
#include <vector>

#include "goku/eval/metrics.hpp"

namespace goku::eval {

// Five-number summary; quartiles use linear interpolation between order
// statistics. Throws InvalidArgument on an empty input.
struct BoxStats {
    double lo = 0.0;
    double q1 = 0.0;
    double med = 0.0;
    double q3 = 0.0;
    double hi = 0.0;
};

BoxStats box_stats(std::vector<double> values);

// Writes SVG figures for a report under out_dir, one set per task present:
//  - lines_<task>.svg: median NRMSE against the swept value, one line per
//    variant with a shaded standard-error band (emitted when the report
//    spans at least two swept values);
//  - box_<task>.svg: one box per variant over the row NRMSE distribution;
//  - heatmap_<task>.svg: variant x swept-value grid colored by the median.
// Returns the paths written. Throws InvalidArgument on an empty report.
std::vector<std::filesystem::path> emit_plots(const MetricsReport& report,
                                              const std::filesystem::path& out_dir);

}  // namespace goku::eval
