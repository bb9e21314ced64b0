#pragma once

#include <filesystem>

#include "goku/core/tensor.hpp"

namespace goku::data {

struct CsvIngestOptions {
    double dt_seconds = 1.0;
    // < 1: fraction of rows assigned to training; >= 1: row count.
    double train_split = 0.7;
    bool per_channel_norm = false;  // default: one scalar std over the training split
};

struct CsvIngest {
    TrajectoryBatch train;  // [1 x channels x t_train]
    TrajectoryBatch test;   // [1 x channels x t_test]
    Vec train_std;          // length 1, or channels when per_channel_norm
};

// One CSV file is one sample: a header row naming the channels, then one row
// per time point. Both splits are divided by the standard deviation of the
// training split (population form).
CsvIngest ingest_csv(const std::filesystem::path& file, const CsvIngestOptions& options);

}  // namespace goku::data
