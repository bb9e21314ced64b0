#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

#include "goku/core/errors.hpp"

namespace goku {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

// Dense [samples x channels x time] array, C order, doubles in memory.
class Tensor3 {
  public:
    Tensor3() = default;
    Tensor3(std::int64_t samples, std::int64_t channels, std::int64_t time)
        : n_samples_(samples), n_channels_(channels), n_time_(time),
          data_(static_cast<std::size_t>(samples * channels * time), 0.0) {
        if (samples < 0 || channels < 0 || time < 0)
            throw InvalidArgument("Tensor3: negative dimension");
    }

    std::int64_t samples() const { return n_samples_; }
    std::int64_t channels() const { return n_channels_; }
    std::int64_t time() const { return n_time_; }
    std::int64_t size() const { return n_samples_ * n_channels_ * n_time_; }

    double& at(std::int64_t s, std::int64_t c, std::int64_t t) {
        return data_[static_cast<std::size_t>((s * n_channels_ + c) * n_time_ + t)];
    }
    double at(std::int64_t s, std::int64_t c, std::int64_t t) const {
        return data_[static_cast<std::size_t>((s * n_channels_ + c) * n_time_ + t)];
    }

    // One sample as a [channels x time] Eigen view (row-major storage).
    auto sample(std::int64_t s) {
        return Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
            data_.data() + s * n_channels_ * n_time_, n_channels_, n_time_);
    }
    auto sample(std::int64_t s) const {
        return Eigen::Map<
            const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
            data_.data() + s * n_channels_ * n_time_, n_channels_, n_time_);
    }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }

    bool all_finite() const {
        for (double v : data_)
            if (!std::isfinite(v)) return false;
        return true;
    }

  private:
    std::int64_t n_samples_ = 0;
    std::int64_t n_channels_ = 0;
    std::int64_t n_time_ = 0;
    std::vector<double> data_;
};

// Multichannel time-series batch plus sampling metadata.
struct TrajectoryBatch {
    Tensor3 data;  // [samples x channels x time]
    double dt_seconds = 0.0;
    std::vector<std::string> channel_labels;
    std::string provenance;  // manifest path or a short description
};

}  // namespace goku
