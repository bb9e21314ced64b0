#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>

#include "goku/core/container.hpp"
#include "goku/core/tensor.hpp"
#include "goku/sde/integrate.hpp"

namespace goku::data {

// Recipe for the projected oscillator benchmark. Latent trajectories are
// simulated per sample, the first trim_steps points dropped, and every state
// vector pushed through one shared random [output_dim x 2N] projection.
struct SyntheticDatasetSpec {
    int n_oscillators = 3;
    int output_dim = 784;
    int n_train = 5000;
    int n_test = 900;
    std::array<double, 2> growth_range{-0.2, 0.2};
    std::array<double, 2> frequency_range{0.08 * 3.14159265358979323846,
                                          0.14 * 3.14159265358979323846};
    std::array<double, 2> coupling_range{0.0, 0.2};
    double global_coupling = 0.1;
    double noise_intensity = 0.02;
    double rate_scale = 20.0;
    std::array<double, 2> init_range{0.3, 0.4};
    double total_time = 35.0;
    double dt = 0.05;
    int trim_steps = 100;
    std::array<double, 2> projection_range{-1.0, 1.0};
    std::uint64_t master_seed = 0;

    void validate() const;
    long steps_total() const;                              // total_time / dt
    long time_points() const { return steps_total() - trim_steps; }
};

void to_json(nlohmann::json& j, const SyntheticDatasetSpec& s);
void from_json(const nlohmann::json& j, SyntheticDatasetSpec& s);

struct SampleDraw {
    sde::OscillatorNetworkParams params;
    Vec init_state;  // length 2N
};

// Uniform draws from a stream keyed by (master_seed, sample_index); the draw
// order is growth, frequency, coupling (row-major), initial state.
SampleDraw sample_generator_params(const SyntheticDatasetSpec& spec, long sample_index);

// Euler-Maruyama solve over total_time; the initial point and the first
// trim_steps saved points are dropped, leaving time_points() rows.
sde::LatentTrajectory generate_latent(const SyntheticDatasetSpec& spec, long sample_index);

Mat make_projection(const SyntheticDatasetSpec& spec, std::uint64_t seed);

struct Dataset {
    TrajectoryBatch train;   // [n_train x output_dim x time_points]
    TrajectoryBatch test;    // [n_test x output_dim x time_points]
    Tensor3 train_latents;   // [n_train x 2N x time_points] ground truth
    Tensor3 test_latents;
    Mat projection;          // [output_dim x 2N]
    nlohmann::json manifest;
};

// Manifest (spec echo, seeds, array shapes) without generating anything.
nlohmann::json describe_dataset(const SyntheticDatasetSpec& spec);

// Train samples take indices [0, n_train), test samples the following
// n_test, so the splits never share a parameter stream.
Dataset build_dataset(const SyntheticDatasetSpec& spec);

void save_dataset(const Dataset& ds, const std::filesystem::path& dir);
Dataset load_dataset(const std::filesystem::path& dir);

}  // namespace goku::data
