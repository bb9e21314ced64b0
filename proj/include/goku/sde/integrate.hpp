#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "goku/ad/ops.hpp"
#include "goku/core/tensor.hpp"
#include "goku/sde/oscillator.hpp"

namespace goku::sde {

enum class Scheme { euler_maruyama, rk4_deterministic };

struct SolverConfig {
    Scheme scheme = Scheme::euler_maruyama;
    double dt = 0.05;
    double save_every = 0.05;  // must be an integer multiple of dt
    std::uint64_t noise_seed = 0;

    void validate() const;
};

struct LatentTrajectory {
    Mat states;  // [time_points x dim], first row is the initial state
    Vec times;
    OscillatorNetworkParams params;
};

using DriftFn = std::function<Vec(const Vec&)>;

// Fixed-step solve over [t_span.first, t_span.second]. Euler-Maruyama:
// z_{k+1} = z_k + f(z_k) dt + g sqrt(dt) xi_k with xi_k drawn from the
// counter-based stream keyed by (noise_seed, step, dim), so the result is
// bit-reproducible regardless of evaluation order. rk4_deterministic
// requires a zero diffusion vector.
LatentTrajectory integrate(const DriftFn& drift, const Vec& diffusion, const Vec& z0,
                           std::pair<double, double> t_span, const SolverConfig& config);

// Stuart-Landau convenience wrapper; stamps params into the trajectory.
LatentTrajectory integrate_sl(const OscillatorNetworkParams& params, const Vec& z0,
                              std::pair<double, double> t_span, const SolverConfig& config);

// Per-sample solves with noise streams keyed by (config.noise_seed, sample
// index); parallel and serial execution produce identical bytes.
std::vector<LatentTrajectory> integrate_batch(const std::vector<Vec>& z0_batch,
                                              const std::vector<OscillatorNetworkParams>& params,
                                              std::pair<double, double> t_span,
                                              const SolverConfig& config);

struct GraphSolveOptions {
    int n_steps = 0;
    double dt = 0.0;
    Scheme scheme = Scheme::euler_maruyama;
    Vec diffusion;                       // empty or all-zero -> deterministic
    std::function<Mat(int)> noise;       // standard normals [dim x cols] for step k
    // Optional: names a state column in divergence errors (e.g. which sample).
    std::function<std::string(Eigen::Index)> describe_column;
};

// Unrolled solve on the tape (discretize-then-optimize): returns the saved
// states including the initial one, so gradients flow to state0 and to
// whatever the drift callback touches. Noise enters as constant leaves.
std::vector<ad::Var> integrate_graph(const std::function<ad::Var(ad::Var)>& drift,
                                     ad::Var state0, const GraphSolveOptions& options);

}  // namespace goku::sde
