#include "goku/sde/integrate.hpp"

#include <cmath>
#include <mutex>

#include "goku/core/errors.hpp"
#include "goku/core/parallel.hpp"
#include "goku/core/rng.hpp"

namespace goku::sde {

namespace {

// exact-multiple check with a little float slack
long ratio_as_steps(double whole, double part, const char* what) {
    if (part <= 0.0) throw InvalidArgument(std::string(what) + ": step must be positive");
    const double r = whole / part;
    const long n = std::lround(r);
    if (n < 1 || std::abs(r - static_cast<double>(n)) > 1e-9 * std::max(1.0, r))
        throw InvalidArgument(std::string(what) + ": " + std::to_string(whole) +
                              " is not an integer multiple of " + std::to_string(part));
    return n;
}

}  // namespace

void SolverConfig::validate() const {
    if (dt <= 0.0) throw InvalidArgument("solver config: dt must be positive");
    if (save_every <= 0.0) throw InvalidArgument("solver config: save_every must be positive");
    ratio_as_steps(save_every, dt, "solver config save_every");
}

LatentTrajectory integrate(const DriftFn& drift, const Vec& diffusion, const Vec& z0,
                           std::pair<double, double> t_span, const SolverConfig& config) {
    config.validate();
    if (!(t_span.second > t_span.first))
        throw InvalidArgument("integrate: t_span must have positive length");
    const long n_steps = ratio_as_steps(t_span.second - t_span.first, config.dt, "integrate span");
    const long stride = ratio_as_steps(config.save_every, config.dt, "integrate save_every");
    if (n_steps % stride != 0)
        throw InvalidArgument("integrate: span must cover whole save intervals");
    if (diffusion.size() != z0.size())
        throw InvalidArgument("integrate: diffusion length must match state length");
    const bool stochastic = diffusion.cwiseAbs().maxCoeff() > 0.0;
    if (config.scheme == Scheme::rk4_deterministic && stochastic)
        throw InvalidArgument("integrate: rk4_deterministic requires zero diffusion");
    if (!z0.allFinite()) throw InvalidArgument("integrate: non-finite initial state");

    const Eigen::Index dim = z0.size();
    const long n_saved = n_steps / stride + 1;
    LatentTrajectory out;
    out.states.resize(n_saved, dim);
    out.times.resize(n_saved);
    out.states.row(0) = z0.transpose();
    out.times[0] = t_span.first;

    const double sqrt_dt = std::sqrt(config.dt);
    Vec z = z0;
    long saved = 1;
    for (long k = 0; k < n_steps; ++k) {
        if (config.scheme == Scheme::euler_maruyama) {
            // intermediates are materialized so the rounding points match the
            // unrolled tape solve exactly (fp contraction would otherwise
            // fuse the multiply-adds and drift by an ulp per step)
            Vec step = drift(z) * config.dt;
            z = z + step;
            if (stochastic) {
                Vec gs = diffusion * sqrt_dt;
                Vec kick(dim);
                for (Eigen::Index d = 0; d < dim; ++d)
                    kick[d] = gs[d] * normal_at(config.noise_seed, static_cast<std::uint64_t>(k),
                                                static_cast<std::uint64_t>(d));
                z = z + kick;
            }
        } else {
            Vec k1 = drift(z);
            Vec k2 = drift(z + 0.5 * config.dt * k1);
            Vec k3 = drift(z + 0.5 * config.dt * k2);
            Vec k4 = drift(z + config.dt * k3);
            z += (config.dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        if (!z.allFinite()) throw DivergenceError("integration produced non-finite state", k);
        if ((k + 1) % stride == 0) {
            out.states.row(saved) = z.transpose();
            out.times[saved] = t_span.first + static_cast<double>(k + 1) * config.dt;
            ++saved;
        }
    }
    return out;
}

LatentTrajectory integrate_sl(const OscillatorNetworkParams& params, const Vec& z0,
                              std::pair<double, double> t_span, const SolverConfig& config) {
    params.validate();
    LatentTrajectory t = integrate(
        [&params](const Vec& z) { return sl_drift(NetworkState{z}, params); },
        sl_diffusion(params), z0, t_span, config);
    t.params = params;
    return t;
}

std::vector<LatentTrajectory> integrate_batch(const std::vector<Vec>& z0_batch,
                                              const std::vector<OscillatorNetworkParams>& params,
                                              std::pair<double, double> t_span,
                                              const SolverConfig& config) {
    if (z0_batch.size() != params.size())
        throw InvalidArgument("integrate_batch: batch size mismatch");
    std::vector<LatentTrajectory> out(z0_batch.size());
    std::exception_ptr failure;
    std::mutex failure_mu;
    par::parallel_for(static_cast<std::int64_t>(z0_batch.size()), [&](std::int64_t i) {
        try {
            SolverConfig per_sample = config;
            per_sample.noise_seed =
                combine_seed(config.noise_seed, static_cast<std::uint64_t>(i));
            out[static_cast<std::size_t>(i)] = integrate_sl(
                params[static_cast<std::size_t>(i)], z0_batch[static_cast<std::size_t>(i)],
                t_span, per_sample);
        } catch (const DivergenceError& e) {
            std::lock_guard<std::mutex> lock(failure_mu);
            if (!failure)
                failure = std::make_exception_ptr(DivergenceError(
                    "integration produced non-finite state for sample " + std::to_string(i),
                    e.step_index));
        } catch (...) {
            std::lock_guard<std::mutex> lock(failure_mu);
            if (!failure) failure = std::current_exception();
        }
    });
    if (failure) std::rethrow_exception(failure);
    return out;
}

std::vector<ad::Var> integrate_graph(const std::function<ad::Var(ad::Var)>& drift,
                                     ad::Var state0, const GraphSolveOptions& options) {
    if (options.n_steps < 0) throw InvalidArgument("integrate_graph: negative step count");
    if (options.dt <= 0.0) throw InvalidArgument("integrate_graph: dt must be positive");
    const bool stochastic =
        options.diffusion.size() > 0 && options.diffusion.cwiseAbs().maxCoeff() > 0.0;
    if (stochastic && options.scheme == Scheme::rk4_deterministic)
        throw InvalidArgument("integrate_graph: rk4_deterministic requires zero diffusion");
    if (stochastic && !options.noise)
        throw InvalidArgument("integrate_graph: stochastic solve needs a noise source");
    if (stochastic && options.diffusion.size() != state0.rows())
        throw InvalidArgument("integrate_graph: diffusion length must match state dim");

    ad::Graph& g = *state0.g;
    const double dt = options.dt;
    const double sqrt_dt = std::sqrt(dt);
    std::vector<ad::Var> states;
    states.reserve(static_cast<std::size_t>(options.n_steps) + 1);
    states.push_back(state0);
    for (int k = 0; k < options.n_steps; ++k) {
        ad::Var s = states.back();
        ad::Var next{nullptr, -1};
        if (options.scheme == Scheme::euler_maruyama) {
            next = ad::add(s, ad::scale(drift(s), dt));
            if (stochastic) {
                Mat xi = options.noise(k);
                if (xi.rows() != s.rows() || xi.cols() != s.cols())
                    throw InvalidArgument("integrate_graph: noise shape mismatch");
                Mat term = (options.diffusion * sqrt_dt).asDiagonal() * xi;
                next = ad::add(next, ad::make_constant(g, std::move(term)));
            }
        } else {
            ad::Var k1 = drift(s);
            ad::Var k2 = drift(ad::add(s, ad::scale(k1, 0.5 * dt)));
            ad::Var k3 = drift(ad::add(s, ad::scale(k2, 0.5 * dt)));
            ad::Var k4 = drift(ad::add(s, ad::scale(k3, dt)));
            ad::Var sum = ad::add(ad::add(k1, k4), ad::scale(ad::add(k2, k3), 2.0));
            next = ad::add(s, ad::scale(sum, dt / 6.0));
        }
        if (!next.value().allFinite()) {
            std::string msg = "graph integration produced non-finite state";
            if (options.describe_column) {
                const Mat& v = next.value();
                for (Eigen::Index j = 0; j < v.cols(); ++j)
                    if (!v.col(j).allFinite()) {
                        msg += " (" + options.describe_column(j) + ")";
                        break;
                    }
            }
            throw DivergenceError(msg, k);
        }
        states.push_back(next);
    }
    return states;
}

}  // namespace goku::sde
