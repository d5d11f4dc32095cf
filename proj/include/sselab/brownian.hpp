#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "sselab/rng.hpp"
#include "sselab/statistics.hpp"

namespace sselab {

/// One Wiener realization on a uniform grid t_k = k * dt, with W(0) = 0.
struct BrownianPath {
    double dt = 0.0;
    std::vector<double> times;
    std::vector<double> values;
    RngPolicy rng;

    std::size_t steps() const { return values.empty() ? 0 : values.size() - 1; }
    double horizon() const { return times.empty() ? 0.0 : times.back(); }
    double increment(std::size_t k) const { return values[k + 1] - values[k]; }

    /// Grid index of time t; throws if t is not (to rounding) a grid point.
    std::size_t index_of(double t) const {
        if (t < 0.0 || dt <= 0.0) throw std::invalid_argument("BrownianPath: time off grid");
        const double k = std::round(t / dt);
        if (std::abs(k * dt - t) > 1e-9 * std::max(1.0, std::abs(t)) || k > static_cast<double>(steps()))
            throw std::invalid_argument("BrownianPath: time " + std::to_string(t) + " is not on the path grid");
        return static_cast<std::size_t>(k);
    }

    double at(double t) const { return values[index_of(t)]; }
};

/// Sample W on {0, dt, ..., n_steps*dt}; a pure function of `rng`.
inline BrownianPath sample_path(double dt, std::size_t n_steps, const RngPolicy& rng) {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw std::invalid_argument("sample_path: dt must be positive");
    if (n_steps == 0) throw std::invalid_argument("sample_path: n_steps must be at least 1");

    BrownianPath path;
    path.dt = dt;
    path.rng = rng;
    path.times.resize(n_steps + 1);
    path.values.resize(n_steps + 1);
    path.times[0] = 0.0;
    path.values[0] = 0.0;

    auto engine = rng.engine();
    std::normal_distribution<double> normal(0.0, std::sqrt(dt));
    for (std::size_t k = 1; k <= n_steps; ++k) {
        path.times[k] = static_cast<double>(k) * dt;
        path.values[k] = path.values[k - 1] + normal(engine);
    }
    return path;
}

/// Deterministic path with W == 0 everywhere (noise switched off).
inline BrownianPath zero_path(double dt, std::size_t n_steps) {
    if (!(dt > 0.0) || n_steps == 0) throw std::invalid_argument("zero_path: need dt > 0 and n_steps >= 1");
    BrownianPath path;
    path.dt = dt;
    path.times.resize(n_steps + 1);
    path.values.assign(n_steps + 1, 0.0);
    for (std::size_t k = 0; k <= n_steps; ++k) path.times[k] = static_cast<double>(k) * dt;
    return path;
}

/// Same realization observed on every `factor`-th grid point.
inline BrownianPath coarsen(const BrownianPath& fine, std::size_t factor) {
    if (factor == 0 || fine.steps() % factor != 0)
        throw std::invalid_argument("coarsen: factor must divide the number of steps");
    BrownianPath coarse;
    coarse.dt = fine.dt * static_cast<double>(factor);
    coarse.rng = fine.rng;
    const std::size_t n = fine.steps() / factor;
    coarse.times.resize(n + 1);
    coarse.values.resize(n + 1);
    for (std::size_t k = 0; k <= n; ++k) {
        coarse.times[k] = static_cast<double>(k) * coarse.dt;
        coarse.values[k] = fine.values[k * factor];
    }
    return coarse;
}

/// Monte Carlo estimate of E[exp(alpha W_t)]; converges to exp(alpha^2 t / 2).
/// Path i uses stream rng.stream_index + i.
inline EnsembleEstimate ito_exponential_expectation(double alpha, double t, std::size_t n_paths,
                                                    const RngPolicy& rng, std::size_t steps_per_path = 16) {
    if (n_paths < 2) throw std::invalid_argument("ito_exponential_expectation: need at least 2 paths");
    if (t < 0.0) throw std::invalid_argument("ito_exponential_expectation: t must be non-negative");
    RunningStats stats;
    if (t == 0.0 || alpha == 0.0) {
        for (std::size_t i = 0; i < n_paths; ++i) stats.add(1.0);
        return stats.estimate();
    }
    const double dt = t / static_cast<double>(steps_per_path);
    for (std::size_t i = 0; i < n_paths; ++i) {
        const auto path = sample_path(dt, steps_per_path, rng.with_stream(rng.stream_index + i));
        stats.add(std::exp(alpha * path.values.back()));
    }
    return stats.estimate();
}

/// Monte Carlo estimates of E[W_t^k] for k = 0..k_max from one shared ensemble.
inline std::vector<EnsembleEstimate> wiener_moment_estimates(int k_max, double t, std::size_t n_paths,
                                                             const RngPolicy& rng,
                                                             std::size_t steps_per_path = 16) {
    if (k_max < 0) throw std::invalid_argument("wiener_moment_estimates: k_max must be >= 0");
    if (n_paths < 2) throw std::invalid_argument("wiener_moment_estimates: need at least 2 paths");
    if (!(t > 0.0)) throw std::invalid_argument("wiener_moment_estimates: t must be positive");
    std::vector<RunningStats> stats(static_cast<std::size_t>(k_max) + 1);
    const double dt = t / static_cast<double>(steps_per_path);
    for (std::size_t i = 0; i < n_paths; ++i) {
        const double w = sample_path(dt, steps_per_path, rng.with_stream(rng.stream_index + i)).values.back();
        double power = 1.0;
        for (int k = 0; k <= k_max; ++k) {
            stats[static_cast<std::size_t>(k)].add(power);
            power *= w;
        }
    }
    std::vector<EnsembleEstimate> out;
    out.reserve(stats.size());
    for (const auto& s : stats) out.push_back(s.estimate());
    return out;
}

}  // namespace sselab
