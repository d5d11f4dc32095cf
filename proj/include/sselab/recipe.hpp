#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>

#include "sselab/errors.hpp"
#include "sselab/gauss_hermite.hpp"

namespace sselab {

/// E[f(t - sigma W_t / 2)] over W_t ~ Normal(0, t). Turns a sigma = 0
/// probability-vs-time curve into its stochastic expectation.
/// f is evaluated as given on negative arguments; see negative_argument_mass.
template <class F>
double recipe_transform(F&& f, double sigma, double t, int order = kDefaultHermiteOrder) {
    if (sigma == 0.0) {
        if (t < 0.0) throw std::invalid_argument("recipe_transform: t must be non-negative");
        return f(t);
    }
    return gaussian_expectation(std::forward<F>(f), t, sigma, order);
}

/// Probability that t - sigma W_t / 2 < 0, i.e. Phi(-2 sqrt(t) / sigma).
inline double negative_argument_mass(double sigma, double t) {
    if (t < 0.0) throw std::invalid_argument("negative_argument_mass: t must be non-negative");
    if (sigma == 0.0) return 0.0;
    if (t == 0.0) return 0.5;
    const double z = 2.0 * std::sqrt(t) / std::abs(sigma);
    return 0.5 * std::erfc(z / std::sqrt(2.0));
}

/// E[W_t^k]: zero for odd k, (k-1)!! t^{k/2} for even k.
inline double wt_moments(int k, double t) {
    if (k < 0) throw std::invalid_argument("wt_moments: k must be >= 0");
    if (t < 0.0) throw std::invalid_argument("wt_moments: t must be non-negative");
    if (k % 2 == 1) return 0.0;
    double double_factorial = 1.0;
    for (int j = k - 1; j > 1; j -= 2) double_factorial *= j;
    return double_factorial * std::pow(t, k / 2);
}

/// Gamma (1 - sigma^2 Gamma / 8), with a warning once the factor is no longer positive.
inline Diagnosed<double> corrected_decay_rate(double gamma, double sigma) {
    if (!(gamma >= 0.0)) throw std::invalid_argument("corrected_decay_rate: gamma must be >= 0");
    Diagnosed<double> out;
    const double factor = 1.0 - sigma * sigma * gamma / 8.0;
    out.value = gamma * factor;
    if (gamma > 0.0 && factor <= 0.0)
        out.warnings.push_back("domain-warning: sigma^2 Gamma >= 8, corrected rate " + std::to_string(out.value));
    return out;
}

}  // namespace sselab
