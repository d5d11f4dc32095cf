#pragma once

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

#include "sselab/errors.hpp"

namespace sselab {

inline constexpr int kDefaultHermiteOrder = 64;

/// Gauss-Hermite rule for the weight exp(-x^2) on the real line.
struct GaussHermiteRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

namespace detail {

// Orthonormal Hermite recurrence; returns p_n(x) and writes p_{n-1}(x).
inline double orthonormal_hermite(int n, double x, double& previous) {
    double p0 = std::pow(std::numbers::pi, -0.25);
    double pm1 = 0.0;
    for (int j = 1; j <= n; ++j) {
        const double pj = x * std::sqrt(2.0 / j) * p0 - std::sqrt((j - 1.0) / j) * pm1;
        pm1 = p0;
        p0 = pj;
    }
    previous = pm1;
    return p0;
}

inline GaussHermiteRule build_gauss_hermite(int order) {
    // Golub-Welsch for the starting points, then Newton polishing on the
    // orthonormal recurrence so tail weights keep full relative precision.
    Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(order, order);
    for (int k = 1; k < order; ++k) {
        jacobi(k, k - 1) = jacobi(k - 1, k) = std::sqrt(k / 2.0);
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(jacobi, Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success) throw NumericFailure("Gauss-Hermite: eigen solve failed");

    GaussHermiteRule rule;
    rule.nodes.resize(static_cast<std::size_t>(order));
    rule.weights.resize(static_cast<std::size_t>(order));
    for (int i = 0; i < order; ++i) {
        double x = solver.eigenvalues()(i);
        double derivative = 0.0;
        for (int iter = 0; iter < 8; ++iter) {
            double prev = 0.0;
            const double p = orthonormal_hermite(order, x, prev);
            derivative = std::sqrt(2.0 * order) * prev;
            const double step = p / derivative;
            x -= step;
            if (std::abs(step) <= 1e-15 * std::max(1.0, std::abs(x))) break;
        }
        double prev = 0.0;
        orthonormal_hermite(order, x, prev);
        derivative = std::sqrt(2.0 * order) * prev;
        rule.nodes[static_cast<std::size_t>(i)] = x;
        rule.weights[static_cast<std::size_t>(i)] = 2.0 / (derivative * derivative);
    }
    return rule;
}

}  // namespace detail

/// Cached rule of the given order (thread-safe).
inline const GaussHermiteRule& gauss_hermite_rule(int order) {
    if (order < 1) throw std::invalid_argument("gauss_hermite_rule: order must be >= 1");
    static std::mutex mutex;
    static std::map<int, std::unique_ptr<GaussHermiteRule>> cache;
    std::lock_guard lock(mutex);
    auto& slot = cache[order];
    if (!slot) slot = std::make_unique<GaussHermiteRule>(detail::build_gauss_hermite(order));
    return *slot;
}

/// E[f(t - sigma W_t / 2)] with W_t ~ Normal(0, t), by Gauss-Hermite quadrature.
/// Exact for polynomials in the argument of degree <= 2*order - 1.
template <class F>
double gaussian_expectation(F&& f, double t, double sigma, int order = kDefaultHermiteOrder) {
    if (t < 0.0) throw std::invalid_argument("gaussian_expectation: t must be non-negative");
    if (order < 1) throw std::invalid_argument("gaussian_expectation: quadrature order must be >= 1");
    const auto& rule = gauss_hermite_rule(order);
    // W_t = sqrt(2t) x for the exp(-x^2) weight.
    const double scale = 0.5 * sigma * std::sqrt(2.0 * t);
    double sum = 0.0;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
        const double u = t - scale * rule.nodes[i];
        const double value = f(u);
        if (!std::isfinite(value))
            throw NumericFailure("gaussian_expectation: non-finite integrand at u = " + std::to_string(u), u, i);
        sum += rule.weights[i] * value;
    }
    return sum / std::sqrt(std::numbers::pi);
}

}  // namespace sselab
