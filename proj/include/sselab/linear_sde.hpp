#pragma once

#include <complex>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "sselab/brownian.hpp"
#include "sselab/hamiltonian.hpp"

namespace sselab {

/// dC = (A_t dW + B_t dt) C + P_t dW + Q_t dt, C(0) = c0.
struct LinearSdeSpec {
    std::function<cd(double)> A;
    std::function<cd(double)> B;
    std::function<cd(double)> P;
    std::function<cd(double)> Q;
    cd c0{0.0};
};

/// The solvable sub-family: A, B constant and P_t = P e^{Kt}, Q_t = Q e^{Kt}.
struct ExponentialLinearSde {
    cd A{0.0}, B{0.0}, P{0.0}, Q{0.0}, K{0.0};
    cd c0{0.0};

    LinearSdeSpec general() const {
        const auto a = A, b = B, p = P, q = Q, k = K;
        return {[a](double) { return a; }, [b](double) { return b; },
                [p, k](double t) { return p * std::exp(k * t); }, [q, k](double t) { return q * std::exp(k * t); },
                c0};
    }
};

struct LinearSdeSolution {
    cd value{0.0};
    bool used_integrating_factor_form = false;  // (A=0 fallback or explicit request)
    std::string note;
};

/// Closed-form solution along a given path at grid time t.
///
/// Default route eliminates the P dW integral exactly:
///   C_t = X_t { c0 - (P/A)[exp(-A W_t + c t) - 1] + [(P/A)(K - B) + Q] int_0^t exp(-A W_u + c u) du },
///   X_t = exp(A W_t + (B - A^2/2) t),  c = K - B + A^2/2,
/// with the remaining time integral done by the trapezoidal rule on the path grid.
/// When A = 0 (or on request) the integrating-factor form with an Ito sum for
/// the dW integral is used instead, and the result says so.
inline LinearSdeSolution linear_sde_exact(const ExponentialLinearSde& sde, const BrownianPath& path, double t,
                                          bool integrating_factor_form = false) {
    const std::size_t n = path.index_of(t);
    const cd A = sde.A, B = sde.B, P = sde.P, Q = sde.Q, K = sde.K;
    const cd c = K - B + 0.5 * A * A;
    auto inverse_factor = [&](std::size_t k) { return std::exp(-A * path.values[k] + c * path.times[k]); };
    const cd x_t = std::exp(A * path.values[n] + (B - 0.5 * A * A) * path.times[n]);

    LinearSdeSolution out;
    if (A == cd(0.0) || integrating_factor_form) {
        out.used_integrating_factor_form = true;
        if (A == cd(0.0) && !integrating_factor_form) out.note = "A = 0: fell back to the integrating-factor form";
        cd stochastic{0.0};
        cd drift{0.0};
        for (std::size_t k = 0; k < n; ++k) {
            const cd g0 = inverse_factor(k);
            const cd g1 = inverse_factor(k + 1);
            stochastic += g0 * P * path.increment(k);
            drift += 0.5 * (g0 + g1) * (Q - A * P) * path.dt;
        }
        out.value = x_t * (sde.c0 + stochastic + drift);
        return out;
    }

    cd integral{0.0};
    for (std::size_t k = 0; k < n; ++k) integral += 0.5 * (inverse_factor(k) + inverse_factor(k + 1)) * path.dt;
    out.value = x_t * (sde.c0 - (P / A) * (inverse_factor(n) - 1.0) + ((P / A) * (K - B) + Q) * integral);
    return out;
}

/// Euler-Maruyama integration along the path; returns C at every grid point.
inline std::vector<cd> linear_sde_em(const LinearSdeSpec& sde, const BrownianPath& path) {
    if (!sde.A || !sde.B || !sde.P || !sde.Q) throw std::invalid_argument("linear_sde_em: all coefficients required");
    std::vector<cd> series(path.values.size());
    series[0] = sde.c0;
    for (std::size_t k = 0; k + 1 < path.values.size(); ++k) {
        const double t = path.times[k];
        const double dw = path.increment(k);
        const cd c = series[k];
        series[k + 1] = c + (sde.A(t) * dw + sde.B(t) * path.dt) * c + sde.P(t) * dw + sde.Q(t) * path.dt;
    }
    return series;
}

}  // namespace sselab
