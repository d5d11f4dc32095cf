#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include "sselab/errors.hpp"
#include "sselab/hamiltonian.hpp"
#include "sselab/quadrature.hpp"
#include "sselab/system.hpp"

namespace sselab {

/// A final state |m> reachable from the decaying state.
struct DecayChannel {
    double e_m = 0.0;
    cd v_ms{0.0};

    void validate() const {
        if (!std::isfinite(e_m) || !std::isfinite(v_ms.real()) || !std::isfinite(v_ms.imag()))
            throw std::invalid_argument("DecayChannel: non-finite entry");
    }
};

/// Every state outside the manifold as a channel of the initial state.
inline std::vector<DecayChannel> decay_channels(const SystemSpec& spec) {
    std::vector<DecayChannel> out;
    for (auto m : spec.off_manifold())
        out.push_back({spec.energies[m], spec.V(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(spec.initial))});
    return out;
}

namespace detail {
inline void require_scalar(const WWParams& ww, const char* who) {
    if (ww.dim() != 1) throw std::invalid_argument(std::string(who) + ": needs a non-degenerate (D = 1) initial state");
}
inline void require_time(double t, const char* who) {
    if (!(t >= 0.0) || !std::isfinite(t)) throw std::invalid_argument(std::string(who) + ": t must be >= 0");
}
}  // namespace detail

/// E|C_s(t)|^2 = exp[-Gamma(1 - sigma^2 Gamma/8) t].
inline Diagnosed<double> survival_expectation(const WWParams& ww, double sigma, double t) {
    detail::require_scalar(ww, "survival_expectation");
    detail::require_time(t, "survival_expectation");
    const double gamma = ww.width();
    Diagnosed<double> out;
    const double factor = 1.0 - sigma * sigma * gamma / 8.0;
    out.value = std::exp(-gamma * factor * t);
    if (factor <= 0.0)
        out.warnings.push_back("domain-warning: sigma^2 Gamma / 8 >= 1, the corrected decay rate is not positive");
    return out;
}

/// exp[-(iM + Gamma/2) t]; column A holds E[C_{s_a}(t)] for initial state s_A.
inline MatrixXcd survival_expectation_degenerate(const WWParams& ww, double t) {
    detail::require_time(t, "survival_expectation_degenerate");
    if (ww.M.rows() != ww.M.cols() || ww.Gamma.rows() != ww.M.rows() || ww.Gamma.cols() != ww.M.cols())
        throw std::invalid_argument("survival_expectation_degenerate: M and Gamma must be square and equal-sized");
    const cd i(0.0, 1.0);
    const MatrixXcd generator = -(i * ww.M + 0.5 * ww.Gamma) * t;
    return generator.exp();
}

enum class TransitionMode { exact, leading_order };

/// E|C_m(t)|^2 for one channel.
///
/// exact:
///   |V|^2/(d^2 + Gamma^2/4) { exp[-Gamma(1 - s Gamma/8)t] + 1
///        - 2 exp[-(Gamma/2)(1 - s Gamma/16)t - s d^2 t/8] cos[d (1 - s Gamma/8) t] },
/// with d = E_s - E_m + M and s = sigma^2.
/// leading_order:
///   |V|^2/(d^2 + Gamma^2/4) { exp(-Gamma t) + 1 - 2 exp[-s (E_m - E_s)^2 t/8 - Gamma t/2] cos(d t) }.
inline double transition_expectation(const WWParams& ww, const DecayChannel& channel, double sigma, double t,
                                     TransitionMode mode = TransitionMode::exact) {
    detail::require_scalar(ww, "transition_expectation");
    detail::require_time(t, "transition_expectation");
    channel.validate();
    const double gamma = ww.width();
    const double detuning = ww.e_s - channel.e_m + ww.mass_shift();
    const double denominator = detuning * detuning + 0.25 * gamma * gamma;
    if (denominator == 0.0)
        throw std::domain_error("transition_expectation: Gamma = 0 on resonance, the amplitude prefactor diverges");
    const double s = sigma * sigma;
    const double weight = std::norm(channel.v_ms) / denominator;
    if (mode == TransitionMode::leading_order) {
        const double offset = channel.e_m - ww.e_s;
        return weight * (std::exp(-gamma * t) + 1.0 -
                         2.0 * std::exp(-s * offset * offset * t / 8.0 - 0.5 * gamma * t) * std::cos(detuning * t));
    }
    return weight * (std::exp(-gamma * (1.0 - s * gamma / 8.0) * t) + 1.0 -
                     2.0 * std::exp(-0.5 * gamma * (1.0 - s * gamma / 16.0) * t - s * detuning * detuning * t / 8.0) *
                         std::cos(detuning * (1.0 - s * gamma / 8.0) * t));
}

/// The sigma = 0 transition probability as a function of (possibly negative) time.
inline double transition_probability_standard(const WWParams& ww, const DecayChannel& channel, double u) {
    const double gamma = ww.width();
    const double detuning = ww.e_s - channel.e_m + ww.mass_shift();
    const double denominator = detuning * detuning + 0.25 * gamma * gamma;
    if (denominator == 0.0) throw std::domain_error("transition_probability_standard: divergent prefactor");
    return std::norm(channel.v_ms) / denominator *
           (std::exp(-gamma * u) + 1.0 - 2.0 * std::exp(-0.5 * gamma * u) * std::cos(detuning * u));
}

/// Sum of transition_expectation over every channel of `spec`.
inline double summed_transition_expectation(const WWParams& ww, const SystemSpec& spec, double sigma, double t,
                                            TransitionMode mode = TransitionMode::exact) {
    double total = 0.0;
    for (const auto& channel : decay_channels(spec)) total += transition_expectation(ww, channel, sigma, t, mode);
    return total;
}

/// |V_ms|^2 / [(E_s - E_m + M)^2 + Gamma^2/4].
inline double lorentzian_profile(const WWParams& ww, const DecayChannel& channel) {
    detail::require_scalar(ww, "lorentzian_profile");
    channel.validate();
    const double detuning = ww.e_s - channel.e_m + ww.mass_shift();
    const double gamma = ww.width();
    const double denominator = detuning * detuning + 0.25 * gamma * gamma;
    if (denominator == 0.0) throw std::domain_error("lorentzian_profile: Gamma = 0 on resonance diverges");
    return std::norm(channel.v_ms) / denominator;
}

/// F[A, t] = int du { e^{-Gamma t} + 1 - 2 exp[-A(u^2 + b^2) - b] cos u } / (u^2 + b^2),  b = Gamma t / 2.
///
/// The integrand is even. [0, L] with L = 10 max(1, Gamma t, 1/sqrt(A)) goes to
/// adaptive quadrature; beyond L the constant part is integrated analytically,
/// the cosine part is negligible for A > 0 (its envelope is below e^{-100})
/// and for A = 0 is evaluated along the ray u = L + iy.
inline QuadratureResult golden_rule_F_detailed(double A, double t, double gamma, double tolerance = 1e-10) {
    if (!(t > 0.0)) throw std::invalid_argument("golden_rule_F: t must be positive");
    if (!(A >= 0.0)) throw std::invalid_argument("golden_rule_F: A must be >= 0");
    if (!(gamma >= 0.0)) throw std::invalid_argument("golden_rule_F: gamma must be >= 0");
    if (!(tolerance > 0.0)) throw std::invalid_argument("golden_rule_F: tolerance must be positive");

    const double b = 0.5 * gamma * t;
    const double b2 = b * b;
    const double constant = std::exp(-2.0 * b) + 1.0;
    double span = std::max(1.0, 2.0 * b);
    if (A > 0.0) span = std::max(span, 1.0 / std::sqrt(A));
    const double L = 10.0 * span;

    auto integrand = [&](double u) {
        const double u2 = u * u;
        const double damping = std::exp(-A * (u2 + b2) - b);
        const double denominator = u2 + b2;
        if (denominator < 1e-16) return 1.0 + 2.0 * A;  // b = 0, u -> 0 limit
        return (constant - 2.0 * damping * std::cos(u)) / denominator;
    };

    auto head = integrate_adaptive(integrand, 0.0, L, 0.25 * tolerance, 0.0, 200000);

    double tail = b > 0.0 ? constant * (0.5 * std::numbers::pi - std::atan(L / b)) / b : constant / L;
    double tail_error = 0.0;
    if (A == 0.0) {
        const cd i(0.0, 1.0);
        const cd phase = std::exp(i * L);
        auto re_part = [&](double y) {
            const cd z = L + i * y;
            return (i * phase * std::exp(-y) / (z * z + b2)).real();
        };
        auto ray = integrate_adaptive(re_part, 0.0, 60.0, 0.25 * tolerance, 0.0, 20000);
        tail -= 2.0 * std::exp(-b) * ray.value;
        tail_error = ray.error;
    }
    QuadratureResult out;
    out.value = 2.0 * (head.value + tail);
    out.error = 2.0 * (head.error + tail_error);
    out.evaluations = head.evaluations;
    return out;
}

inline double golden_rule_F(double A, double t, double gamma, double tolerance = 1e-10) {
    return golden_rule_F_detailed(A, t, gamma, tolerance).value;
}

/// (2 pi / Gamma t)(1 - e^{-Gamma t}), the A = 0 value of F.
inline double golden_rule_F_closed_form(double t, double gamma) {
    const double x = gamma * t;
    if (x < 1e-8) return 2.0 * std::numbers::pi * (1.0 - 0.5 * x);
    return 2.0 * std::numbers::pi / x * -std::expm1(-x);
}

/// 2 sigma sqrt(pi / 2t) exp(-2t / sigma^2), bounding |F[sigma^2/8t, t] - F[0, t]|.
inline double golden_rule_correction_bound(double sigma, double t) {
    if (!(t > 0.0) || !(sigma > 0.0)) throw std::invalid_argument("golden_rule_correction_bound: needs t > 0, sigma > 0");
    return 2.0 * sigma * std::sqrt(std::numbers::pi / (2.0 * t)) * std::exp(-2.0 * t / (sigma * sigma));
}

}  // namespace sselab
