#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sselab/brownian.hpp"
#include "sselab/errors.hpp"
#include "sselab/hamiltonian.hpp"
#include "sselab/system.hpp"

namespace sselab {

/// Schrodinger-picture state. `norm_defect` is |psi|^2 - 1 of the most recent
/// step before renormalization.
struct StateVector {
    VectorXcd amplitudes;
    double time = 0.0;
    double norm_defect = 0.0;

    static StateVector basis(Eigen::Index dim, Eigen::Index index) {
        StateVector s;
        s.amplitudes = VectorXcd::Zero(dim);
        s.amplitudes(index) = 1.0;
        return s;
    }
};

/// One Euler-Maruyama step of the energy-driven equation
///   d psi = -iH psi dt - (sigma^2/8)(H - <H>)^2 psi dt + (sigma/2)(H - <H>) psi dW,
/// with <H> taken in the pre-step state, followed by renormalization.
inline StateVector sse_step(const StateVector& state, const Hamiltonian& h, double sigma, double dW, double dt) {
    if (!(dt > 0.0)) throw std::invalid_argument("sse_step: dt must be positive");
    const VectorXcd& psi = state.amplitudes;
    if (psi.size() != h.dim()) throw std::invalid_argument("sse_step: state dimension does not match H");
    if (std::abs(psi.squaredNorm() - 1.0) > 1e-6) throw std::invalid_argument("sse_step: state is not normalized");

    const cd i(0.0, 1.0);
    const VectorXcd h_psi = h.apply(psi);
    const double mean_energy = psi.dot(h_psi).real();
    const VectorXcd deviation = h_psi - mean_energy * psi;
    StateVector next;
    next.time = state.time + dt;
    if (sigma == 0.0) {
        next.amplitudes = psi - i * dt * h_psi;
    } else {
        const VectorXcd deviation2 = h.apply(deviation) - mean_energy * deviation;
        next.amplitudes = psi - (i * dt) * h_psi - (sigma * sigma / 8.0 * dt) * deviation2 +
                          (0.5 * sigma * dW) * deviation;
    }
    const double norm2 = next.amplitudes.squaredNorm();
    if (!std::isfinite(norm2) || norm2 == 0.0)
        throw NumericFailure("sse_step: state blew up at t = " + std::to_string(state.time), state.time);
    next.norm_defect = norm2 - 1.0;
    next.amplitudes /= std::sqrt(norm2);
    return next;
}

/// Exact solution of the imaginary-noise equation,
/// psi(t) = exp[-iH (t - sigma W_t / 2)] psi0, from a precomputed spectrum.
class ImaginaryNoisePropagator {
public:
    ImaginaryNoisePropagator(Eigensystem spectrum, const VectorXcd& psi0)
        : spectrum_(std::move(spectrum)), coefficients_(spectrum_.vectors.adjoint() * psi0) {
        if (std::abs(psi0.squaredNorm() - 1.0) > 1e-9)
            throw std::invalid_argument("ImaginaryNoisePropagator: initial state is not normalized");
    }

    ImaginaryNoisePropagator(const Hamiltonian& h, const VectorXcd& psi0) : ImaginaryNoisePropagator(eigensystem(h), psi0) {}

    /// State at effective time tau = t - sigma W_t / 2.
    VectorXcd at_effective_time(double tau) const {
        const cd i(0.0, 1.0);
        VectorXcd phased(coefficients_.size());
        for (Eigen::Index k = 0; k < phased.size(); ++k)
            phased(k) = std::exp(-i * spectrum_.energies(k) * tau) * coefficients_(k);
        return spectrum_.vectors * phased;
    }

    StateVector propagate(double sigma, double t, double w_t) const {
        StateVector s;
        s.amplitudes = at_effective_time(t - 0.5 * sigma * w_t);
        s.time = t;
        return s;
    }

private:
    Eigensystem spectrum_;
    VectorXcd coefficients_;
};

inline StateVector imaginary_noise_propagate(const StateVector& psi0, const Hamiltonian& h, double sigma, double t,
                                             double w_t) {
    return ImaginaryNoisePropagator(h, psi0.amplitudes).propagate(sigma, t, w_t);
}

/// Interaction-picture coefficients C_n(t), psi = sum_n |n> exp(-i E_n t) C_n.
struct CoefficientState {
    VectorXcd C;
    double time = 0.0;

    static CoefficientState initial(const SystemSpec& spec) {
        CoefficientState c;
        c.C = VectorXcd::Zero(static_cast<Eigen::Index>(spec.dim()));
        c.C(static_cast<Eigen::Index>(spec.initial)) = 1.0;
        return c;
    }

    /// Schrodinger-picture amplitudes.
    VectorXcd amplitudes(const SystemSpec& spec) const {
        const cd i(0.0, 1.0);
        VectorXcd psi(C.size());
        for (Eigen::Index n = 0; n < C.size(); ++n)
            psi(n) = std::exp(-i * spec.energies[static_cast<std::size_t>(n)] * time) * C(n);
        return psi;
    }
};

/// The linear split system for manifold and off-manifold coefficients, valid
/// to leading order in V when V vanishes inside the manifold.
class LinearizedSystem {
public:
    LinearizedSystem(const SystemSpec& spec, double sigma) : sigma_(sigma) {
        spec.validate();
        if (!spec.satisfies_selection_rule())
            throw std::invalid_argument(
                "linearized_step: V has matrix elements inside the manifold; the linearization does not apply, "
                "integrate the full equation with sse_step instead");
        const cd i(0.0, 1.0);
        manifold_.assign(spec.manifold.begin(), spec.manifold.end());
        off_ = spec.off_manifold();
        e_s_ = spec.e_s();
        const auto d = static_cast<Eigen::Index>(manifold_.size());
        const auto n_off = static_cast<Eigen::Index>(off_.size());
        offsets_.resize(n_off);
        f_.resize(n_off);
        coupling_.resize(d, n_off);
        for (Eigen::Index k = 0; k < n_off; ++k) {
            const auto m = static_cast<Eigen::Index>(off_[static_cast<std::size_t>(k)]);
            offsets_(k) = spec.energies[off_[static_cast<std::size_t>(k)]] - e_s_;
            f_(k) = 1.0 - i * sigma * sigma / 8.0 * offsets_(k);
            for (Eigen::Index a = 0; a < d; ++a)
                coupling_(a, k) = spec.V(static_cast<Eigen::Index>(manifold_[static_cast<std::size_t>(a)]), m);
        }
        const MatrixXcd v2 = spec.V * spec.V;
        v2_manifold_.resize(d, d);
        for (Eigen::Index a = 0; a < d; ++a)
            for (Eigen::Index b = 0; b < d; ++b)
                v2_manifold_(a, b) = v2(static_cast<Eigen::Index>(manifold_[static_cast<std::size_t>(a)]),
                                        static_cast<Eigen::Index>(manifold_[static_cast<std::size_t>(b)]));
    }

    double sigma() const { return sigma_; }

    CoefficientState step(const CoefficientState& state, double dW, double dt) const {
        if (!(dt > 0.0)) throw std::invalid_argument("linearized_step: dt must be positive");
        const cd i(0.0, 1.0);
        const double t = state.time;
        const auto d = static_cast<Eigen::Index>(manifold_.size());
        const auto n_off = static_cast<Eigen::Index>(off_.size());
        const double half_sigma = 0.5 * sigma_;

        VectorXcd cs(d);
        for (Eigen::Index a = 0; a < d; ++a) cs(a) = state.C(static_cast<Eigen::Index>(manifold_[static_cast<std::size_t>(a)]));

        CoefficientState next = state;
        next.time = t + dt;

        // Manifold: -(sigma^2/8)(V^2)_ab C_b dt + sum_n e^{i(E_s-E_n)t} (gamma1 dW + gamma2 dt) C_n.
        VectorXcd d_cs = -(sigma_ * sigma_ / 8.0 * dt) * (v2_manifold_ * cs);
        for (Eigen::Index k = 0; k < n_off; ++k) {
            const cd cn = state.C(static_cast<Eigen::Index>(off_[static_cast<std::size_t>(k)]));
            if (cn == cd(0.0)) continue;
            const cd phase = std::exp(-i * offsets_(k) * t);
            const cd weight = phase * (half_sigma * dW - i * f_(k) * dt) * cn;
            d_cs += coupling_.col(k) * weight;
        }

        // Off-manifold: (alpha1 dW + alpha2 dt) C_m + e^{i(E_m-E_s)t} sum_a (gamma1 dW + gamma2 dt) C_{s_a}.
        const VectorXcd source = coupling_.adjoint() * cs;  // sum_a V_{m s_a} C_{s_a}
        for (Eigen::Index k = 0; k < n_off; ++k) {
            const auto m = static_cast<Eigen::Index>(off_[static_cast<std::size_t>(k)]);
            const double alpha1 = half_sigma * offsets_(k);
            const double alpha2 = -0.5 * alpha1 * alpha1;
            const cd phase = std::exp(i * offsets_(k) * t);
            next.C(m) += (alpha1 * dW + alpha2 * dt) * state.C(m) + phase * (half_sigma * dW - i * f_(k) * dt) * source(k);
        }
        for (Eigen::Index a = 0; a < d; ++a) next.C(static_cast<Eigen::Index>(manifold_[static_cast<std::size_t>(a)])) += d_cs(a);
        if (!next.C.allFinite()) throw NumericFailure("linearized_step: non-finite coefficients", t);
        return next;
    }

private:
    double sigma_;
    double e_s_ = 0.0;
    std::vector<std::size_t> manifold_;
    std::vector<std::size_t> off_;
    Eigen::VectorXd offsets_;
    VectorXcd f_;
    MatrixXcd coupling_;      // V_{s_a m}, manifold rows by off-manifold columns
    MatrixXcd v2_manifold_;   // (V^2)_{s_a s_b}
};

inline CoefficientState linearized_step(const CoefficientState& coeffs, const SystemSpec& spec, double sigma, double dW,
                                        double dt) {
    return LinearizedSystem(spec, sigma).step(coeffs, dW, dt);
}

/// Size of the terms the linearization drops, sigma * |V|^2 * t. Reported only.
inline double linearization_diagnostic(const SystemSpec& spec, double sigma, double t) {
    const double v_norm = spec.V.operatorNorm();
    return std::abs(sigma) * v_norm * v_norm * t;
}

/// Closed-form pathwise coefficient for a non-degenerate decaying state:
///   C_m(t) = V_ms / (E_s - E_m + M - i Gamma/2)
///            * { exp[i(E_m - E_s - M)t - Gamma t/2] - exp[sigma (E_m - E_s) W_t/2 - sigma^2 (E_m - E_s)^2 t/4] }.
inline cd pathwise_cm(const SystemSpec& spec, const WWParams& ww, double sigma, std::size_t m, double w_t, double t) {
    if (spec.manifold_dim() != 1) throw std::invalid_argument("pathwise_cm: requires a non-degenerate initial state");
    if (m >= spec.dim() || spec.in_manifold(m)) throw std::invalid_argument("pathwise_cm: m must be a decay channel");
    const cd i(0.0, 1.0);
    const double offset = spec.energies[m] - spec.e_s();
    const double mass = ww.mass_shift();
    const double width = ww.width();
    const cd v_ms = spec.V(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(spec.initial));
    const cd prefactor = v_ms / (-offset + mass - i * 0.5 * width);
    const cd decaying = std::exp(i * (offset - mass) * t - 0.5 * width * t);
    const double fluctuating = std::exp(0.5 * sigma * offset * w_t - 0.25 * sigma * sigma * offset * offset * t);
    return prefactor * (decaying - fluctuating);
}

inline cd pathwise_cm(const SystemSpec& spec, const WWParams& ww, double sigma, std::size_t m, const BrownianPath& path,
                      double t) {
    return pathwise_cm(spec, ww, sigma, m, path.at(t), t);
}

}  // namespace sselab
