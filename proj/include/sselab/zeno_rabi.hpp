#pragma once

#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>

#include <Eigen/Dense>

#include "sselab/hamiltonian.hpp"
#include "sselab/system.hpp"

namespace sselab {

/// Two-level state through rho = (1 - R . tau) / 2, so R_i = -Tr(rho tau_i).
/// Index 1 is the upper level: P+ = rho_11 = (1 + R_3)/2.
struct BlochState {
    Eigen::Vector3d R = Eigen::Vector3d::Zero();
    double time = 0.0;

    void validate() const {
        if (!R.allFinite()) throw std::invalid_argument("BlochState: non-finite component");
        if (R.norm() > 1.0 + 1e-9) throw std::invalid_argument("BlochState: |R| exceeds 1");
    }
};

inline std::array<MatrixXcd, 3> pauli_matrices() {
    const cd i(0.0, 1.0);
    MatrixXcd x(2, 2), y(2, 2), z(2, 2);
    x << 0.0, 1.0, 1.0, 0.0;
    y << 0.0, -i, i, 0.0;
    z << 1.0, 0.0, 0.0, -1.0;
    return {x, y, z};
}

inline BlochState bloch_from_density(const MatrixXcd& rho, double time = 0.0) {
    if (rho.rows() != 2 || rho.cols() != 2) throw std::invalid_argument("bloch_from_density: needs a 2x2 matrix");
    const auto tau = pauli_matrices();
    BlochState b;
    for (int k = 0; k < 3; ++k) b.R(k) = -(rho * tau[static_cast<std::size_t>(k)]).trace().real();
    b.time = time;
    return b;
}

inline MatrixXcd density_from_bloch(const BlochState& b) {
    const auto tau = pauli_matrices();
    MatrixXcd rho = 0.5 * MatrixXcd::Identity(2, 2);
    for (int k = 0; k < 3; ++k) rho -= 0.5 * b.R(k) * tau[static_cast<std::size_t>(k)];
    return rho;
}

/// H = (1/2) omega . tau, under which dR/dt = omega x R.
inline MatrixXcd rabi_hamiltonian(const Eigen::Vector3d& omega) {
    const auto tau = pauli_matrices();
    MatrixXcd h = MatrixXcd::Zero(2, 2);
    for (int k = 0; k < 3; ++k) h += 0.5 * omega(k) * tau[static_cast<std::size_t>(k)];
    return h;
}

/// Pure state with Bloch vector R0 (|R0| = 1).
inline VectorXcd pure_state_from_bloch(const Eigen::Vector3d& r0) {
    if (std::abs(r0.norm() - 1.0) > 1e-9) throw std::invalid_argument("pure_state_from_bloch: |R| must be 1");
    Eigen::SelfAdjointEigenSolver<MatrixXcd> solver(density_from_bloch({r0, 0.0}));
    return solver.eigenvectors().col(1);
}

struct ZenoExpansion {
    double survival = 1.0;
    /// variance * (sigma^4 t^2 + t^3): the size of the dropped terms.
    double dropped_terms = 0.0;
};

/// 1 - variance (sigma^2 t / 4 + t^2), the small-time survival probability.
inline ZenoExpansion zeno_survival_expansion(double variance, double sigma, double t) {
    if (t < 0.0) throw std::invalid_argument("zeno_survival_expansion: t must be non-negative");
    if (variance < 0.0) throw std::invalid_argument("zeno_survival_expansion: variance must be non-negative");
    const double s2 = sigma * sigma;
    return {1.0 - variance * (0.25 * s2 * t + t * t), variance * (s2 * s2 * t * t + t * t * t)};
}

/// <s_A|H^2|s_A> - <s_A|H|s_A>^2 for H = H0 + V.
inline double energy_variance(const SystemSpec& spec) {
    spec.validate();
    const MatrixXcd h = spec.hamiltonian_matrix();
    const auto s = static_cast<Eigen::Index>(spec.initial);
    const VectorXcd column = h.col(s);
    const double mean = h(s, s).real();
    return std::max(0.0, column.squaredNorm() - mean * mean);
}

/// Gamma_R = sigma^2 variance / 4.
inline double reduction_rate(double variance, double sigma) { return 0.25 * sigma * sigma * variance; }

/// M_sigma > E_D / (8 pi).
inline double decay_bound_m_sigma(double e_d) {
    if (!(e_d >= 0.0)) throw std::invalid_argument("decay_bound_m_sigma: E_D must be >= 0");
    return e_d / (8.0 * std::numbers::pi);
}

/// E[R(t)] for precession about omega. The component along omega is an
/// energy-eigenstate population and stays put; the rotating part is damped by
/// exp(-Omega^2 sigma^2 t / 8).
inline BlochState rabi_evolve(const BlochState& r0, const Eigen::Vector3d& omega, double sigma, double t) {
    const double big_omega = omega.norm();
    if (!(big_omega > 0.0)) throw std::invalid_argument("rabi_evolve: |omega| must be positive");
    r0.validate();
    const Eigen::Vector3d axis = omega / big_omega;
    const Eigen::Vector3d parallel = axis * axis.dot(r0.R);
    const double angle = big_omega * t;
    const Eigen::Vector3d rotated = r0.R * std::cos(angle) + axis.cross(r0.R) * std::sin(angle) +
                                    parallel * (1.0 - std::cos(angle));
    const double damping = std::exp(-big_omega * big_omega * sigma * sigma * t / 8.0);
    return {parallel + damping * (rotated - parallel), r0.time + t};
}

/// (P+, P-) = ((1 + R3)/2, (1 - R3)/2).
inline std::pair<double, double> rabi_probabilities(double r3) {
    if (!(std::abs(r3) <= 1.0 + 1e-12)) throw std::invalid_argument("rabi_probabilities: |R3| must be <= 1");
    return {0.5 * (1.0 + r3), 0.5 * (1.0 - r3)};
}

inline constexpr double kHbarGeVSeconds = 6.582119e-25;

/// Lower bound on M_sigma = 1/sigma^2 (GeV) from a Rabi half-period t = pi/Omega
/// with probabilities matching standard theory to `probability_accuracy`:
/// (1/2)(1 - exp(-pi Omega sigma^2 / 8)) = accuracy. Omega is in MHz (angular).
inline double itano_bound(double omega_mhz, double probability_accuracy) {
    if (!(omega_mhz > 0.0)) throw std::invalid_argument("itano_bound: omega must be positive");
    if (!(probability_accuracy > 0.0 && probability_accuracy < 0.5))
        throw std::invalid_argument("itano_bound: accuracy must lie in (0, 1/2)");
    const double omega_gev = kHbarGeVSeconds * omega_mhz * 1e6;
    const double exponent = -std::log1p(-2.0 * probability_accuracy);  // pi Omega sigma^2 / 8
    return std::numbers::pi * omega_gev / (8.0 * exponent);
}

struct OscillationBound {
    const char* system;
    double m_sigma_gev;
};

/// Recorded lower bounds on M_sigma from coherent-oscillation experiments (GeV).
inline constexpr std::array<OscillationBound, 3> kOscillationBounds = {{
    {"neutrino", 1e-20},
    {"K-meson", 2e-15},
    {"B-meson", 2e-13},
}};

}  // namespace sselab
