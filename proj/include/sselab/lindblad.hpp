#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sselab/errors.hpp"
#include "sselab/hamiltonian.hpp"
#include "sselab/system.hpp"

namespace sselab {

struct DensityMatrix {
    MatrixXcd rho;
    double time = 0.0;

    static DensityMatrix pure(const VectorXcd& psi, double time = 0.0) { return {psi * psi.adjoint(), time}; }

    double trace_defect() const { return std::abs(rho.trace() - cd(1.0)); }
    double hermiticity_defect() const { return (rho - rho.adjoint()).norm() / std::max(rho.norm(), 1e-300); }
    double purity() const { return (rho * rho).trace().real(); }

    void validate(double trace_tol = 1e-9) const {
        if (rho.rows() != rho.cols() || rho.rows() == 0) throw std::invalid_argument("DensityMatrix: not square");
        if (trace_defect() > trace_tol) throw std::invalid_argument("DensityMatrix: trace differs from 1");
        if (hermiticity_defect() > 1e-12) throw std::invalid_argument("DensityMatrix: not Hermitian");
        Eigen::SelfAdjointEigenSolver<MatrixXcd> solver(0.5 * (rho + rho.adjoint()), Eigen::EigenvaluesOnly);
        if (solver.eigenvalues().minCoeff() < -1e-9) throw std::invalid_argument("DensityMatrix: negative eigenvalue");
    }
};

namespace detail {

inline std::size_t substeps(double span, double max_step) {
    if (span <= 0.0) return 0;
    return static_cast<std::size_t>(std::ceil(span / max_step - 1e-12));
}

inline void check_grid(std::span<const double> grid, double start, const char* who) {
    double previous = start;
    for (double t : grid) {
        if (!std::isfinite(t) || t < previous) throw std::invalid_argument(std::string(who) + ": time grid must be non-decreasing from the initial time");
        previous = t;
    }
}

}  // namespace detail

/// Integrates dE[rho]/dt = i[E[rho], H] - (sigma^2/8)[H,[H,E[rho]]] with
/// classical RK4 and returns the state at each grid time.
inline std::vector<DensityMatrix> lindblad_integrate(const DensityMatrix& rho0, const Hamiltonian& h, double sigma,
                                                     std::span<const double> t_grid) {
    rho0.validate();
    if (rho0.rho.rows() != h.dim()) throw std::invalid_argument("lindblad_integrate: dimension mismatch");
    detail::check_grid(t_grid, rho0.time, "lindblad_integrate");

    const MatrixXcd& H = h.dense();
    const cd i(0.0, 1.0);
    const double damping = sigma * sigma / 8.0;
    auto rhs = [&](const MatrixXcd& r) -> MatrixXcd {
        const MatrixXcd hr = H * r;
        const MatrixXcd rh = r * H;
        const MatrixXcd commutator = hr - rh;  // [H, rho]
        return -i * commutator - damping * (H * commutator - commutator * H);
    };

    const Eigen::VectorXd energies = eigensystem(h).energies;
    const double spread = energies.maxCoeff() - energies.minCoeff();
    const double rate = std::max({spread, damping * spread * spread, 1e-12});
    const double max_step = 0.02 / rate;

    std::vector<DensityMatrix> out;
    out.reserve(t_grid.size());
    MatrixXcd r = rho0.rho;
    double t = rho0.time;
    double worst = 0.0;
    for (double target : t_grid) {
        const std::size_t n = detail::substeps(target - t, max_step);
        if (n > 0) {
            const double hstep = (target - t) / static_cast<double>(n);
            for (std::size_t k = 0; k < n; ++k) {
                const MatrixXcd k1 = rhs(r);
                const MatrixXcd k2 = rhs(r + 0.5 * hstep * k1);
                const MatrixXcd k3 = rhs(r + 0.5 * hstep * k2);
                const MatrixXcd k4 = rhs(r + hstep * k3);
                r += hstep / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            }
        }
        t = target;
        DensityMatrix d{r, t};
        worst = std::max({worst, d.trace_defect(), d.hermiticity_defect()});
        if (worst > 1e-9 || !r.allFinite())
            throw NumericFailure("lindblad_integrate: trace/Hermiticity defect " + std::to_string(worst), t);
        out.push_back(std::move(d));
    }
    return out;
}

/// Integrates the closed linear ODEs for E[C_n(t)] (manifold and decay channels)
/// from E[C_{s_A}(0)] = 1 with RK4; one vector of all coefficients per grid time.
inline std::vector<VectorXcd> expectation_coefficients(const SystemSpec& spec, double sigma,
                                                       std::span<const double> t_grid) {
    spec.validate();
    if (!spec.satisfies_selection_rule())
        throw std::invalid_argument("expectation_coefficients: V must vanish inside the manifold");
    detail::check_grid(t_grid, 0.0, "expectation_coefficients");

    const cd i(0.0, 1.0);
    const auto d = static_cast<Eigen::Index>(spec.manifold_dim());
    const auto off = spec.off_manifold();
    const auto n_off = static_cast<Eigen::Index>(off.size());
    const double es = spec.e_s();
    const double s2 = sigma * sigma;

    Eigen::VectorXd offset(n_off);
    VectorXcd f(n_off);
    MatrixXcd coupling(d, n_off);  // V_{s_a m}
    for (Eigen::Index k = 0; k < n_off; ++k) {
        const auto m = off[static_cast<std::size_t>(k)];
        offset(k) = spec.energies[m] - es;
        f(k) = 1.0 - i * s2 / 8.0 * offset(k);
        for (Eigen::Index a = 0; a < d; ++a)
            coupling(a, k) = spec.V(static_cast<Eigen::Index>(spec.manifold[static_cast<std::size_t>(a)]), static_cast<Eigen::Index>(m));
    }
    MatrixXcd v2(d, d);
    {
        const MatrixXcd full = spec.V * spec.V;
        for (Eigen::Index a = 0; a < d; ++a)
            for (Eigen::Index b = 0; b < d; ++b)
                v2(a, b) = full(static_cast<Eigen::Index>(spec.manifold[static_cast<std::size_t>(a)]),
                                static_cast<Eigen::Index>(spec.manifold[static_cast<std::size_t>(b)]));
    }

    // Packed state: manifold first (d entries), then decay channels.
    auto rhs = [&](double t, const VectorXcd& y) -> VectorXcd {
        VectorXcd dy(y.size());
        const auto cs = y.head(d);
        VectorXcd ds = -(s2 / 8.0) * (v2 * cs);
        VectorXcd weighted(n_off);
        for (Eigen::Index k = 0; k < n_off; ++k) weighted(k) = std::exp(-i * offset(k) * t) * (-i) * f(k) * y(d + k);
        ds += coupling * weighted;
        dy.head(d) = ds;
        const VectorXcd source = coupling.adjoint() * cs;
        for (Eigen::Index k = 0; k < n_off; ++k)
            dy(d + k) = -(s2 / 8.0) * offset(k) * offset(k) * y(d + k) +
                        std::exp(i * offset(k) * t) * (-i) * f(k) * source(k);
        return dy;
    };

    double rate = 1e-12;
    for (Eigen::Index k = 0; k < n_off; ++k) rate = std::max({rate, std::abs(offset(k)), s2 / 8.0 * offset(k) * offset(k)});
    rate = std::max(rate, std::sqrt(std::abs(v2.trace())));
    const double max_step = 0.02 / rate;

    VectorXcd y = VectorXcd::Zero(d + n_off);
    y(static_cast<Eigen::Index>(spec.initial_manifold_index())) = 1.0;

    std::vector<VectorXcd> out;
    out.reserve(t_grid.size());
    double t = 0.0;
    for (double target : t_grid) {
        const std::size_t n = detail::substeps(target - t, max_step);
        if (n > 0) {
            const double h = (target - t) / static_cast<double>(n);
            for (std::size_t k = 0; k < n; ++k) {
                const VectorXcd k1 = rhs(t, y);
                const VectorXcd k2 = rhs(t + 0.5 * h, y + 0.5 * h * k1);
                const VectorXcd k3 = rhs(t + 0.5 * h, y + 0.5 * h * k2);
                const VectorXcd k4 = rhs(t + h, y + h * k3);
                y += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
                t += h;
            }
        }
        t = target;
        if (!y.allFinite()) throw NumericFailure("expectation_coefficients: non-finite solution", t);
        VectorXcd full = VectorXcd::Zero(static_cast<Eigen::Index>(spec.dim()));
        for (Eigen::Index a = 0; a < d; ++a) full(static_cast<Eigen::Index>(spec.manifold[static_cast<std::size_t>(a)])) = y(a);
        for (Eigen::Index k = 0; k < n_off; ++k) full(static_cast<Eigen::Index>(off[static_cast<std::size_t>(k)])) = y(d + k);
        out.push_back(std::move(full));
    }
    return out;
}

namespace detail {

// Running integral of uniformly sampled values, fourth order (local cubic fits).
inline std::vector<double> cumulative_integral(const std::vector<double>& f, double h) {
    const std::size_t n = f.size();
    std::vector<double> out(n, 0.0);
    if (n < 2) return out;
    auto piece = [&](std::size_t k) -> double {
        const std::size_t last = n - 1;
        if (last == 1) return 0.5 * h * (f[0] + f[1]);
        if (last == 2) {
            return k == 0 ? h / 12.0 * (5.0 * f[0] + 8.0 * f[1] - f[2]) : h / 12.0 * (-f[0] + 8.0 * f[1] + 5.0 * f[2]);
        }
        if (k == 0) return h / 24.0 * (9.0 * f[0] + 19.0 * f[1] - 5.0 * f[2] + f[3]);
        if (k == last - 1) return h / 24.0 * (f[k - 2] - 5.0 * f[k - 1] + 19.0 * f[k] + 9.0 * f[k + 1]);
        return h / 24.0 * (-f[k - 1] + 13.0 * f[k] + 13.0 * f[k + 1] - f[k + 2]);
    };
    for (std::size_t k = 0; k + 1 < n; ++k) out[k + 1] = out[k] + piece(k);
    return out;
}

}  // namespace detail

/// Expected occupations on the same grid as `coefficient_series`.
/// Manifold states use |E[C_{s_a}]|^2; decay channels integrate
///   d/dt E|C_m|^2 = 2 Re{ e^{-i(E_m-E_s)t} i f_m E[C_m] (sum_a V_{m s_a} E[C_{s_a}])^* } + (sigma^2/4)|sum_a V_{m s_a} E[C_{s_a}]|^2.
/// The grid must be uniform and start at 0.
inline std::vector<Eigen::VectorXd> occupation_expectations(const SystemSpec& spec, double sigma,
                                                            const std::vector<VectorXcd>& coefficient_series,
                                                            std::span<const double> t_grid) {
    if (coefficient_series.size() != t_grid.size())
        throw std::invalid_argument("occupation_expectations: series and grid lengths differ");
    if (t_grid.empty()) return {};
    if (t_grid.front() != 0.0) throw std::invalid_argument("occupation_expectations: grid must start at t = 0");
    const double h = t_grid.size() > 1 ? t_grid[1] - t_grid[0] : 0.0;
    for (std::size_t k = 1; k < t_grid.size(); ++k)
        if (std::abs(t_grid[k] - t_grid[k - 1] - h) > 1e-9 * std::max(1.0, std::abs(t_grid[k])) || !(h > 0.0))
            throw std::invalid_argument("occupation_expectations: grid must be uniform");
    for (const auto& c : coefficient_series)
        if (c.size() != static_cast<Eigen::Index>(spec.dim()))
            throw std::invalid_argument("occupation_expectations: series dimension mismatch");

    const cd i(0.0, 1.0);
    const double es = spec.e_s();
    const std::size_t steps = t_grid.size();
    std::vector<Eigen::VectorXd> out(steps, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(spec.dim())));
    for (std::size_t k = 0; k < steps; ++k)
        for (auto a : spec.manifold) out[k](static_cast<Eigen::Index>(a)) = std::norm(coefficient_series[k](static_cast<Eigen::Index>(a)));

    std::vector<double> rate(steps);
    for (auto m : spec.off_manifold()) {
        const auto mi = static_cast<Eigen::Index>(m);
        const double offset = spec.energies[m] - es;
        const cd f = 1.0 - i * sigma * sigma / 8.0 * offset;
        for (std::size_t k = 0; k < steps; ++k) {
            cd source{0.0};
            for (auto a : spec.manifold)
                source += spec.V(mi, static_cast<Eigen::Index>(a)) * coefficient_series[k](static_cast<Eigen::Index>(a));
            const cd term = std::exp(-i * offset * t_grid[k]) * i * f * coefficient_series[k](mi) * std::conj(source);
            rate[k] = 2.0 * term.real() + 0.25 * sigma * sigma * std::norm(source);
        }
        const auto integral = detail::cumulative_integral(rate, h);
        for (std::size_t k = 0; k < steps; ++k) out[k](mi) = integral[k];
    }
    return out;
}

}  // namespace sselab
