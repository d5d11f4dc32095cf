#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sselab/errors.hpp"
#include "sselab/hamiltonian.hpp"

namespace sselab {

/// The decay problem: unperturbed spectrum E_n, Hermitian perturbation V,
/// the degenerate manifold {s_a} and the initially occupied state s_A.
///
/// `bath_spacing`, when set, declares the off-manifold levels to be a uniform
/// quasi-continuum with density of states 1/spacing; compute_ww_params then
/// uses the exact golden-rule identification instead of an energy window.
struct SystemSpec {
    std::vector<double> energies;
    MatrixXcd V;
    std::vector<std::size_t> manifold;
    std::size_t initial = 0;
    bool selection_rule = false;
    std::optional<double> bath_spacing;

    std::size_t dim() const { return energies.size(); }
    std::size_t manifold_dim() const { return manifold.size(); }
    double e_s() const { return energies.at(manifold.at(0)); }

    bool in_manifold(std::size_t n) const {
        return std::find(manifold.begin(), manifold.end(), n) != manifold.end();
    }

    std::size_t initial_manifold_index() const {
        return static_cast<std::size_t>(std::find(manifold.begin(), manifold.end(), initial) - manifold.begin());
    }

    std::vector<std::size_t> off_manifold() const {
        std::vector<std::size_t> out;
        for (std::size_t n = 0; n < dim(); ++n)
            if (!in_manifold(n)) out.push_back(n);
        return out;
    }

    MatrixXcd hamiltonian_matrix() const {
        MatrixXcd h = V;
        for (std::size_t n = 0; n < dim(); ++n) h(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n)) += energies[n];
        return h;
    }

    Hamiltonian hamiltonian() const { return Hamiltonian(hamiltonian_matrix()); }

    /// Largest |V_{s_a s_b}| inside the manifold.
    double manifold_coupling() const {
        double worst = 0.0;
        for (auto a : manifold)
            for (auto b : manifold)
                worst = std::max(worst, std::abs(V(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b))));
        return worst;
    }

    bool satisfies_selection_rule() const { return manifold_coupling() <= 1e-12 * std::max(V.norm(), 1e-300); }

    /// Throws std::invalid_argument describing the first violated invariant.
    void validate() const {
        const auto n = static_cast<Eigen::Index>(dim());
        if (n == 0) throw std::invalid_argument("SystemSpec: empty spectrum");
        if (V.rows() != n || V.cols() != n)
            throw std::invalid_argument("SystemSpec: V must be " + std::to_string(n) + "x" + std::to_string(n));
        for (double e : energies)
            if (!std::isfinite(e)) throw std::invalid_argument("SystemSpec: non-finite energy");
        if (!V.allFinite()) throw std::invalid_argument("SystemSpec: non-finite entry in V");
        if ((V - V.adjoint()).norm() > 1e-12 * std::max(V.norm(), 1e-300))
            throw std::invalid_argument("SystemSpec: V is not Hermitian");
        if (manifold.empty()) throw std::invalid_argument("SystemSpec: manifold is empty");
        for (std::size_t i = 0; i < manifold.size(); ++i) {
            if (manifold[i] >= dim()) throw std::invalid_argument("SystemSpec: manifold index out of range");
            for (std::size_t j = 0; j < i; ++j)
                if (manifold[i] == manifold[j]) throw std::invalid_argument("SystemSpec: duplicate manifold index");
        }
        if (!in_manifold(initial)) throw std::invalid_argument("SystemSpec: initial state must lie in the manifold");
        const double es = e_s();
        double scale = 1.0;
        for (double e : energies) scale = std::max(scale, std::abs(e));
        for (auto a : manifold)
            if (std::abs(energies[a] - es) > 1e-12 * scale)
                throw std::invalid_argument("SystemSpec: manifold energies are not degenerate");
        if (selection_rule && !satisfies_selection_rule())
            throw std::invalid_argument("SystemSpec: selection rule asserted but V has matrix elements inside the manifold");
        if (bath_spacing && !(*bath_spacing > 0.0))
            throw std::invalid_argument("SystemSpec: bath_spacing must be positive");
    }
};

/// Noise strength sigma; the equivalent energy scale is M_sigma = 1/sigma^2.
struct NoiseParams {
    double sigma = 0.0;

    double m_sigma() const {
        return sigma == 0.0 ? std::numeric_limits<double>::infinity() : 1.0 / (sigma * sigma);
    }
};

/// On-shell mass shift M_ab and width Gamma_ab at reference energy E_s.
struct WWParams {
    double e_s = 0.0;
    MatrixXcd M;
    MatrixXcd Gamma;

    Eigen::Index dim() const { return M.rows(); }
    double mass_shift() const { return M(0, 0).real(); }
    double width() const { return Gamma(0, 0).real(); }

    static WWParams scalar(double e_s, double mass_shift, double width) {
        WWParams p;
        p.e_s = e_s;
        p.M = MatrixXcd::Constant(1, 1, mass_shift);
        p.Gamma = MatrixXcd::Constant(1, 1, width);
        return p;
    }
};

struct FlatBath {
    SystemSpec spec;
    double coupling = 0.0;
    std::optional<std::string> warning;
};

/// One discrete level at e_s coupled with uniform real coupling
/// v = sqrt(gamma * spacing / 2pi) to level_count bath levels e_s + k*spacing,
/// k = -(N-1)/2 .. (N-1)/2. Index 0 is the decaying state.
inline FlatBath build_flat_bath(double gamma_target, std::size_t level_count, double spacing, double e_s) {
    if (!(gamma_target >= 0.0)) throw std::invalid_argument("build_flat_bath: gamma_target must be >= 0");
    if (!(spacing > 0.0)) throw std::invalid_argument("build_flat_bath: spacing must be positive");
    if (level_count < 3 || level_count % 2 == 0)
        throw std::invalid_argument("build_flat_bath: level_count must be odd and >= 3");

    FlatBath bath;
    bath.coupling = std::sqrt(gamma_target * spacing / (2.0 * std::numbers::pi));
    const std::size_t n = level_count + 1;
    auto& spec = bath.spec;
    spec.energies.resize(n);
    spec.energies[0] = e_s;
    const long half = static_cast<long>(level_count - 1) / 2;
    for (std::size_t i = 0; i < level_count; ++i)
        spec.energies[i + 1] = e_s + static_cast<double>(static_cast<long>(i) - half) * spacing;
    spec.V = MatrixXcd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (Eigen::Index m = 1; m < static_cast<Eigen::Index>(n); ++m) {
        spec.V(0, m) = bath.coupling;
        spec.V(m, 0) = bath.coupling;
    }
    spec.manifold = {0};
    spec.initial = 0;
    spec.selection_rule = true;
    spec.bath_spacing = spacing;

    const double half_width = static_cast<double>(half) * spacing;
    if (5.0 * gamma_target > half_width)
        bath.warning = "configuration-warning: width " + std::to_string(gamma_target) +
                       " is within a factor 5 of the band half-width " + std::to_string(half_width);
    return bath;
}

/// Mass matrix (principal value) and width matrix (on-shell rule).
///
/// Terms at +d and -d about E_s are combined before summation and exactly
/// on-shell states contribute nothing to M. For a declared uniform bath the
/// delta function becomes the density of states 1/spacing (states within half
/// a spacing of E_s, edge states at half weight); otherwise it becomes a
/// window of half-width delta_tolerance.
inline WWParams compute_ww_params(const SystemSpec& spec, double delta_tolerance) {
    spec.validate();
    if (!(delta_tolerance > 0.0)) throw std::invalid_argument("compute_ww_params: delta_tolerance must be positive");
    const auto off = spec.off_manifold();
    if (off.empty()) throw std::invalid_argument("compute_ww_params: no states outside the manifold");

    const auto d = static_cast<Eigen::Index>(spec.manifold_dim());
    const double es = spec.e_s();
    double scale = 1.0;
    for (double e : spec.energies) scale = std::max(scale, std::abs(e));
    const double on_shell = 1e-12 * scale;

    struct Term {
        double offset;
        MatrixXcd outer;
    };
    std::vector<Term> terms;
    terms.reserve(off.size());
    for (auto m : off) {
        Eigen::VectorXcd u(d);
        for (Eigen::Index a = 0; a < d; ++a)
            u(a) = spec.V(static_cast<Eigen::Index>(spec.manifold[static_cast<std::size_t>(a)]), static_cast<Eigen::Index>(m));
        // (u u^dagger)_ab = V_{s_a m} V_{m s_b}
        terms.push_back({spec.energies[m] - es, u * u.adjoint()});
    }

    WWParams ww;
    ww.e_s = es;
    ww.M = MatrixXcd::Zero(d, d);
    ww.Gamma = MatrixXcd::Zero(d, d);

    std::vector<std::size_t> order(terms.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return std::abs(terms[a].offset) < std::abs(terms[b].offset);
    });
    std::vector<bool> used(terms.size(), false);
    for (std::size_t idx = 0; idx < order.size(); ++idx) {
        const std::size_t i = order[idx];
        if (used[i]) continue;
        used[i] = true;
        const double di = terms[i].offset;
        if (std::abs(di) <= on_shell) continue;
        std::optional<std::size_t> partner;
        for (std::size_t jdx = idx + 1; jdx < order.size(); ++jdx) {
            const std::size_t j = order[jdx];
            if (used[j]) continue;
            const double dj = terms[j].offset;
            if (std::abs(std::abs(dj) - std::abs(di)) > 1e-9 * std::abs(di)) break;
            if (dj * di < 0.0) {
                partner = j;
                break;
            }
        }
        if (partner) {
            used[*partner] = true;
            const double mean = 0.5 * (std::abs(di) + std::abs(terms[*partner].offset));
            const auto& plus = di > 0.0 ? terms[i].outer : terms[*partner].outer;
            const auto& minus = di > 0.0 ? terms[*partner].outer : terms[i].outer;
            ww.M += (minus - plus) / mean;
        } else {
            ww.M -= terms[i].outer / di;
        }
    }

    const double two_pi = 2.0 * std::numbers::pi;
    if (spec.bath_spacing) {
        const double spacing = *spec.bath_spacing;
        for (const auto& term : terms) {
            const double a = std::abs(term.offset);
            double weight = 0.0;
            if (std::abs(a - 0.5 * spacing) <= 1e-9 * spacing)
                weight = 0.5;
            else if (a < 0.5 * spacing)
                weight = 1.0;
            if (weight > 0.0) ww.Gamma += (two_pi * weight / spacing) * term.outer;
        }
    } else {
        for (const auto& term : terms)
            if (std::abs(term.offset) < delta_tolerance) ww.Gamma += (two_pi / (2.0 * delta_tolerance)) * term.outer;
    }
    return ww;
}

enum class KernelMode { full, ww };

/// Self-energy kernel K_ab(E) of the expectation equations.
///
/// `ww` mode is the on-shell linear kernel (-iE + iE_s) + iM + Gamma/2, which
/// does not depend on sigma. `full` mode keeps the sigma-dependent f_m factors
/// and the energy-dependent denominators.
inline MatrixXcd ww_kernel(const SystemSpec& spec, const WWParams& ww, double sigma, cd energy, KernelMode mode) {
    const auto d = static_cast<Eigen::Index>(spec.manifold_dim());
    const cd i(0.0, 1.0);
    const double es = spec.e_s();
    MatrixXcd k = MatrixXcd::Identity(d, d) * (-i * energy + i * es);
    if (mode == KernelMode::ww) {
        if (ww.dim() != d) throw std::invalid_argument("ww_kernel: WWParams dimension does not match manifold");
        return k + i * ww.M + 0.5 * ww.Gamma;
    }

    const MatrixXcd v2 = spec.V * spec.V;
    for (Eigen::Index a = 0; a < d; ++a)
        for (Eigen::Index b = 0; b < d; ++b) {
            const auto sa = static_cast<Eigen::Index>(spec.manifold[static_cast<std::size_t>(a)]);
            const auto sb = static_cast<Eigen::Index>(spec.manifold[static_cast<std::size_t>(b)]);
            k(a, b) += sigma * sigma / 8.0 * v2(sa, sb);
        }
    for (auto m : spec.off_manifold()) {
        const double offset = spec.energies[m] - es;
        const cd f = 1.0 - i * sigma * sigma / 8.0 * offset;
        const cd denominator = -i * energy + i * es + i * offset * f;
        if (std::abs(denominator) == 0.0 || !std::isfinite(std::abs(denominator)))
            throw NumericFailure("ww_kernel: energy sits on the bath pole of state " + std::to_string(m),
                                 energy.real(), m);
        const auto mi = static_cast<Eigen::Index>(m);
        for (Eigen::Index a = 0; a < d; ++a)
            for (Eigen::Index b = 0; b < d; ++b) {
                const auto sa = static_cast<Eigen::Index>(spec.manifold[static_cast<std::size_t>(a)]);
                const auto sb = static_cast<Eigen::Index>(spec.manifold[static_cast<std::size_t>(b)]);
                k(a, b) += f * f * spec.V(sa, mi) * spec.V(mi, sb) / denominator;
            }
    }
    return k;
}

}  // namespace sselab
