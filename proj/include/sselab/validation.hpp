#pragma once

#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sselab/brownian.hpp"
#include "sselab/ensemble.hpp"
#include "sselab/lindblad.hpp"
#include "sselab/linear_sde.hpp"
#include "sselab/recipe.hpp"
#include "sselab/trajectory.hpp"
#include "sselab/ww_analytic.hpp"

namespace sselab {

struct CheckResult {
    std::string name;
    bool passed = false;
    std::string detail;
};

namespace detail {

inline std::string fmt(const char* format, double a, double b = 0.0, double c = 0.0) {
    char buf[256];
    std::snprintf(buf, sizeof buf, format, a, b, c);
    return buf;
}

inline CheckResult within_se(const std::string& name, const EnsembleEstimate& e, double target, double k = 3.0) {
    const double se = e.std_error.value_or(0.0);
    const double dev = std::abs(e.mean - target);
    const bool ok = se > 0.0 ? dev <= k * se : dev <= 1e-12 * std::max(1.0, std::abs(target));
    return {name, ok, fmt("mean %.6g target %.6g se %.3g", e.mean, target, se)};
}

}  // namespace detail

/// E[exp(alpha W_t)] and E[W_t^k] against their closed forms.
inline std::vector<CheckResult> validate_ito(std::size_t n_paths = 100000, std::uint64_t seed = 20240501) {
    std::vector<CheckResult> out;
    std::uint64_t stream = 0;
    for (auto [alpha, t] : {std::pair{1.0, 1.0}, std::pair{2.0, 0.5}}) {
        const auto e = ito_exponential_expectation(alpha, t, n_paths, {seed, stream});
        stream += n_paths;
        out.push_back(detail::within_se(detail::fmt("E[exp(%gW_t)] at t=%g", alpha, t), e, std::exp(0.5 * alpha * alpha * t)));
    }
    const double t = 1.5;
    const auto moments = wiener_moment_estimates(4, t, n_paths, {seed, stream});
    for (int k = 1; k <= 4; ++k)
        out.push_back(detail::within_se(detail::fmt("E[W_t^%g] at t=%g", k, t), moments[static_cast<std::size_t>(k)],
                                        wt_moments(k, t)));
    return out;
}

/// Two-level dephasing: Lindblad integrator against the closed form, and the
/// imaginary-noise unraveling against the Lindblad solution.
inline std::vector<CheckResult> validate_lindblad(std::size_t n_traj = 4000, std::uint64_t seed = 7) {
    std::vector<CheckResult> out;
    MatrixXcd h = MatrixXcd::Zero(2, 2);
    h(1, 1) = 1.0;
    const Hamiltonian hamiltonian(h);
    VectorXcd plus(2);
    plus << 1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0);
    const double sigma = 1.0;
    std::vector<double> grid;
    for (int k = 0; k <= 50; ++k) grid.push_back(0.1 * k);
    const auto rho = lindblad_integrate(DensityMatrix::pure(plus), hamiltonian, sigma, grid);
    double worst = 0.0, worst_trace = 0.0;
    const cd i(0.0, 1.0);
    for (std::size_t k = 0; k < grid.size(); ++k) {
        const cd exact = 0.5 * std::exp(i * grid[k]) * std::exp(-sigma * sigma * grid[k] / 8.0);
        worst = std::max(worst, std::abs(rho[k].rho(0, 1) - exact));
        worst = std::max(worst, std::abs(rho[k].rho(0, 0) - 0.5));
        worst_trace = std::max(worst_trace, rho[k].trace_defect());
    }
    out.push_back({"lindblad coherence vs exp(-sigma^2 t/8) closed form", worst < 1e-8, detail::fmt("max error %.3g", worst)});
    out.push_back({"lindblad trace preserved", worst_trace < 1e-12, detail::fmt("max trace defect %.3g", worst_trace)});

    ExperimentPlan plan;
    plan.system.energies = {0.0, 1.0};
    plan.system.V = MatrixXcd::Zero(2, 2);
    plan.system.manifold = {0};
    plan.initial_state = plus;
    plan.noise.sigma = sigma;
    plan.dt = 0.01;
    plan.horizon = 5.0;
    plan.output_stride = 10;
    plan.n_traj = n_traj;
    plan.master_seed = seed;
    plan.observables = {Observable::density_matrix};
    const auto table = run_ensemble(plan, Engine::imaginary_noise);
    const auto oracle = lindblad_integrate(DensityMatrix::pure(plus), hamiltonian, sigma, table.times);
    std::vector<EnsembleEstimate> est;
    std::vector<double> ref;
    for (std::size_t k = 0; k < table.times.size(); ++k) {
        for (const auto& [name, value] : {std::pair{"rho_re_0_0", oracle[k].rho(0, 0).real()},
                                          std::pair{"rho_re_1_1", oracle[k].rho(1, 1).real()},
                                          std::pair{"rho_re_0_1", oracle[k].rho(0, 1).real()},
                                          std::pair{"rho_im_0_1", oracle[k].rho(0, 1).imag()}}) {
            est.push_back(table.values[k][table.column_index(name)]);
            ref.push_back(value);
        }
    }
    const auto report = compare_to_oracle(est, ref);
    out.push_back({"imaginary-noise ensemble vs lindblad", report.passed,
                   detail::fmt("max|z| %.3g, fraction |z|>3 %.3g", report.max_abs_z, report.fraction_above_3)});
    return out;
}

/// RMS pathwise error of Euler-Maruyama against the closed form at T for
/// step sizes base_dt / 2^j, j = 0..levels-1.
inline std::vector<double> linear_sde_strong_errors(const ExponentialLinearSde& sde, double horizon, double base_dt,
                                                    int levels, std::size_t n_paths, std::uint64_t seed,
                                                    std::size_t fine_factor = 1024) {
    const auto n_base = static_cast<std::size_t>(std::llround(horizon / base_dt));
    const std::size_t fine_steps = n_base * fine_factor;
    const double fine_dt = horizon / static_cast<double>(fine_steps);
    std::vector<double> sq(static_cast<std::size_t>(levels), 0.0);
    const auto general = sde.general();
    for (std::size_t p = 0; p < n_paths; ++p) {
        const auto fine = sample_path(fine_dt, fine_steps, {seed, p});
        const cd exact = linear_sde_exact(sde, fine, fine.horizon()).value;
        for (int j = 0; j < levels; ++j) {
            const auto coarse = coarsen(fine, fine_factor >> j);
            const cd approx = linear_sde_em(general, coarse).back();
            sq[static_cast<std::size_t>(j)] += std::norm(approx - exact);
        }
    }
    for (auto& s : sq) s = std::sqrt(s / static_cast<double>(n_paths));
    return sq;
}

/// Parameters of the decay-channel equation in the solvable linear family.
inline ExponentialLinearSde decay_channel_sde(double offset, cd v_ms, double sigma, const WWParams& ww) {
    const cd i(0.0, 1.0);
    ExponentialLinearSde sde;
    sde.A = 0.5 * sigma * offset;
    sde.B = -0.5 * sde.A * sde.A;
    sde.P = 0.5 * sigma * v_ms;
    sde.Q = -i * v_ms * (1.0 - i * sigma * sigma * offset / 8.0);
    sde.K = i * (offset - ww.mass_shift()) - 0.5 * ww.width();
    sde.c0 = 0.0;
    return sde;
}

inline std::vector<CheckResult> validate_appendix(std::size_t n_paths = 100, std::uint64_t seed = 11) {
    std::vector<CheckResult> out;
    const cd i(0.0, 1.0);
    ExponentialLinearSde sde;
    sde.A = 0.9;
    sde.B = 0.2;
    sde.P = cd(0.4, 0.3);
    sde.Q = -0.5 * i;
    sde.K = cd(-0.1, 0.3);
    sde.c0 = 1.0;
    const auto errors = linear_sde_strong_errors(sde, 1.0, 1.0 / 16.0, 4, n_paths, seed);
    for (std::size_t j = 0; j + 1 < errors.size(); ++j) {
        const double ratio = errors[j] / errors[j + 1];
        out.push_back({detail::fmt("EM strong error ratio, halving %g", static_cast<double>(j + 1)), ratio >= 1.2 && ratio <= 1.7,
                       detail::fmt("ratio %.4f (errors %.4g -> %.4g)", ratio, errors[j], errors[j + 1])});
    }

    // Closed-form channel coefficient versus the general linear-SDE solution.
    SystemSpec spec;
    spec.energies = {0.0, 0.7};
    spec.V = MatrixXcd::Zero(2, 2);
    spec.V(0, 1) = spec.V(1, 0) = 0.05;
    spec.manifold = {0};
    spec.selection_rule = true;
    const double sigma = 0.8;
    const auto ww = WWParams::scalar(0.0, 0.0, 0.0);
    const auto path = sample_path(1.0 / 512.0, 2048, {seed, 999});
    double worst = 0.0;
    for (double t : {0.5, 1.0, 2.0, 4.0}) {
        const cd general = linear_sde_exact(decay_channel_sde(0.7, 0.05, sigma, ww), path, t).value;
        const cd closed = pathwise_cm(spec, ww, sigma, 1, path, t);
        worst = std::max(worst, std::abs(general - closed) / std::max(1e-300, std::abs(closed)));
    }
    out.push_back({"linear-SDE solution reproduces the closed-form channel coefficient (M = Gamma = 0)", worst < 1e-9,
                   detail::fmt("max relative difference %.3g", worst)});
    return out;
}

inline std::vector<CheckResult> validate_golden_rule() {
    std::vector<CheckResult> out;
    const double gamma = 0.1;
    for (double gt : {0.1, 1.0, 3.0}) {
        const double t = gt / gamma;
        const double q = golden_rule_F(0.0, t, gamma, 1e-12);
        const double c = golden_rule_F_closed_form(t, gamma);
        out.push_back({detail::fmt("F[0,t] quadrature vs closed form, Gamma t = %g", gt), std::abs(q - c) <= 1e-6,
                       detail::fmt("quadrature %.12g closed %.12g", q, c)});
    }
    for (double sigma : {1.0, 2.0, 4.0})
        for (double t : {1.0, 3.0, 10.0}) {
            const double a = sigma * sigma / (8.0 * t);
            const double diff = std::abs(golden_rule_F(a, t, gamma, 1e-13) - golden_rule_F(0.0, t, gamma, 1e-13));
            const double bound = golden_rule_correction_bound(sigma, t);
            out.push_back({detail::fmt("|F[A,t]-F[0,t]| <= bound, sigma=%g t=%g", sigma, t), diff <= bound,
                           detail::fmt("difference %.4g bound %.4g", diff, bound)});
        }
    // Band half-width 10: the Lorentzian weight outside it is about 0.3%.
    const auto bath = build_flat_bath(gamma, 2001, 0.01, 0.0);
    const auto ww = WWParams::scalar(0.0, 0.0, gamma);
    for (double gt : {0.5, 1.0, 2.0, 3.0}) {
        const double sum = summed_transition_expectation(ww, bath.spec, 0.0, gt / gamma, TransitionMode::leading_order);
        const double expected = 1.0 - std::exp(-gt);
        out.push_back({detail::fmt("golden-rule sum over flat bath, Gamma t = %g", gt),
                       std::abs(sum - expected) <= 0.02 * expected, detail::fmt("sum %.6g expected %.6g", sum, expected)});
    }
    return out;
}

inline std::vector<CheckResult> validate_recipe(std::size_t n_draws = 100000, std::uint64_t seed = 5) {
    std::vector<CheckResult> out;
    const double gamma = 0.1, sigma = 1.0;
    const auto ww = WWParams::scalar(0.0, 0.0, gamma);
    for (double t : {1.0, 10.0, 30.0}) {
        const double r = recipe_transform([&](double u) { return std::exp(-gamma * u); }, sigma, t);
        const double s = survival_expectation(ww, sigma, t).value;
        out.push_back({detail::fmt("recipe on exp(-Gamma u) vs closed form, t = %g", t), std::abs(r - s) <= 1e-10,
                       detail::fmt("recipe %.15g closed %.15g", r, s)});
    }
    const DecayChannel channel{0.05, 0.0126};
    for (double t : {2.0, 10.0, 40.0}) {
        const double r = recipe_transform([&](double u) { return transition_probability_standard(ww, channel, u); }, sigma, t);
        const double c = transition_expectation(ww, channel, sigma, t);
        out.push_back({detail::fmt("recipe on transition probability vs closed form, t = %g", t), std::abs(r - c) <= 1e-8,
                       detail::fmt("recipe %.12g closed %.12g", r, c)});
    }
    double worst = 0.0;
    for (int k = 0; k <= 8; ++k) {
        const double t = 2.0;
        const double r = recipe_transform([&](double u) { return std::pow(u, k); }, sigma, t);
        double binomial = 0.0, coefficient = 1.0;
        for (int j = 0; j <= k; ++j) {
            binomial += coefficient * std::pow(t, k - j) * std::pow(-0.5 * sigma, j) * wt_moments(j, t);
            coefficient = coefficient * (k - j) / (j + 1);
        }
        worst = std::max(worst, std::abs(r - binomial) / std::max(1.0, std::abs(binomial)));
    }
    out.push_back({"recipe exact on u^k, k <= 8", worst <= 1e-13, detail::fmt("max relative error %.3g", worst)});

    RunningStats stats;
    auto engine = RngPolicy{seed, 0}.engine();
    const double t = 10.0;
    std::normal_distribution<double> normal(0.0, std::sqrt(t));
    for (std::size_t n = 0; n < n_draws; ++n) stats.add(std::exp(-gamma * (t - 0.5 * sigma * normal(engine))));
    out.push_back(detail::within_se("recipe vs direct W_t sampling", stats.estimate(),
                                    recipe_transform([&](double u) { return std::exp(-gamma * u); }, sigma, t)));
    return out;
}

inline const std::map<std::string, std::function<std::vector<CheckResult>()>>& validation_suites() {
    static const std::map<std::string, std::function<std::vector<CheckResult>()>> suites = {
        {"ito", [] { return validate_ito(); }},
        {"lindblad", [] { return validate_lindblad(); }},
        {"appendix", [] { return validate_appendix(); }},
        {"golden-rule", [] { return validate_golden_rule(); }},
        {"recipe", [] { return validate_recipe(); }},
    };
    return suites;
}

}  // namespace sselab
