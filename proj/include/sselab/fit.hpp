#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <utility>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/LevenbergMarquardt>
#include <unsupported/Eigen/NumericalDiff>

#include "sselab/errors.hpp"

namespace sselab {

struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
};

/// Ordinary least-squares line through (x, y).
inline LinearFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("fit_line: need >= 2 matching points");
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
    }
    const double mx = sx / n, my = sy / n;
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (sxx == 0.0) throw std::invalid_argument("fit_line: x values are all equal");
    const double slope = sxy / sxx;
    return {slope, my - slope * mx};
}

/// Decay rate from log-linear least squares of y(t) over t in [t_lo, t_hi].
inline double fit_exponential_rate(const std::vector<double>& t, const std::vector<double>& y, double t_lo, double t_hi) {
    std::vector<double> xs, ls;
    for (std::size_t i = 0; i < t.size(); ++i)
        if (t[i] >= t_lo - 1e-12 && t[i] <= t_hi + 1e-12) {
            if (!(y[i] > 0.0)) throw NumericFailure("fit_exponential_rate: non-positive value in window", t[i]);
            xs.push_back(t[i]);
            ls.push_back(std::log(y[i]));
        }
    return -fit_line(xs, ls).slope;
}

/// Exponent p of y = c t^p from a log-log line over positive t.
inline double fit_power_law(const std::vector<double>& t, const std::vector<double>& y) {
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (t[i] <= 0.0) continue;
        if (!(y[i] > 0.0)) throw NumericFailure("fit_power_law: non-positive value", t[i]);
        lx.push_back(std::log(t[i]));
        ly.push_back(std::log(y[i]));
    }
    return fit_line(lx, ly).slope;
}

/// y = a t + b t^2 (no constant term), least squares.
inline std::pair<double, double> fit_linear_quadratic(const std::vector<double>& t, const std::vector<double>& y) {
    if (t.size() != y.size() || t.size() < 2) throw std::invalid_argument("fit_linear_quadratic: need >= 2 points");
    Eigen::MatrixXd design(static_cast<Eigen::Index>(t.size()), 2);
    Eigen::VectorXd rhs(static_cast<Eigen::Index>(t.size()));
    for (std::size_t i = 0; i < t.size(); ++i) {
        design(static_cast<Eigen::Index>(i), 0) = t[i];
        design(static_cast<Eigen::Index>(i), 1) = t[i] * t[i];
        rhs(static_cast<Eigen::Index>(i)) = y[i];
    }
    const Eigen::Vector2d coef = design.colPivHouseholderQr().solve(rhs);
    return {coef(0), coef(1)};
}

struct CurveFit {
    Eigen::VectorXd params;
    double residual_norm = 0.0;
    int status = 0;
};

/// Nonlinear least squares of model(x, params) against y (optionally weighted
/// by 1/error), Levenberg-Marquardt with forward-difference Jacobian.
inline CurveFit fit_curve(const std::function<double(double, const Eigen::VectorXd&)>& model,
                          const std::vector<double>& x, const std::vector<double>& y, Eigen::VectorXd initial,
                          const std::vector<double>& error = {}) {
    if (x.size() != y.size() || x.size() < static_cast<std::size_t>(initial.size()))
        throw std::invalid_argument("fit_curve: not enough points for the parameter count");
    if (!error.empty() && error.size() != y.size()) throw std::invalid_argument("fit_curve: error size mismatch");

    struct Residuals : Eigen::DenseFunctor<double> {
        const std::function<double(double, const Eigen::VectorXd&)>* model;
        const std::vector<double>* x;
        const std::vector<double>* y;
        const std::vector<double>* error;
        Residuals(int n_params, int n_values) : Eigen::DenseFunctor<double>(n_params, n_values) {}
        int operator()(const Eigen::VectorXd& p, Eigen::VectorXd& r) const {
            for (std::size_t i = 0; i < x->size(); ++i) {
                double w = error->empty() ? 1.0 : 1.0 / (*error)[i];
                r(static_cast<Eigen::Index>(i)) = w * ((*model)((*x)[i], p) - (*y)[i]);
            }
            return 0;
        }
    };
    Residuals residuals(static_cast<int>(initial.size()), static_cast<int>(x.size()));
    residuals.model = &model;
    residuals.x = &x;
    residuals.y = &y;
    residuals.error = &error;
    Eigen::NumericalDiff<Residuals> functor(residuals);
    Eigen::LevenbergMarquardt<Eigen::NumericalDiff<Residuals>> lm(functor);
    lm.setMaxfev(2000);
    lm.setXtol(1e-12);
    lm.setFtol(1e-12);
    const auto status = lm.minimize(initial);
    if (status == Eigen::LevenbergMarquardtSpace::ImproperInputParameters || !initial.allFinite())
        throw NumericFailure("fit_curve: Levenberg-Marquardt failed");
    Eigen::VectorXd r(static_cast<Eigen::Index>(x.size()));
    residuals(initial, r);
    return {initial, r.norm(), static_cast<int>(status)};
}

/// Occupation of a level detuned by x after time t, for a decay of width w
/// centred at c: A [1 + e^{-wt} - 2 e^{-wt/2} cos((x - c) t)] / ((x - c)^2 + w^2/4).
/// Tends to a Lorentzian of FWHM w as wt grows.
inline double finite_time_line(double x, double t, double amplitude, double center, double width) {
    const double d = x - center;
    const double decay = std::exp(-0.5 * width * t);
    return amplitude * (1.0 + decay * decay - 2.0 * decay * std::cos(d * t)) / (d * d + 0.25 * width * width);
}

struct LineShape {
    double amplitude = 0.0;
    double center = 0.0;
    double width = 0.0;
    double residual_norm = 0.0;
};

/// Fits finite_time_line to occupations p at detunings x with amplitude,
/// centre and width free.
inline LineShape fit_line_shape(const std::vector<double>& x, const std::vector<double>& p, double t, double width_guess) {
    if (x.size() != p.size() || x.size() < 4) throw std::invalid_argument("fit_line_shape: need >= 4 matching points");
    if (!(width_guess > 0.0) || !(t > 0.0)) throw std::invalid_argument("fit_line_shape: width_guess and t must be positive");
    const auto peak = std::max_element(p.begin(), p.end()) - p.begin();
    const double center0 = x[static_cast<std::size_t>(peak)];
    const double shape0 = finite_time_line(center0, t, 1.0, center0, width_guess);
    Eigen::VectorXd initial(3);
    initial << p[static_cast<std::size_t>(peak)] / shape0, center0, width_guess;
    const auto fit = fit_curve(
        [t](double xi, const Eigen::VectorXd& q) { return finite_time_line(xi, t, q(0), q(1), q(2)); }, x, p, initial);
    return {fit.params(0), fit.params(1), std::abs(fit.params(2)), fit.residual_norm};
}

}  // namespace sselab
