#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <queue>
#include <string>
#include <vector>

#include "sselab/errors.hpp"

namespace sselab {

struct QuadratureResult {
    double value = 0.0;
    double error = 0.0;
    std::size_t evaluations = 0;
};

namespace detail {

// 21-point Kronrod extension of the 10-point Gauss rule (QUADPACK qk21).
inline constexpr std::array<double, 11> kXgk21 = {
    0.995657163025808080735527280689003, 0.973906528517171720077964012084452,
    0.930157491355708226001207180059508, 0.865063366688984510732096688423493,
    0.780817726586416897063717578345042, 0.679409568299024406234327365114874,
    0.562757134668604683339000099272694, 0.433395394129247190799265943165784,
    0.294392862701460198131126603103866, 0.148874338981631210884826001129720,
    0.000000000000000000000000000000000};
inline constexpr std::array<double, 11> kWgk21 = {
    0.011694638867371874278064396062192, 0.032558162307964727478818972459390,
    0.054755896574351996031381300244580, 0.075039674810919952767043140916190,
    0.093125454583697605535065465083366, 0.109387158802297641899210590325805,
    0.123491976262065851077600525707426, 0.134709217311473325928054001771707,
    0.142775938577060080797094273138717, 0.147739104901338491374841515972068,
    0.149445554002916905664936468389821};
inline constexpr std::array<double, 5> kWg10 = {
    0.066671344308688137593568809893332, 0.149451349150580593145776339657697,
    0.219086362515982043995534934228163, 0.269266719309996355091226921569469,
    0.295524224714752870173892994651338};

template <class F>
QuadratureResult gauss_kronrod21(F& f, double a, double b) {
    const double center = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    const double fc = f(center);
    double kronrod = fc * kWgk21[10];
    double gauss = 0.0;
    for (std::size_t j = 0; j < 10; ++j) {
        const double dx = half * kXgk21[j];
        const double f1 = f(center - dx);
        const double f2 = f(center + dx);
        kronrod += kWgk21[j] * (f1 + f2);
        if (j % 2 == 1) gauss += kWg10[j / 2] * (f1 + f2);
    }
    QuadratureResult r;
    r.value = kronrod * half;
    r.error = std::abs((kronrod - gauss) * half);
    r.evaluations = 21;
    return r;
}

}  // namespace detail

/// Globally adaptive Gauss-Kronrod (21-point) integration of f over [a, b].
/// Stops when the summed error estimate is below max(abs_tol, rel_tol*|I|).
template <class F>
QuadratureResult integrate_adaptive(F&& f, double a, double b, double abs_tol, double rel_tol = 0.0,
                                    std::size_t max_intervals = 20000) {
    struct Piece {
        double a, b;
        QuadratureResult r;
        bool operator<(const Piece& o) const { return r.error < o.r.error; }
    };
    if (a == b) return {};
    std::priority_queue<Piece> pieces;
    auto first = detail::gauss_kronrod21(f, a, b);
    double total = first.value;
    double error = first.error;
    std::size_t evaluations = first.evaluations;
    pieces.push({a, b, first});

    while (error > std::max(abs_tol, rel_tol * std::abs(total))) {
        if (pieces.size() >= max_intervals)
            throw NumericFailure("integrate_adaptive: no convergence on [" + std::to_string(a) + ", " +
                                 std::to_string(b) + "], error estimate " + std::to_string(error));
        Piece worst = pieces.top();
        pieces.pop();
        const double mid = 0.5 * (worst.a + worst.b);
        auto left = detail::gauss_kronrod21(f, worst.a, mid);
        auto right = detail::gauss_kronrod21(f, mid, worst.b);
        evaluations += left.evaluations + right.evaluations;
        total += left.value + right.value - worst.r.value;
        error += left.error + right.error - worst.r.error;
        pieces.push({worst.a, mid, left});
        pieces.push({mid, worst.b, right});
    }
    // Re-sum to shed the drift of the running updates.
    total = 0.0;
    error = 0.0;
    while (!pieces.empty()) {
        total += pieces.top().r.value;
        error += pieces.top().r.error;
        pieces.pop();
    }
    return {total, error, evaluations};
}

}  // namespace sselab
