#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "sselab/ww_analytic.hpp"

using namespace sselab;

TEST(Survival, DampedExponential) {
    const auto ww = WWParams::scalar(0.0, 0.0, 0.1);
    // exp(-0.1 (1 - 0.1/8) 10)
    EXPECT_NEAR(survival_expectation(ww, 1.0, 10.0).value, 0.3725067948950129, 1e-15);
    EXPECT_TRUE(survival_expectation(ww, 1.0, 10.0).ok());
    EXPECT_DOUBLE_EQ(survival_expectation(ww, 0.0, 5.0).value, std::exp(-0.5));
}

TEST(Survival, WarnsWhenCorrectedRateIsNotPositive) {
    const auto ww = WWParams::scalar(0.0, 0.0, 2.0);
    EXPECT_FALSE(survival_expectation(ww, 3.0, 1.0).ok());
}

TEST(Survival, DegenerateFormReducesToScalar) {
    const auto ww = WWParams::scalar(0.0, 0.02, 0.1);
    const MatrixXcd s = survival_expectation_degenerate(ww, 7.0);
    EXPECT_NEAR(std::norm(s(0, 0)), std::exp(-0.7), 1e-14);
    EXPECT_NEAR(std::arg(s(0, 0)), -0.14, 1e-14);
}

TEST(Survival, RejectsBadArguments) {
    const auto ww = WWParams::scalar(0.0, 0.0, 0.1);
    EXPECT_THROW(survival_expectation(ww, 1.0, -1.0), std::invalid_argument);
}

TEST(Transition, SigmaZeroIsStandardProbability) {
    const auto ww = WWParams::scalar(0.0, 0.003, 0.1);
    const DecayChannel c{0.07, cd(0.01, 0.004)};
    for (double t : {0.0, 1.0, 12.0, 50.0})
        EXPECT_NEAR(transition_expectation(ww, c, 0.0, t), transition_probability_standard(ww, c, t), 1e-16);
}

TEST(Transition, MatchesGaussianAverageOfStandardProbability) {
    // mpmath quadrature of P(t - sigma w / 2) against N(0, t), sigma = 1, Gamma = 0.1.
    const auto ww = WWParams::scalar(0.0, 0.0, 0.1);
    EXPECT_NEAR(transition_expectation(ww, {0.05, 0.0126}, 1.0, 10.0), 0.00966312812577876620763454372404, 1e-14);
    EXPECT_NEAR(transition_expectation(ww, {0.2, 0.03}, 1.0, 25.0), 0.0205608790044980526773331570287, 1e-14);
}

TEST(Transition, LeadingOrderIsCloseForSmallSigmaSquaredGamma) {
    const auto ww = WWParams::scalar(0.0, 0.0, 0.01);
    const DecayChannel c{0.03, 0.002};
    const double exact = transition_expectation(ww, c, 0.5, 40.0);
    const double leading = transition_expectation(ww, c, 0.5, 40.0, TransitionMode::leading_order);
    EXPECT_NEAR(leading, exact, 1e-3 * exact);
}

TEST(Transition, ResonanceWithoutWidthThrows) {
    const auto ww = WWParams::scalar(0.0, 0.0, 0.0);
    EXPECT_THROW(transition_expectation(ww, {0.0, 0.1}, 0.5, 1.0), std::domain_error);
    EXPECT_THROW(lorentzian_profile(ww, {0.0, 0.1}), std::domain_error);
}

TEST(Transition, SummedOverWideBathApproachesDecayedFraction) {
    const auto bath = build_flat_bath(0.1, 2001, 0.01, 0.0);
    const auto ww = WWParams::scalar(0.0, 0.0, 0.1);
    for (double t : {5.0, 20.0}) {
        const double sum = summed_transition_expectation(ww, bath.spec, 0.0, t);
        EXPECT_NEAR(sum, 1.0 - std::exp(-0.1 * t), 0.02 * (1.0 - std::exp(-0.1 * t)));
    }
}

TEST(Lorentzian, PeakAndHalfWidth) {
    const auto ww = WWParams::scalar(0.0, 0.0, 0.1);
    const double peak = lorentzian_profile(ww, {0.0, 0.01});
    EXPECT_NEAR(peak, 1e-4 / 0.0025, 1e-15);
    EXPECT_NEAR(lorentzian_profile(ww, {0.05, 0.01}), 0.5 * peak, 1e-15);
}

TEST(GoldenRuleF, MatchesArbitraryPrecisionQuadrature) {
    // mpmath.quad on (-inf, inf), 30 digits.
    EXPECT_NEAR(golden_rule_F(0.1, 10.0, 0.1), 3.9864548300430977, 1e-8);
    EXPECT_NEAR(golden_rule_F(0.05, 2.0, 0.5), 3.9722382515021115, 1e-8);
    EXPECT_NEAR(golden_rule_F(1.0, 5.0, 0.2), 5.2948452406102353, 1e-8);
}

TEST(GoldenRuleF, ZeroNoiseMatchesClosedForm) {
    const double gamma = 0.1;
    const double closed[] = {5.979241367897322, 3.9717306075977428, 1.9901213102410258};
    int i = 0;
    for (double gt : {0.1, 1.0, 3.0}) {
        EXPECT_NEAR(golden_rule_F_closed_form(gt / gamma, gamma), closed[i], 1e-14);
        EXPECT_NEAR(golden_rule_F(0.0, gt / gamma, gamma, 1e-12), closed[i], 1e-6);
        ++i;
    }
}

TEST(GoldenRuleF, CorrectionStaysBelowBound) {
    const double gamma = 0.1;
    for (double sigma : {1.0, 2.0, 4.0})
        for (double t : {1.0, 3.0, 10.0}) {
            const double diff =
                std::abs(golden_rule_F(sigma * sigma / (8.0 * t), t, gamma, 1e-13) - golden_rule_F(0.0, t, gamma, 1e-13));
            EXPECT_LE(diff, golden_rule_correction_bound(sigma, t)) << sigma << ' ' << t;
        }
}

TEST(GoldenRuleF, BoundFormula) {
    EXPECT_NEAR(golden_rule_correction_bound(1.0, 2.0), 2.0 * std::sqrt(std::numbers::pi / 4.0) * std::exp(-4.0), 1e-16);
    EXPECT_THROW(golden_rule_correction_bound(0.0, 1.0), std::invalid_argument);
    EXPECT_THROW(golden_rule_F(-1.0, 1.0, 0.1), std::invalid_argument);
}
