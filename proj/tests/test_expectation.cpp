#include <cmath>
#include <vector>

#include <gtest/gtest.h>
#include <unsupported/Eigen/MatrixFunctions>

#include "sselab/lindblad.hpp"
#include "sselab/ww_analytic.hpp"

using namespace sselab;

namespace {

const cd I(0.0, 1.0);

MatrixXcd three_level() {
    MatrixXcd h(3, 3);
    h << 0.3, cd(0.2, -0.1), 0.05,
         cd(0.2, 0.1), -0.4, cd(0.0, 0.15),
         0.05, cd(0.0, -0.15), 0.9;
    return h;
}

VectorXcd three_level_state() {
    VectorXcd psi(3);
    psi << 1.0, cd(0.0, 0.5), -0.25;
    return psi.normalized();
}

// One decaying level at 0 coupled to four channels.
SystemSpec five_level() {
    SystemSpec spec;
    spec.energies = {0.0, -0.3, -0.1, 0.2, 0.5};
    spec.V = MatrixXcd::Zero(5, 5);
    const cd v[] = {0.05, 0.08, cd(0.06, 0.02), 0.04};
    for (int m = 0; m < 4; ++m) {
        spec.V(0, m + 1) = v[m];
        spec.V(m + 1, 0) = std::conj(v[m]);
    }
    spec.manifold = {0};
    spec.selection_rule = true;
    return spec;
}

std::vector<double> uniform_grid(double t_max, std::size_t n) {
    std::vector<double> g(n + 1);
    for (std::size_t k = 0; k <= n; ++k) g[k] = t_max * static_cast<double>(k) / static_cast<double>(n);
    return g;
}

}  // namespace

TEST(Lindblad, MatchesVectorisedPropagatorOracle) {
    // expm of the superoperator on vec(rho), sigma = 0.8, t = 2.
    const auto out = lindblad_integrate(DensityMatrix::pure(three_level_state()), Hamiltonian(three_level()), 0.8,
                                        std::vector<double>{2.0});
    const auto& rho = out.back().rho;
    EXPECT_NEAR(rho(0, 0).real(), 0.9302708685622931, 1e-9);
    EXPECT_NEAR(std::abs(rho(0, 1) - cd(-0.08942153623091445, 0.08588321376309938)), 0.0, 1e-9);
    EXPECT_NEAR(std::abs(rho(1, 2) - cd(0.0039018591757132804, 0.012240302710723388)), 0.0, 1e-9);
    EXPECT_LT(out.back().trace_defect(), 1e-12);
    EXPECT_LT(out.back().hermiticity_defect(), 1e-12);
}

TEST(Lindblad, SigmaZeroIsUnitary) {
    const VectorXcd psi0 = three_level_state();
    const auto out = lindblad_integrate(DensityMatrix::pure(psi0), Hamiltonian(three_level()), 0.0, std::vector<double>{1.5});
    const VectorXcd psi = (-I * three_level() * 1.5).exp() * psi0;
    EXPECT_NEAR((out.back().rho - psi * psi.adjoint()).norm(), 0.0, 1e-8);
    EXPECT_NEAR(out.back().purity(), 1.0, 1e-8);
}

TEST(Lindblad, PurityDecaysAndPopulationsOfEnergyEigenbasisAreConserved) {
    MatrixXcd h = MatrixXcd::Zero(2, 2);
    h(1, 1) = 1.0;
    VectorXcd plus(2);
    plus << 1.0, 1.0;
    plus.normalize();
    const auto out = lindblad_integrate(DensityMatrix::pure(plus), Hamiltonian(h), 1.0, std::vector<double>{1.0, 4.0});
    EXPECT_NEAR(out[1].rho(0, 0).real(), 0.5, 1e-12);
    // |rho_01| = exp(-sigma^2 t / 8) / 2 for unit level splitting.
    EXPECT_NEAR(std::abs(out[1].rho(0, 1)), 0.5 * std::exp(-0.5), 1e-9);
    EXPECT_LT(out[1].purity(), out[0].purity());
}

TEST(Lindblad, RejectsBadInput) {
    const Hamiltonian h(three_level());
    DensityMatrix bad{2.0 * MatrixXcd::Identity(3, 3), 0.0};
    EXPECT_THROW(lindblad_integrate(bad, h, 0.1, std::vector<double>{1.0}), std::invalid_argument);
    EXPECT_THROW(lindblad_integrate(DensityMatrix::pure(three_level_state()), h, 0.1, std::vector<double>{1.0, 0.5}),
                 std::invalid_argument);
}

TEST(ExpectationCoefficients, MatchesIndependentOdeOracle) {
    // scipy solve_ivp (rtol 1e-12) of the closed E[C] system, sigma = 0.7, t = 3.
    const auto spec = five_level();
    const auto out = expectation_coefficients(spec, 0.7, std::vector<double>{3.0});
    VectorXcd expected(5);
    expected << cd(0.9362484126886603, 0.00062729966916172), cd(-0.05833163586795251, -0.12797636105852742),
        cd(-0.03307438968328657, -0.23123577201958737), cd(-0.00669021822564273, -0.18197411616211617),
        cd(0.06852542778744965, -0.07861114793376783);
    EXPECT_NEAR((out.back() - expected).norm(), 0.0, 1e-9);
}

TEST(ExpectationCoefficients, SigmaZeroIsInteractionPictureSchrodinger) {
    const auto spec = five_level();
    const auto out = expectation_coefficients(spec, 0.0, std::vector<double>{3.0});
    VectorXcd expected(5);
    expected << cd(0.9381731366991167, 0.00063357473003778), cd(-0.06110462979815509, -0.1281405106866011),
        cd(-0.0345663050568368, -0.23150765521096803), cd(-0.00453270281237436, -0.18291779456513077),
        cd(0.0721648160068259, -0.07873467087751697);
    EXPECT_NEAR((out.back() - expected).norm(), 0.0, 1e-9);
}

TEST(ExpectationCoefficients, RequiresSelectionRule) {
    auto spec = five_level();
    spec.energies = {0.0, 0.0, -0.1, 0.2, 0.5};
    spec.manifold = {0, 1};
    EXPECT_THROW(expectation_coefficients(spec, 0.5, std::vector<double>{1.0}), std::invalid_argument);
}

TEST(Occupations, MatchIndependentOdeOracle) {
    // Same oracle, integrating d E|C_m|^2 / dt alongside E[C].
    const auto spec = five_level();
    const auto grid = uniform_grid(3.0, 600);
    const auto series = expectation_coefficients(spec, 0.7, grid);
    const auto occ = occupation_expectations(spec, 0.7, series, grid);
    const double expected[] = {0.020649553846478368, 0.056810859095572264, 0.03455815213903901, 0.011419951152013804};
    for (int m = 1; m <= 4; ++m) EXPECT_NEAR(occ.back()(m), expected[m - 1], 1e-9) << "m=" << m;
    EXPECT_NEAR(occ.back()(0), std::norm(series.back()(0)), 0.0);
}

TEST(Occupations, SigmaZeroEqualsSquaredAmplitudes) {
    const auto spec = five_level();
    const auto grid = uniform_grid(3.0, 600);
    const auto series = expectation_coefficients(spec, 0.0, grid);
    const auto occ = occupation_expectations(spec, 0.0, series, grid);
    for (int m = 1; m <= 4; ++m) EXPECT_NEAR(occ.back()(m), std::norm(series.back()(m)), 1e-9);
}

TEST(Occupations, NoiseAddsPositiveVarianceTerm) {
    // E|C_m|^2 >= |E C_m|^2 for sigma > 0.
    const auto spec = five_level();
    const auto grid = uniform_grid(3.0, 300);
    const auto series = expectation_coefficients(spec, 1.0, grid);
    const auto occ = occupation_expectations(spec, 1.0, series, grid);
    for (int m = 1; m <= 4; ++m) EXPECT_GT(occ.back()(m), std::norm(series.back()(m)));
}

TEST(Occupations, RejectNonUniformGrid) {
    const auto spec = five_level();
    const std::vector<double> grid{0.0, 0.5, 1.5};
    const auto series = expectation_coefficients(spec, 0.5, grid);
    EXPECT_THROW(occupation_expectations(spec, 0.5, series, grid), std::invalid_argument);
}

TEST(Occupations, FlatBathFollowsWWForm) {
    // Linearized expectation dynamics on a wide bath versus the closed form.
    const auto bath = build_flat_bath(0.1, 2001, 0.01, 0.0);
    const auto grid = uniform_grid(20.0, 400);
    const double sigma = 1.0;
    const auto series = expectation_coefficients(bath.spec, sigma, grid);
    const auto occ = occupation_expectations(bath.spec, sigma, series, grid);
    const auto ww = WWParams::scalar(0.0, 0.0, 0.1);
    EXPECT_NEAR(occ.back()(0), survival_expectation(ww, sigma, 20.0).value, 5e-3);
    const auto channels = decay_channels(bath.spec);
    for (std::size_t m : {1001u, 1003u, 1011u})
        EXPECT_NEAR(occ.back()(static_cast<Eigen::Index>(m)), transition_expectation(ww, channels[m - 1], sigma, 20.0), 2e-3)
            << m;
}
