#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "sselab/hamiltonian.hpp"
#include "sselab/system.hpp"
#include "sselab/zeno_rabi.hpp"

using namespace sselab;

namespace {

SystemSpec small_bath() {
    // Decaying level at 0.25 above a 21-level band 0.1 apart centred on 0.
    auto bath = build_flat_bath(0.2, 21, 0.1, 0.0).spec;
    bath.energies[0] = 0.25;
    bath.bath_spacing.reset();
    return bath;
}

}  // namespace

TEST(FlatBath, CouplingAndLayout) {
    const auto bath = build_flat_bath(0.1, 201, 0.01, 0.0);
    // numpy: sqrt(0.1 * 0.01 / (2 pi))
    EXPECT_NEAR(bath.coupling, 0.012615662610100801, 1e-16);
    const auto& spec = bath.spec;
    ASSERT_EQ(spec.dim(), 202u);
    EXPECT_DOUBLE_EQ(spec.energies[1], -1.0);
    EXPECT_DOUBLE_EQ(spec.energies[101], 0.0);
    EXPECT_DOUBLE_EQ(spec.energies[201], 1.0);
    EXPECT_TRUE(spec.satisfies_selection_rule());
    EXPECT_NO_THROW(spec.validate());
    EXPECT_FALSE(bath.warning.has_value());
}

TEST(FlatBath, NarrowBandWarns) {
    EXPECT_TRUE(build_flat_bath(0.5, 21, 0.1, 0.0).warning.has_value());
}

TEST(FlatBath, RejectsBadInput) {
    EXPECT_THROW(build_flat_bath(0.1, 200, 0.01, 0.0), std::invalid_argument);
    EXPECT_THROW(build_flat_bath(0.1, 201, 0.0, 0.0), std::invalid_argument);
    EXPECT_THROW(build_flat_bath(-0.1, 201, 0.01, 0.0), std::invalid_argument);
}

TEST(FlatBath, ZeroWidthIsAcceptedAndDecouples) {
    const auto bath = build_flat_bath(0.0, 21, 0.1, 0.0);
    EXPECT_EQ(bath.coupling, 0.0);
    EXPECT_EQ(bath.spec.V.norm(), 0.0);
}

TEST(WWParams, GoldenRuleOnSymmetricBath) {
    const auto spec = build_flat_bath(0.1, 201, 0.01, 0.0).spec;
    const auto ww = compute_ww_params(spec, 0.01);
    EXPECT_NEAR(ww.width(), 0.1, 1e-14);
    EXPECT_NEAR(ww.mass_shift(), 0.0, 1e-15);
}

TEST(WWParams, PrincipalValueMassShift) {
    // Direct sum oracle: sum_m v^2 / (0.25 - E_m) = 0.015441366440081972.
    const auto spec = small_bath();
    const auto ww = compute_ww_params(spec, 0.04);
    EXPECT_NEAR(ww.mass_shift(), 0.015441366440081972, 1e-15);
    // No bath level within 0.04 of 0.25 (nearest at 0.2 and 0.3): no width.
    EXPECT_EQ(ww.width(), 0.0);
}

TEST(WWParams, OnShellWindowWidth) {
    // Window half-width 0.06 captures the levels at 0.2 and 0.3.
    const auto spec = small_bath();
    const double v = std::sqrt(0.2 * 0.1 / (2.0 * std::numbers::pi));
    const auto ww = compute_ww_params(spec, 0.06);
    EXPECT_NEAR(ww.width(), 2.0 * std::numbers::pi * 2.0 * v * v / 0.12, 1e-14);
}

TEST(WWParams, DegenerateManifoldIsMatrixValued) {
    SystemSpec spec;
    spec.energies = {0.0, 0.0, -0.5, 0.5};
    spec.V = MatrixXcd::Zero(4, 4);
    spec.V(0, 2) = 0.1;
    spec.V(0, 3) = 0.2;
    spec.V(1, 2) = cd(0.0, 0.1);
    spec.V(1, 3) = 0.05;
    spec.V = (spec.V + spec.V.adjoint()).eval();
    spec.manifold = {0, 1};
    spec.selection_rule = true;
    const auto ww = compute_ww_params(spec, 0.1);
    ASSERT_EQ(ww.dim(), 2);
    // M_ab = sum_m V_am V_mb / (E_s - E_m)
    cd m01 = spec.V(0, 2) * spec.V(2, 1) / 0.5 + spec.V(0, 3) * spec.V(3, 1) / -0.5;
    EXPECT_NEAR(std::abs(ww.M(0, 1) - m01), 0.0, 1e-15);
    EXPECT_NEAR((ww.M - ww.M.adjoint()).norm(), 0.0, 1e-15);
}

TEST(SystemSpec, ValidationCatchesErrors) {
    auto spec = build_flat_bath(0.1, 21, 0.1, 0.0).spec;
    spec.V(0, 1) = cd(1.0, 1.0);
    EXPECT_THROW(spec.validate(), std::invalid_argument);  // not Hermitian

    auto s2 = build_flat_bath(0.1, 21, 0.1, 0.0).spec;
    s2.manifold = {0, 1};  // energies differ
    EXPECT_THROW(s2.validate(), std::invalid_argument);

    auto s3 = build_flat_bath(0.1, 21, 0.1, 0.0).spec;
    s3.initial = 3;
    EXPECT_THROW(s3.validate(), std::invalid_argument);

    auto s4 = build_flat_bath(0.1, 21, 0.1, 0.0).spec;
    s4.manifold = {0, 11};
    s4.energies[11] = 0.0;  // degenerate, but V couples 0 and 11
    EXPECT_THROW(s4.validate(), std::invalid_argument);
}

TEST(Hamiltonian, RejectsNonHermitianAndAppliesSparse) {
    MatrixXcd bad = MatrixXcd::Zero(2, 2);
    bad(0, 1) = 1.0;
    EXPECT_THROW(Hamiltonian{bad}, std::invalid_argument);
    const auto spec = build_flat_bath(0.1, 201, 0.01, 0.0).spec;
    const Hamiltonian h(spec.hamiltonian_matrix());
    VectorXcd v = VectorXcd::LinSpaced(202, 0.0, 1.0);
    EXPECT_NEAR((h.apply(v) - spec.hamiltonian_matrix() * v).norm(), 0.0, 1e-14);
}

TEST(EnergyVariance, FlatBathIsNvSquared) {
    // Direct sum oracle: N v^2 = 201 * 0.1 * 0.01 / (2 pi).
    const auto spec = build_flat_bath(0.1, 201, 0.01, 0.0).spec;
    EXPECT_NEAR(energy_variance(spec), 0.031990143561470966, 1e-15);
}
