#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "sselab/ensemble.hpp"
#include "sselab/lindblad.hpp"
#include "sselab/ww_analytic.hpp"

using namespace sselab;

namespace {

ExperimentPlan small_bath_plan() {
    ExperimentPlan plan;
    plan.system = build_flat_bath(0.2, 41, 0.05, 0.0).spec;
    plan.noise.sigma = 1.0;
    plan.dt = 0.05;
    plan.horizon = 5.0;
    plan.output_stride = 10;
    plan.n_traj = 200;
    plan.observables = {Observable::survival, Observable::occupations};
    plan.master_seed = 2024;
    return plan;
}

ExperimentPlan qubit_plan() {
    ExperimentPlan plan;
    plan.system.energies = {0.0, 1.0};
    plan.system.V = MatrixXcd::Zero(2, 2);
    plan.system.manifold = {0};
    VectorXcd plus(2);
    plus << 1.0, 1.0;
    plan.initial_state = plus.normalized();
    plan.noise.sigma = 1.0;
    plan.dt = 0.01;
    plan.horizon = 4.0;
    plan.output_stride = 20;
    plan.n_traj = 2000;
    plan.observables = {Observable::density_matrix};
    plan.master_seed = 99;
    return plan;
}

bool tables_identical(const EstimateTable& a, const EstimateTable& b) {
    if (a.values.size() != b.values.size()) return false;
    for (std::size_t k = 0; k < a.values.size(); ++k)
        for (std::size_t c = 0; c < a.values[k].size(); ++c)
            if (a.values[k][c].mean != b.values[k][c].mean || a.values[k][c].std_error != b.values[k][c].std_error)
                return false;
    return true;
}

}  // namespace

TEST(Ensemble, ResultDoesNotDependOnWorkerCount) {
    const auto plan = small_bath_plan();
    const auto one = run_ensemble(plan, Engine::nonlinear_sse, {1, 64});
    const auto three = run_ensemble(plan, Engine::nonlinear_sse, {3, 64});
    EXPECT_TRUE(tables_identical(one, three));
}

TEST(Ensemble, ColumnsAndGrid) {
    const auto table = run_ensemble(small_bath_plan(), Engine::imaginary_noise, {1});
    EXPECT_EQ(table.times.size(), 11u);
    EXPECT_EQ(table.columns.size(), 1u + 42u);
    EXPECT_EQ(table.columns[0], "survival");
    EXPECT_EQ(table.columns[1], "p_0");
    EXPECT_DOUBLE_EQ(table.values[0][0].mean, 1.0);
}

TEST(Ensemble, SingleTrajectoryHasNoStandardError) {
    auto plan = small_bath_plan();
    plan.n_traj = 1;
    const auto table = run_ensemble(plan, Engine::nonlinear_sse, {1});
    EXPECT_FALSE(table.values.back()[0].std_error.has_value());
}

TEST(Ensemble, StandardErrorShrinksAsRootN) {
    auto plan = small_bath_plan();
    plan.n_traj = 256;
    const double se_small = *run_ensemble(plan, Engine::imaginary_noise, {1}).values.back()[0].std_error;
    plan.n_traj = 1024;
    const double se_large = *run_ensemble(plan, Engine::imaginary_noise, {1}).values.back()[0].std_error;
    EXPECT_NEAR(se_small / se_large, 2.0, 0.3);
}

TEST(Ensemble, EnginesAgreeOnSmallBath) {
    const auto plan = small_bath_plan();
    const auto nonlinear = run_ensemble(plan, Engine::nonlinear_sse, {1});
    const auto imaginary = run_ensemble(plan, Engine::imaginary_noise, {1});
    const auto report = compare_tables(nonlinear, imaginary, {"survival"});
    EXPECT_TRUE(report.passed) << report.max_abs_z;
}

TEST(Ensemble, ImaginaryNoiseMatchesLindblad) {
    const auto plan = qubit_plan();
    const auto table = run_ensemble(plan, Engine::imaginary_noise, {1});
    const auto rho = lindblad_integrate(DensityMatrix::pure(*plan.initial_state),
                                        Hamiltonian(plan.system.hamiltonian_matrix()), 1.0, table.times);
    std::vector<double> oracle;
    for (const auto& r : rho) oracle.push_back(r.rho(0, 1).real());
    const auto report = compare_to_oracle(table.column("rho_re_0_1"), oracle);
    EXPECT_TRUE(report.passed) << report.max_abs_z;
}

TEST(Ensemble, NumericFailureNamesTheStream) {
    ExperimentPlan plan;
    plan.system.energies = {0.0, 1e200};
    plan.system.V = MatrixXcd::Zero(2, 2);
    plan.system.manifold = {0};
    VectorXcd psi(2);
    psi << 0.6, 0.8;
    plan.initial_state = psi;
    plan.noise.sigma = 1.0;
    plan.dt = 0.5;
    plan.horizon = 1.0;
    plan.n_traj = 4;
    plan.observables = {Observable::occupations};
    plan.allow_coarse_step = true;
    try {
        run_ensemble(plan, Engine::nonlinear_sse, {1});
        FAIL() << "expected NumericFailure";
    } catch (const NumericFailure& e) {
        ASSERT_TRUE(e.index().has_value());
        EXPECT_EQ(*e.index(), 0u);
    }
}

TEST(Ensemble, EngineAvailability) {
    const auto bath = small_bath_plan();
    EXPECT_FALSE(engine_unavailable(bath, Engine::linearized));
    EXPECT_FALSE(engine_unavailable(bath, Engine::pathwise));
    const auto qubit = qubit_plan();
    EXPECT_FALSE(engine_unavailable(qubit, Engine::imaginary_noise));
    EXPECT_TRUE(engine_unavailable(qubit, Engine::linearized));
    EXPECT_TRUE(engine_unavailable(qubit, Engine::pathwise));
    EXPECT_THROW(run_ensemble(qubit, Engine::linearized, {1}), std::invalid_argument);
}

TEST(Ensemble, RunTrajectoryIsStreamDeterministic) {
    const auto plan = small_bath_plan();
    const auto a = run_trajectory(plan, Engine::nonlinear_sse, 5);
    const auto b = run_trajectory(plan, Engine::nonlinear_sse, 5);
    const auto c = run_trajectory(plan, Engine::nonlinear_sse, 6);
    EXPECT_EQ((a.back() - b.back()).norm(), 0.0);
    EXPECT_GT((a.back() - c.back()).norm(), 0.0);
}

TEST(Compare, SelfComparisonIsPerfect) {
    const auto table = run_ensemble(small_bath_plan(), Engine::imaginary_noise, {1});
    const auto r = compare_tables(table, table);
    EXPECT_TRUE(r.passed);
    EXPECT_EQ(r.max_abs_z, 0.0);
}

TEST(Compare, WrongOracleFails) {
    std::vector<EnsembleEstimate> est(50, EnsembleEstimate{0.5, 0.01, 100});
    EXPECT_TRUE(compare_to_oracle(est, std::vector<double>(50, 0.51)).passed);
    const auto r = compare_to_oracle(est, std::vector<double>(50, 0.6));
    EXPECT_FALSE(r.passed);
    EXPECT_NEAR(r.max_abs_z, 10.0, 1e-9);
    EXPECT_TRUE(compare_to_oracle(est, std::vector<double>(50, 0.6), 0.1).passed);
}

TEST(Compare, ThresholdsOnOutliers) {
    std::vector<EnsembleEstimate> est(200, EnsembleEstimate{0.0, 1.0, 100});
    est[0].mean = 4.0;  // 1 of 200 above 3: allowed
    EXPECT_TRUE(compare_to_oracle(est, std::vector<double>(200, 0.0)).passed);
    est[1].mean = 4.0;
    est[2].mean = 4.0;  // 1.5% above 3
    EXPECT_FALSE(compare_to_oracle(est, std::vector<double>(200, 0.0)).passed);
    std::vector<EnsembleEstimate> one(200, EnsembleEstimate{0.0, 1.0, 100});
    one[0].mean = 5.5;  // max |z| > 5
    EXPECT_FALSE(compare_to_oracle(one, std::vector<double>(200, 0.0)).passed);
}

TEST(Compare, ZeroErrorWithDeviationIsHardFailure) {
    std::vector<EnsembleEstimate> est{{1.0, std::nullopt, 1}, {0.5, 0.0, 10}};
    EXPECT_TRUE(compare_to_oracle(est, {1.0, 0.5}).passed);
    const auto r = compare_to_oracle(est, {1.0, 0.4});
    EXPECT_FALSE(r.passed);
    EXPECT_TRUE(r.hard_failure.has_value());
}
