#include <cmath>

#include <gtest/gtest.h>
#include <unsupported/Eigen/MatrixFunctions>

#include "sselab/brownian.hpp"
#include "sselab/linear_sde.hpp"
#include "sselab/trajectory.hpp"
#include "sselab/validation.hpp"

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

}  // namespace

TEST(SseStep, PreservesNormAndRecordsDefect) {
    const Hamiltonian h(three_level());
    StateVector s;
    s.amplitudes = three_level_state();
    const auto path = sample_path(1e-3, 500, {1, 0});
    for (std::size_t k = 0; k < path.steps(); ++k) {
        s = sse_step(s, h, 0.8, path.increment(k), path.dt);
        ASSERT_NEAR(s.amplitudes.squaredNorm(), 1.0, 1e-12);
    }
    EXPECT_GT(std::abs(s.norm_defect), 0.0);
    EXPECT_NEAR(s.time, 0.5, 1e-12);
}

TEST(SseStep, SigmaZeroConvergesToSchrodinger) {
    const Hamiltonian h(three_level());
    const VectorXcd psi0 = three_level_state();
    const VectorXcd exact = (-I * three_level() * 1.0).exp() * psi0;
    double previous = 0.0;
    for (int n : {1000, 2000, 4000}) {
        StateVector s;
        s.amplitudes = psi0;
        for (int k = 0; k < n; ++k) s = sse_step(s, h, 0.0, 0.0, 1.0 / n);
        const double err = (s.amplitudes - exact).norm();
        EXPECT_LT(err, 1e-3);
        if (previous > 0.0) {
            EXPECT_NEAR(previous / err, 2.0, 0.2);  // first order
        }
        previous = err;
    }
}

TEST(SseStep, EigenstateIsStationaryUpToPhase) {
    MatrixXcd h = MatrixXcd::Zero(2, 2);
    h(1, 1) = 1.0;
    const Hamiltonian ham(h);
    auto s = StateVector::basis(2, 1);
    s = sse_step(s, ham, 1.0, 0.3, 0.01);
    EXPECT_NEAR(std::norm(s.amplitudes(1)), 1.0, 1e-14);
}

TEST(SseStep, RejectsUnnormalizedState) {
    const Hamiltonian h(three_level());
    StateVector s;
    s.amplitudes = 2.0 * three_level_state();
    EXPECT_THROW(sse_step(s, h, 0.5, 0.0, 0.01), std::invalid_argument);
}

TEST(ImaginaryNoise, MatchesMatrixExponentialOracle) {
    // scipy.linalg.expm(-1j * H * (t - sigma W / 2)) @ psi0 with t=0.7, sigma=0.5, W=0.3.
    const Hamiltonian h(three_level());
    const auto s = ImaginaryNoisePropagator(h, three_level_state()).propagate(0.5, 0.7, 0.3);
    VectorXcd expected(3);
    expected << cd(0.9060900110982165, -0.17987645936260607), cd(-0.06970370784257905, 0.3128011292144049),
        cd(-0.20188109474215496, 0.05644662448814133);
    EXPECT_NEAR((s.amplitudes - expected).norm(), 0.0, 1e-14);
    EXPECT_NEAR(s.amplitudes.norm(), 1.0, 1e-14);
}

TEST(ImaginaryNoise, NoiseOnlyShiftsEffectiveTime) {
    const Hamiltonian h(three_level());
    const ImaginaryNoisePropagator p(h, three_level_state());
    const auto a = p.propagate(1.0, 2.0, 0.4);
    const auto b = p.propagate(0.0, 1.8, 0.0);
    EXPECT_NEAR((a.amplitudes - b.amplitudes).norm(), 0.0, 1e-14);
}

TEST(Linearized, SigmaZeroMatchesInteractionPictureSchrodinger) {
    // Leading order in V for a weakly coupled system: compare with exact evolution.
    SystemSpec spec;
    spec.energies = {0.0, -0.3, -0.1, 0.2, 0.5};
    spec.V = MatrixXcd::Zero(5, 5);
    const cd v[] = {0.005, 0.008, cd(0.006, 0.002), 0.004};
    for (int m = 0; m < 4; ++m) {
        spec.V(0, m + 1) = v[m];
        spec.V(m + 1, 0) = std::conj(v[m]);
    }
    spec.manifold = {0};
    spec.selection_rule = true;
    const LinearizedSystem sys(spec, 0.0);
    auto c = CoefficientState::initial(spec);
    const double dt = 1e-3;
    for (int k = 0; k < 3000; ++k) {
        c = sys.step(c, 0.0, dt);
        c.time = (k + 1) * dt;
    }
    const VectorXcd exact = (-I * spec.hamiltonian_matrix() * 3.0).exp() * CoefficientState::initial(spec).C;
    EXPECT_LT((c.amplitudes(spec) - exact).norm(), 2e-4);
}

TEST(Linearized, RejectsCouplingInsideManifold) {
    SystemSpec spec;
    spec.energies = {0.0, 0.0, 1.0};
    spec.V = MatrixXcd::Zero(3, 3);
    spec.V(0, 1) = spec.V(1, 0) = 0.1;
    spec.manifold = {0, 1};
    EXPECT_THROW(LinearizedSystem(spec, 0.5), std::invalid_argument);
}

TEST(Pathwise, ClosedFormSolvesTheChannelSde) {
    // With M = Gamma = 0 the channel equation is a member of the solvable
    // linear family; its closed form must reproduce pathwise_cm.
    SystemSpec spec;
    spec.energies = {0.0, 0.7};
    spec.V = MatrixXcd::Zero(2, 2);
    spec.V(0, 1) = spec.V(1, 0) = 0.05;
    spec.manifold = {0};
    const auto ww = WWParams::scalar(0.0, 0.0, 0.0);
    const auto path = sample_path(1.0 / 512.0, 2048, {11, 999});
    for (double t : {0.5, 1.0, 4.0}) {
        const cd general = linear_sde_exact(decay_channel_sde(0.7, 0.05, 0.8, ww), path, t).value;
        const cd closed = pathwise_cm(spec, ww, 0.8, 1, path, t);
        EXPECT_LT(std::abs(general - closed), 1e-9 * std::abs(closed)) << t;
    }
}

TEST(Pathwise, SigmaZeroIsStandardWW) {
    SystemSpec spec;
    spec.energies = {0.0, 0.3};
    spec.V = MatrixXcd::Zero(2, 2);
    spec.V(0, 1) = spec.V(1, 0) = 0.02;
    spec.manifold = {0};
    const auto ww = WWParams::scalar(0.0, 0.01, 0.05);
    const double t = 7.0;
    const cd d = 0.0 - 0.3 + 0.01;
    const cd expected = 0.02 / (d - I * 0.025) * (std::exp(I * (0.3 - 0.01) * t - 0.025 * t) - 1.0);
    EXPECT_NEAR(std::abs(pathwise_cm(spec, ww, 0.0, 1, 0.0, t) - expected), 0.0, 1e-15);
    EXPECT_THROW(pathwise_cm(spec, ww, 0.0, 0, 0.0, t), std::invalid_argument);
}
