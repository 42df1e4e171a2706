#include <gtest/gtest.h>

#include <cmath>

#include <rg2/rg2.hpp>

#include "oracles.hpp"

using namespace rg2;

namespace {

FlowState frame_state(const Geometry& g, double alpha) {
    return FlowState{g, uniform_density(g), DriftField{ScalarField(g.nodes(), 0.0), zero_vector(g)}, 0.0, alpha};
}

// f shifted so that alpha_g = 1
DensityData unit_alpha(const Geometry& g, ScalarField f) {
    const double shift = std::log(total_mass(g, f));
    for (double& v : f) v += shift;
    return {f, false};
}

Geometry warped(std::size_t n) {
    return make_warped_torus(
        2.0 * pi, n, [](double r) { return 1.0 + 0.1 * std::cos(r); }, [](double r) { return 1.0 + 0.3 * std::sin(r); });
}

} // namespace

TEST(Flow, ConstantCurvatureAgainstScalarOde) {
    for (auto [n, K, alpha] : {std::tuple{3, 1.0, 1.0}, std::tuple{4, 1.0, 0.5}, std::tuple{2, 1.0, 0.1},
                               std::tuple{3, -1.0, 0.5}}) {
        const auto g = make_constant_curvature(n, K, 1.0, 1.0);
        const auto tr = integrate_rg2(frame_state(g, alpha), 1e-3, 50, FlowMode::plain);
        ASSERT_FALSE(tr.halted);
        const double want = oracle::sigma_rk4(n, K, alpha, 1.0, 0.0, 0.05, 5000);
        EXPECT_NEAR(tr.states.back().g.cc().sigma, want, 1e-10) << n << " " << K << " " << alpha;
    }
}

TEST(Flow, ImplicitRelationAgainstScalarOde) {
    for (auto [n, K, alpha] : {std::tuple{3, 1.0, 1.0}, std::tuple{4, 1.0, 0.5}, std::tuple{3, -1.0, 1.0},
                               std::tuple{5, -2.0, 0.3}})
        for (double t : {0.01, 0.03, 0.05}) {
            const double want = oracle::sigma_rk4(n, K, alpha, 1.0, 0.0, t, 4000);
            EXPECT_NEAR(constant_curvature_implicit_sigma(n, K, alpha, t), want, 1e-10);
        }
    EXPECT_EQ(constant_curvature_implicit_sigma(3, 0.0, 1.0, 2.0), 1.0);
    EXPECT_THROW(constant_curvature_implicit_sigma(3, -3.0, 1.0, 0.1), BranchError);
    EXPECT_THROW(constant_curvature_implicit_sigma(3, 1.0, 1.0, 10.0), BranchError);
}

TEST(Flow, HomogeneousAgainstKoszulOde) {
    const std::array<double, 3> l{1, 2, 3}, a{1, 1.5, 1};
    const auto g = make_homogeneous3(l, a);
    const auto tr = integrate_rg2(frame_state(g, 0.3), 1e-3, 100, FlowMode::plain);
    ASSERT_FALSE(tr.halted);
    const auto want = oracle::homogeneous_rk4(l, a, 0.3, 0.1, 2000);
    for (int i = 0; i < 3; ++i) EXPECT_NEAR(tr.states.back().g.h3().a[i], want[i], 1e-10);
}

TEST(Flow, PlainRhsScalingLaw) {
    // RHS(lambda g; alpha) = RHS(g; alpha / lambda) in coordinates
    const std::vector<Geometry> gs{make_constant_curvature(3, 1.0), make_homogeneous3({1, 2, 3}, {1, 1.5, 1}), warped(64)};
    for (const auto& g : gs)
        for (double lam : {0.5, 2.0, 4.0}) {
            const auto a = tensor_as_coefficients(g, rg2_rhs(g, 0.7 / lam));
            const auto b = tensor_as_coefficients(rescale_metric(g, lam), rg2_rhs(rescale_metric(g, lam), 0.7));
            for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(b[i], a[i], 1e-12 * (1.0 + std::abs(a[i])));
        }
}

TEST(Flow, FlatTorusIsStationary) {
    const auto g = make_warped_torus(2.0 * pi, 32, [](double) { return 1.0; }, [](double) { return 1.0; });
    const auto tr = integrate_rg2(frame_state(g, 1.0), 1e-3, 20, FlowMode::scale_invariant);
    for (const auto& s : tr.states) EXPECT_EQ(metric_coefficients(s.g), metric_coefficients(g));
}

TEST(Flow, RefusesNonParabolicStart) {
    const auto g = make_constant_curvature(3, -1.0, 1.0, 1.0);
    EXPECT_THROW(integrate_rg2(frame_state(g, 1.0), 1e-3, 10, FlowMode::plain), NotParabolic);
    EXPECT_THROW(integrate_rg2(frame_state(g, 0.5), 1e-3, 10, FlowMode::deturck), RepresentationError);
    EXPECT_THROW(integrate_rg2(frame_state(warped(64), 1.0), 1.0, 10, FlowMode::plain), StepSizeError);
}

TEST(Flow, ShrinkingSphereHaltsCleanly) {
    const auto g = make_constant_curvature(3, 1.0);
    const auto tr = integrate_rg2(frame_state(g, 0.1), 1e-2, 1000, FlowMode::plain);
    EXPECT_TRUE(tr.halted);
    EXPECT_FALSE(tr.halt_reason.empty());
    EXPECT_LT(tr.states.size(), 1001u);
}

TEST(Flow, SeesawMeasureIsTerminal) {
    const auto g = warped(64);
    ScalarField f(64);
    for (std::size_t i = 0; i < 64; ++i) f[i] = 0.2 * std::cos(g.wt().node(i));
    FlowState s{g, unit_alpha(g, f), {ScalarField(64, 0.0), zero_vector(g)}, 0.0, 1.0};
    f = s.density.f;
    const auto tr = seesaw_solve(s, 0.02, 4e-4, {FlowMode::scale_invariant, DriftPolicy::none});
    ASSERT_EQ(tr.states.size(), 51u);
    EXPECT_TRUE(tr.measure_resolved);
    // node masses at T0 are the prescribed ones
    const auto m0 = measure_weights(g, f), mT = measure_weights(tr.states.back().g, tr.states.back().density.f);
    for (std::size_t i = 0; i < 64; ++i) EXPECT_NEAR(mT[i], m0[i], 1e-14 * m0[i]);
    // and total mass is carried back unchanged
    for (const auto& st : tr.states) EXPECT_NEAR(total_mass(st.g, st.density.f) / total_mass(g, f), 1.0, 1e-13);
    EXPECT_THROW(seesaw_solve(s, 0.02, 3e-3, {}), AlignmentError);
}

TEST(Flow, ScaleSymmetryOfPrescribedDrift) {
    const auto g = warped(48);
    ScalarField psi(48);
    for (std::size_t i = 0; i < 48; ++i) psi[i] = 0.3 * std::sin(g.wt().node(i));
    const auto d = unit_alpha(g, ScalarField(48, 0.0)); // same f at every scale
    auto make = [&](double lam) {
        const auto gl = rescale_metric(g, lam);
        return FlowState{gl, d, helmholtz_otto(gl, d.f, gradient(gl, psi)), 0.0, 1.0};
    };
    const SeesawOptions opt{FlowMode::scale_invariant, DriftPolicy::prescribed};
    const auto base = seesaw_solve(make(1.0), 0.02, 4e-4, opt);
    for (double lam : {0.5, 2.0}) {
        const auto tr = seesaw_solve(make(lam), lam * 0.02, lam * 4e-4, opt);
        const auto r = verify_scale_symmetry(base, lam, tr);
        EXPECT_LT(std::max({r.metric, r.measure, r.drift}), 1e-10);
        EXPECT_EQ(r.snapshots, base.states.size());
    }
    // misaligned times are refused
    const auto other = seesaw_solve(make(2.0), 0.02, 4e-4, opt);
    EXPECT_THROW(verify_scale_symmetry(base, 2.0, other), AlignmentError);
}

TEST(Flow, EvolvedDriftBreaksScaleCovariance) {
    // the (alpha^2/64)|Rm2(g,xi)|^2 xi term carries an extra lambda^{-2}
    auto make = [](double lam) {
        const auto g = rescale_metric(make_constant_curvature(3, 1.0), lam);
        FlowState s{g, uniform_density(g), {{0.0}, VectorField{{1.0 / lam}, {}}}, 0.0, 1.0};
        return s;
    };
    const SeesawOptions opt{FlowMode::scale_invariant, DriftPolicy::evolve};
    const auto base = seesaw_solve(make(1.0), 0.05, 5e-4, opt);
    const auto tr = seesaw_solve(make(2.0), 0.1, 1e-3, opt);
    const auto r = verify_scale_symmetry(base, 2.0, tr);
    EXPECT_LT(r.metric, 1e-12);
    EXPECT_GT(r.drift, 1e-6);
}

TEST(Flow, DeturckOnFrameClassesKeepsKillingFields) {
    const auto g = make_homogeneous3({2, 2, 2}, {1, 1, 0.5});
    FlowState s{g, unit_alpha(g, {0.0}), helmholtz_otto(g, {0.0}, VectorField{{0, 0, 1.0}, {}}), 0.0, 1.0};
    const auto tr = integrate_deturck(s, 1e-3, 20);
    ASSERT_FALSE(tr.halted);
    for (const auto& st : tr.states) {
        const auto x = assemble(st.g, st.drift).v;
        EXPECT_EQ(x[0], 0.0);
        EXPECT_EQ(x[1], 0.0);
    }
}

TEST(Flow, DeturckHaltsOnBlowUp) {
    // the pulled-back drift equation is backward parabolic on the torus; a long
    // horizon must end in a halt, not in garbage
    const auto g = warped(64);
    std::vector<double> v(64);
    for (std::size_t j = 0; j < 64; ++j) v[j] = 2.0 / (g.wt().rho[j] + g.wt().rho[(j + 1) % 64]);
    const auto d = unit_alpha(g, ScalarField(64, 0.0));
    FlowState s{g, d, helmholtz_otto(g, d.f, VectorField{v, std::vector<double>(64, 0.0)}), 0.0, 1.0};
    const auto tr = integrate_deturck(s, 4e-4, 2000);
    EXPECT_TRUE(tr.halted);
    for (const auto& st : tr.states)
        for (double c : metric_coefficients(st.g)) EXPECT_TRUE(std::isfinite(c));
}
