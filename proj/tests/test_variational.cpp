#include <gtest/gtest.h>

#include <cmath>

#include <rg2/rg2.hpp>

#include "oracles.hpp"

using namespace rg2;

namespace {

Geometry warped(std::size_t n) {
    return make_warped_torus(
        2.0 * pi, n, [](double r) { return 1.0 + 0.1 * std::cos(r); }, [](double r) { return 1.0 + 0.3 * std::sin(r); });
}

ScalarField sample(const Geometry& g, double (*fn)(double)) {
    ScalarField u(g.nodes());
    for (std::size_t i = 0; i < u.size(); ++i) u[i] = fn(g.wt().node(i));
    return u;
}

DensityData unit_alpha(const Geometry& g, ScalarField f) {
    const double shift = std::log(total_mass(g, f));
    for (double& v : f) v += shift;
    return {f, false};
}

} // namespace

TEST(Variational, IntegrationByParts) {
    const auto g = warped(96);
    const auto f = sample(g, [](double r) { return 0.3 * std::cos(r); });
    const auto u = sample(g, [](double r) { return std::sin(r) + 0.2 * std::cos(3.0 * r); });
    const auto v = sample(g, [](double r) { return std::exp(std::cos(2.0 * r)); });
    const auto lu = weighted_laplacian_apply(g, f, u), lv = weighted_laplacian_apply(g, f, v);
    const double dir = dirichlet_energy(g, f, u);
    ScalarField ulu(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) ulu[i] = u[i] * lu[i];
    EXPECT_NEAR(-integrate(g, f, ulu), dir, 1e-10 * dir);
    // int Lap_w u d omega = 0 and symmetry
    EXPECT_NEAR(integrate(g, f, lu), 0.0, 1e-12);
    ScalarField a(u.size()), b(u.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        a[i] = u[i] * lv[i];
        b[i] = v[i] * lu[i];
    }
    EXPECT_NEAR(integrate(g, f, a), integrate(g, f, b), 1e-12);
}

TEST(Variational, FrameClassEnergies) {
    const auto g = make_constant_curvature(3, 1.0, 2.0);
    const ScalarField f{0.4};
    const double m = total_mass(g, f), R = 3.0, rm = 3.0; // K/sigma = 1/2
    EXPECT_NEAR(perelman_F(g, f), R * m, 1e-12);
    const DriftField none{{0.0}, VectorField{{0.0}, {}}};
    EXPECT_NEAR(f2_energy(g, f, none, 0.8), (R + 0.1 * rm) * m, 1e-12);
    // Killing drift: F_ext adds int |xi|^2 = sigma s^2 m
    const DriftField kill{{0.0}, VectorField{{0.5}, {}}};
    EXPECT_NEAR(extended_F(g, f, kill), (R + 2.0 * 0.25) * m, 1e-12);
    // Killing fields are divergence-free
    EXPECT_NEAR(f2_energy(g, f, kill, 0.8), f2_energy(g, f, none, 0.8), 1e-12);
}

TEST(Variational, FlatTorusEnergiesVanish) {
    const auto g = make_warped_torus(2.0 * pi, 32, [](double) { return 1.0; }, [](double) { return 1.0; });
    const ScalarField f(32, 0.7);
    EXPECT_EQ(perelman_F(g, f), 0.0);
    EXPECT_EQ(extended_F(g, f, ScalarField(32, 1.0)), 0.0);
}

TEST(Variational, FIsTotalPerelmanScalar) {
    // int (R + |grad f|^2) d omega = int R^Per d omega, exactly in the discretisation
    const auto g = warped(64);
    const auto f = sample(g, [](double r) { return 0.5 * std::sin(r) + 0.2 * std::cos(2.0 * r); });
    const double a = perelman_F(g, f), b = integrate(g, f, perelman_scalar(g, f));
    EXPECT_NEAR(a, b, 1e-12 * std::max(1.0, std::abs(a)));
}

TEST(Variational, ExtendedFFormsAgreeForGradients) {
    const auto g = warped(64);
    const auto f = sample(g, [](double r) { return 0.3 * std::cos(r); });
    const auto psi = sample(g, [](double r) { return std::sin(2.0 * r); });
    const auto d = helmholtz_otto(g, f, gradient(g, psi));
    const double a = extended_F(g, f, d.psi), b = extended_F(g, f, d);
    EXPECT_NEAR(a, b, 1e-10 * std::abs(a));
}

TEST(Variational, NashTermsOnFrameClass) {
    const auto g = make_constant_curvature(3, 1.0);
    FlowState s{g, unit_alpha(g, {0.0}), {{0.0}, VectorField{{0.0}, {}}}, 0.25, 0.6};
    const auto e = nash_entropy(s);
    const double m = total_mass(g, s.density.f), ag = alpha_g(g, s.density.f);
    EXPECT_NEAR(m, 1.0, 1e-14);
    EXPECT_NEAR(e.N, -s.density.f[0] * m + 6.0 * (m / ag) * 0.25, 1e-12);
    EXPECT_NEAR(e.production, (6.0 + 0.15 * 12.0 + 6.0 / ag) * m, 1e-12);
    s.drift.perp.v = {0.1};
    EXPECT_THROW(nash_entropy(s), GaugeError);
}

TEST(Variational, NashRateMatchesProduction) {
    // dN/dt = production; forward differences converge at first order
    const auto g = warped(64);
    const auto f = sample(g, [](double r) { return 0.2 * std::cos(r); });
    FlowState s{g, unit_alpha(g, f), {ScalarField(64, 0.0), zero_vector(g)}, 0.0, 1.0};
    std::vector<double> err;
    for (double dt : {4e-4, 2e-4, 1e-4}) {
        const auto tr = seesaw_solve(s, 0.02, dt, {FlowMode::scale_invariant, DriftPolicy::none});
        double e = 0.0;
        for (std::size_t k = 0; k + 1 < tr.states.size(); ++k) {
            const auto a = nash_entropy(tr.states[k]), b = nash_entropy(tr.states[k + 1]);
            EXPECT_GE(a.production, 0.0);
            e = std::max(e, std::abs((b.N - a.N) / dt - a.production));
        }
        err.push_back(e);
    }
    EXPECT_GT(std::log2(err[0] / err[1]), 0.9);
    EXPECT_GT(std::log2(err[1] / err[2]), 0.9);
}

TEST(Variational, RmVariationConverges) {
    std::vector<double> rel;
    for (std::size_t n : {64u, 128u}) {
        const auto g = warped(n);
        SymmetricTensorField t;
        t.c.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            const double r = g.wt().node(i);
            t.c[i] = {0.5 * std::cos(r), 0.3 * std::sin(2.0 * r), 0.0};
        }
        const auto v = rm_norm_variation(g, sample(g, [](double r) { return 0.2 * std::cos(r); }), t);
        EXPECT_NE(v.formula, 0.0);
        rel.push_back(v.relative);
    }
    EXPECT_LT(rel[1], 1e-3);
    EXPECT_LT(rel[1], rel[0]);
    EXPECT_THROW(rm_norm_variation(make_constant_curvature(3, 1.0), {0.0}, SymmetricTensorField{{{1, 0, 0}}}),
                 UnsupportedCase);
}

TEST(Variational, FutakiBoundAgainstGoldenSection) {
    for (double diam : {0.5, 1.0, pi, 7.0})
        for (double c0 : {-3.0, -0.1, 0.0, 0.4, 2.0, 50.0})
            EXPECT_NEAR(futaki_bound(diam, c0), oracle::futaki_golden(diam, c0), 1e-9 * std::max(1.0, std::abs(c0)))
                << diam << " " << c0;
    EXPECT_NEAR(futaki_bound(1.0, 0.0), pi * pi, 1e-14);
    EXPECT_THROW(futaki_bound(0.0, 1.0), InvalidGeometry);
}

TEST(Variational, StationaryFlatReport) {
    const auto g = make_warped_torus(2.0 * pi, 32, [](double) { return 1.0; }, [](double) { return 1.0; });
    FlowState s{g, unit_alpha(g, ScalarField(32, 0.0)), {ScalarField(32, 0.0), zero_vector(g)}, 0.0, 1.0};
    const auto tr = seesaw_solve(s, 0.01, 1e-3, {FlowMode::scale_invariant, DriftPolicy::none});
    const auto rep = monotonicity_report(tr);
    EXPECT_TRUE(rep.pass());
    for (const auto& q : rep.inequalities) {
        if (q.name.rfind("nash", 0) == 0) {
            // linear term: dN/dt = n(n-1) alpha_g^{n/2-1} = 2 on a stationary flat 2-torus
            for (double x : q.quotient) EXPECT_NEAR(x, 2.0, 1e-12) << q.name;
            continue;
        }
        for (double x : q.quotient) EXPECT_EQ(x, 0.0) << q.name;
        for (double x : q.bound) EXPECT_EQ(x, 0.0) << q.name;
    }
}

TEST(Variational, ExtendedFMonotoneOnFrameDeturck) {
    const auto g = make_homogeneous3({2, 2, 2}, {1, 1, 0.5});
    FlowState s{g, unit_alpha(g, {0.0}), helmholtz_otto(g, {0.0}, VectorField{{0, 0, std::sqrt(2.0)}, {}}), 0.0, 1.0};
    const auto tr = integrate_deturck(s, 5e-5, 200);
    const auto rep = monotonicity_report(tr);
    EXPECT_TRUE(rep.pass());
    bool seen = false;
    for (const auto& q : rep.inequalities)
        if (q.name == "extended_F") {
            seen = true;
            for (double x : q.slack) EXPECT_GT(x, 0.0);
        }
    EXPECT_TRUE(seen);
}

TEST(Variational, XiMaximumPrincipleOnTorus) {
    const auto g = warped(64);
    std::vector<double> v(64);
    for (std::size_t j = 0; j < 64; ++j) {
        const double r = g.wt().node(j) + 0.5 * g.wt().spacing();
        v[j] = (0.5 + std::sin(r)) * 2.0 / (g.wt().rho[j] + g.wt().rho[(j + 1) % 64]);
    }
    const auto d = unit_alpha(g, sample(g, [](double r) { return 0.2 * std::cos(r); }));
    FlowState s{g, d, helmholtz_otto(g, d.f, VectorField{v, std::vector<double>(64, 0.0)}), 0.0, 1.0};
    const auto tr = seesaw_solve(s, 0.05, 1e-4, {FlowMode::scale_invariant, DriftPolicy::evolve});
    for (std::size_t k = tr.states.size() - 1; k > 0; --k) {
        const double a = max_norm2(tr.states[k].g, assemble(tr.states[k].g, tr.states[k].drift));
        const double b = max_norm2(tr.states[k - 1].g, assemble(tr.states[k - 1].g, tr.states[k - 1].drift));
        EXPECT_LE(b - a, 1e-12) << "eta step ending at t = " << tr.states[k - 1].t;
    }
}
