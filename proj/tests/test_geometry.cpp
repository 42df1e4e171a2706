#include <gtest/gtest.h>

#include <rg2/rg2.hpp>

using namespace rg2;

TEST(Geometry, RoundSphereVolume) {
    EXPECT_NEAR(volume(make_constant_curvature(3, 1.0)), 2.0 * pi * pi, 1e-12);
    EXPECT_NEAR(volume(make_constant_curvature(2, 1.0)), 4.0 * pi, 1e-12);
    // radius 2 two-sphere: K = 1/4
    EXPECT_NEAR(volume(make_constant_curvature(2, 0.25)), 16.0 * pi, 1e-11);
    // sigma scales volume by sigma^{n/2}
    EXPECT_NEAR(volume(make_constant_curvature(3, 1.0, 4.0)), 8.0 * 2.0 * pi * pi, 1e-11);
}

TEST(Geometry, HomogeneousFrameVolume) {
    // SU(2) with lambda = (2,2,2), a = 1 is the unit round sphere
    EXPECT_NEAR(volume(make_homogeneous3({2, 2, 2}, {1, 1, 1})), 2.0 * pi * pi, 1e-12);
    EXPECT_NEAR(volume(make_homogeneous3({2, 2, 2}, {1, 4, 9})), 6.0 * 2.0 * pi * pi, 1e-11);
}

TEST(Geometry, FlatTorusQuadrature) {
    const auto g = make_warped_torus(2.0 * pi, 32, [](double) { return 1.0; }, [](double) { return 1.0; });
    EXPECT_NEAR(volume(g), 4.0 * pi * pi, 1e-12);
    const auto q = quadrature(g);
    double s = 0.0, sh = 0.0;
    for (std::size_t i = 0; i < q.node.size(); ++i) {
        s += q.node[i];
        sh += q.half[i];
    }
    EXPECT_NEAR(s, 4.0 * pi * pi, 1e-12);
    EXPECT_NEAR(sh, 4.0 * pi * pi, 1e-12);
}

TEST(Geometry, WarpedTorusVolumeConverges) {
    // int_0^{2pi} (1 + 0.3 sin r) * 2pi dr = 4 pi^2, trapezoid is spectral here
    const auto g = make_warped_torus(
        2.0 * pi, 16, [](double) { return 1.0; }, [](double r) { return 1.0 + 0.3 * std::sin(r); });
    EXPECT_NEAR(volume(g), 4.0 * pi * pi, 1e-12);
}

TEST(Geometry, RejectsBadInput) {
    EXPECT_THROW(make_constant_curvature(1, 1.0), InvalidGeometry);
    EXPECT_THROW(make_constant_curvature(3, -1.0), InvalidGeometry); // needs a reference volume
    EXPECT_NO_THROW(make_constant_curvature(3, -1.0, 1.0, 5.0));
    EXPECT_THROW(make_constant_curvature(3, 1.0, 0.0), InvalidGeometry);
    EXPECT_THROW(make_homogeneous3({2, 2, 2}, {1, -1, 1}), InvalidGeometry);
    EXPECT_THROW(make_homogeneous3({1, 1, 0}, {1, 1, 1}), InvalidGeometry);
    EXPECT_THROW(make_warped_torus(2.0 * pi, 8, [](double) { return 1.0; }, [](double) { return 1.0; }),
                 ResolutionError);
    EXPECT_THROW(make_warped_torus(2.0 * pi, 32, [](double r) { return std::cos(r); }, [](double) { return 1.0; }),
                 InvalidGeometry);
    EXPECT_THROW(make_warped_torus(2.0 * pi, 32, [](double) { return NAN; }, [](double) { return 1.0; }),
                 SamplingError);
}

TEST(Geometry, WrongClassAccessorThrows) {
    const auto g = make_constant_curvature(3, 1.0);
    EXPECT_THROW((void)g.wt(), RepresentationError);
    EXPECT_THROW((void)g.h3(), RepresentationError);
}

TEST(Geometry, RescaleMultipliesCoefficients) {
    const std::vector<Geometry> gs{
        make_constant_curvature(4, 1.0, 1.5), make_homogeneous3({1, 2, 3}, {1, 1.5, 2}),
        make_warped_torus(3.0, 20, [](double r) { return 1.0 + 0.1 * std::cos(r); }, [](double) { return 2.0; })};
    for (const auto& g : gs)
        for (double lam : {0.25, 3.0}) {
            const auto a = metric_coefficients(g), b = metric_coefficients(rescale_metric(g, lam));
            ASSERT_EQ(a.size(), b.size());
            for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(b[i], lam * a[i], 1e-14 * lam * a[i]);
            EXPECT_NEAR(volume(rescale_metric(g, lam)), std::pow(lam, 0.5 * g.dim()) * volume(g), 1e-12 * volume(g) * lam * lam);
        }
    EXPECT_THROW(rescale_metric(gs[0], 0.0), InvalidScale);
    EXPECT_THROW(rescale_metric(gs[0], -1.0), InvalidScale);
}

TEST(Geometry, CoefficientRoundTrip) {
    const auto g = make_warped_torus(
        2.0 * pi, 24, [](double r) { return 1.0 + 0.2 * std::sin(r); }, [](double r) { return 2.0 + std::cos(r); });
    const auto c = metric_coefficients(g);
    EXPECT_EQ(c.size(), 48u);
    EXPECT_EQ(metric_coefficient_names(g).size(), 48u);
    EXPECT_EQ(metric_coefficients(with_metric_coefficients(g, c)), c);
    auto bad = c;
    bad[3] = -1.0;
    EXPECT_THROW(with_metric_coefficients(g, bad), InvalidGeometry);
    EXPECT_EQ(metric_coefficient_names(make_homogeneous3({2, 2, 2}, {1, 1, 1})),
              (std::vector<std::string>{"a", "b", "c"}));
}
