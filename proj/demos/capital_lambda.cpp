// Lambda on the round 3-sphere, its split into lambda1 + lambda2, and the
// Futaki-type lower bound.
#include <cstdio>

#include <rg2/rg2.hpp>

int main() {
    using namespace rg2;
    const auto g = make_constant_curvature(3, 1.0);
    const double alpha = alpha_g(g, uniform_density(g));
    const auto e = capital_lambda(g, alpha);
    std::printf("Lambda %.12f = A (lambda1 %.9f + lambda2 %.9f), %d sweeps\n", e.Lambda, e.lambda1, e.lambda2, e.sweeps);
    std::printf("perelman lambda %.12f\n", perelman_lambda(g, alpha).lambda);
    const auto f = futaki_check(g, alpha, e);
    std::printf("diam %.6f  C0 %.6f (certified %.6f)  bound %.6f\n", f.diam, f.C0_constant, f.C0_certified, f.bound);
    std::printf("%.6f >= %.6f : %s\n", f.lhs, f.rhs, f.pass ? "holds" : "violated");
}
