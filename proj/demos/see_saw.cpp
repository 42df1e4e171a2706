// See-saw on a warped torus: integrate the metric forward, then carry the
// terminal measure and a drift field backwards (forward in eta = T0 - t).
#include <cmath>
#include <cstdio>

#include <rg2/rg2.hpp>

int main() {
    using namespace rg2;
    const std::size_t n = 128;
    const auto g = make_warped_torus(
        2.0 * pi, n, [](double) { return 1.0; }, [](double r) { return 1.0 + 0.3 * std::sin(r); });
    ScalarField f(n);
    for (std::size_t i = 0; i < n; ++i) f[i] = std::log(volume(g)) + 0.2 * std::cos(g.wt().node(i));
    VectorField xi{std::vector<double>(n, 1.0), std::vector<double>(n, 0.0)};
    FlowState s{g, DensityData{f, false}, helmholtz_otto(g, f, xi), 0.0, 1.0};

    const auto tr = seesaw_solve(s, 0.1, 2e-4, {FlowMode::scale_invariant, DriftPolicy::evolve});
    std::printf("%zu snapshots, alpha_g = %.15f\n", tr.states.size(), tr.states.front().alpha);
    for (std::size_t k = 0; k < tr.states.size(); k += 100) {
        const auto& st = tr.states[k];
        std::printf("t %.4f  alpha_g %.15f  max|xi|^2 %.6f  F_ext %.6f\n", st.t, alpha_g(st.g, st.density),
                    max_norm2(st.g, assemble(st.g, st.drift)), extended_F(st.g, st.density.f, st.drift));
    }
}
