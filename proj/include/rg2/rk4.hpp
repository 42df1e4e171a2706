#pragma once

#include <cstddef>
#include <vector>

namespace rg2 {

// Classical RK4 on a flat state vector. The right-hand side receives the
// stage position as a fraction of the step (0, 1/2 or 1) so that callers can
// interpolate time-dependent coefficients.
template <class Rhs>
std::vector<double> rk4_step(const std::vector<double>& y, double dt, Rhs&& rhs) {
    const std::size_t n = y.size();
    auto axpy = [n](const std::vector<double>& a, double s, const std::vector<double>& b) {
        std::vector<double> r(n);
        for (std::size_t i = 0; i < n; ++i) r[i] = a[i] + s * b[i];
        return r;
    };
    const auto k1 = rhs(0.0, y);
    const auto k2 = rhs(0.5, axpy(y, 0.5 * dt, k1));
    const auto k3 = rhs(0.5, axpy(y, 0.5 * dt, k2));
    const auto k4 = rhs(1.0, axpy(y, dt, k3));
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = y[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    return out;
}

} // namespace rg2
