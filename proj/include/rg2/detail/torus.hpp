#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "../geometry.hpp"

namespace rg2::detail {

// Second-order periodic stencils on the staggered warped-torus grid.
// Scalars live at nodes r_i; radial vector components and dual-cell
// quantities live at half nodes r_{i+1/2} (index i). Half-node profile
// values are arithmetic means of the neighbouring nodes.
struct Torus {
    std::size_t n;
    double h;
    std::vector<double> rho, phi; // nodes
    std::vector<double> rh, ph;   // half nodes

    explicit Torus(const WarpedTorus& w)
        : n(w.size()), h(w.spacing()), rho(w.rho), phi(w.phi), rh(n), ph(n) {
        for (std::size_t i = 0; i < n; ++i) {
            rh[i] = 0.5 * (rho[i] + rho[up(i)]);
            ph[i] = 0.5 * (phi[i] + phi[up(i)]);
        }
    }

    std::size_t up(std::size_t i) const { return i + 1 == n ? 0 : i + 1; }
    std::size_t dn(std::size_t i) const { return i == 0 ? n - 1 : i - 1; }

    using Vec = std::vector<double>;

    // K = -(1/(rho phi)) (phi'/rho)'
    Vec gauss() const {
        Vec k(n);
        for (std::size_t i = 0; i < n; ++i) {
            const double qp = (phi[up(i)] - phi[i]) / (h * rh[i]);
            const double qm = (phi[i] - phi[dn(i)]) / (h * rh[dn(i)]);
            k[i] = -(qp - qm) / (h * rho[i] * phi[i]);
        }
        return k;
    }

    // geodesic curvature of the r-circles, k = phi'/(rho phi)
    Vec k_node() const {
        Vec k(n);
        for (std::size_t i = 0; i < n; ++i) k[i] = (phi[up(i)] - phi[dn(i)]) / (2.0 * h * rho[i] * phi[i]);
        return k;
    }
    Vec k_half() const {
        Vec k(n);
        for (std::size_t i = 0; i < n; ++i) k[i] = (phi[up(i)] - phi[i]) / (h * rh[i] * ph[i]);
        return k;
    }

    // arclength derivatives at nodes
    Vec d_s(const Vec& u) const {
        Vec d(n);
        for (std::size_t i = 0; i < n; ++i) d[i] = (u[up(i)] - u[dn(i)]) / (2.0 * h * rho[i]);
        return d;
    }
    Vec d_ss(const Vec& u) const {
        Vec d(n);
        for (std::size_t i = 0; i < n; ++i) {
            const double gp = (u[up(i)] - u[i]) / (h * rh[i]);
            const double gm = (u[i] - u[dn(i)]) / (h * rh[dn(i)]);
            d[i] = (gp - gm) / (h * rho[i]);
        }
        return d;
    }

    // radial coordinate component of grad u at half nodes
    Vec grad_half(const Vec& u) const {
        Vec g(n);
        for (std::size_t i = 0; i < n; ++i) g[i] = (u[up(i)] - u[i]) / (h * rh[i] * rh[i]);
        return g;
    }

    // e^{-f} at nodes and its half-node mean
    Vec density(const Vec& f) const {
        Vec p(n);
        for (std::size_t i = 0; i < n; ++i) p[i] = std::exp(-f[i]);
        return p;
    }
    Vec half_mean(const Vec& v) const {
        Vec m(n);
        for (std::size_t i = 0; i < n; ++i) m[i] = 0.5 * (v[i] + v[up(i)]);
        return m;
    }
    Vec node_mean(const Vec& half) const {
        Vec m(n);
        for (std::size_t i = 0; i < n; ++i) m[i] = 0.5 * (half[dn(i)] + half[i]);
        return m;
    }

    // weighted divergence of a radial half-node field, p = e^{-f}
    Vec div_w(const Vec& p, const Vec& xr) const {
        Vec d(n);
        for (std::size_t i = 0; i < n; ++i) {
            const double fp = 0.5 * (p[i] + p[up(i)]) * rh[i] * ph[i] * xr[i];
            const std::size_t m = dn(i);
            const double fm = 0.5 * (p[m] + p[i]) * rh[m] * ph[m] * xr[m];
            d[i] = (fp - fm) / (h * p[i] * rho[i] * phi[i]);
        }
        return d;
    }

    Vec lap_w(const Vec& p, const Vec& u) const { return div_w(p, grad_half(u)); }

    // weighted Laplacian of a half-node scalar (faces of the dual cells are nodes)
    Vec lap_w_half(const Vec& p, const Vec& u) const {
        Vec d(n);
        for (std::size_t j = 0; j < n; ++j) {
            const std::size_t a = j, b = up(j);
            const double ca = p[a] * phi[a] / rho[a];
            const double cb = p[b] * phi[b] / rho[b];
            const double cell = 0.5 * (p[a] + p[b]) * rh[j] * ph[j];
            d[j] = (cb * (u[up(j)] - u[j]) - ca * (u[j] - u[dn(j)])) / (h * h * cell);
        }
        return d;
    }

    // Dirichlet-form face conductances 2 pi (rho phi)/(rho^2 h) at half nodes
    Vec conductance() const {
        Vec c(n);
        for (std::size_t i = 0; i < n; ++i) c[i] = 2.0 * pi * ph[i] / (rh[i] * h);
        return c;
    }
    Vec node_volume() const {
        Vec m(n);
        for (std::size_t i = 0; i < n; ++i) m[i] = 2.0 * pi * h * rho[i] * phi[i];
        return m;
    }

    // |grad f|^2 at nodes in the dissipation-consistent form
    Vec grad_sq(const Vec& f) const {
        const Vec p = density(f);
        const Vec c = conductance();
        const Vec mu = node_volume();
        Vec d(n), out(n);
        for (std::size_t i = 0; i < n; ++i) {
            d[i] = c[i] * (f[up(i)] - f[i]) * (p[i] - p[up(i)]);
        }
        for (std::size_t i = 0; i < n; ++i) out[i] = 0.5 * (d[dn(i)] + d[i]) / (p[i] * mu[i]);
        return out;
    }
};

} // namespace rg2::detail
