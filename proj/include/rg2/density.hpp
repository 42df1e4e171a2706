#pragma once

#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "curvature.hpp"
#include "rk4.hpp"

namespace rg2 {

// d omega = e^{-f} d mu. `normalized` selects the unit-mass measure
// alpha^{-n/2} d omega when weights are requested.
struct DensityData {
    ScalarField f;
    bool normalized = false;
};

inline DensityData uniform_density(const Geometry& g, double f0 = 0.0) {
    return {ScalarField(g.nodes(), f0), false};
}

// e^{-f_i} times the volume weight of node i
inline std::vector<double> measure_weights(const Geometry& g, const ScalarField& f) {
    require_scalar(g, f, "density exponent");
    const auto q = quadrature(g);
    std::vector<double> w(q.node.size());
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = std::exp(-f[i]) * q.node[i];
    return w;
}

inline double total_mass(const Geometry& g, const ScalarField& f) {
    double s = 0.0;
    for (double w : measure_weights(g, f)) s += w;
    return s;
}

inline double alpha_g(const Geometry& g, const ScalarField& f) {
    const double m = total_mass(g, f);
    if (!std::isfinite(m) || m <= 0.0) throw PositivityError("measure has non-positive or non-finite mass");
    return std::pow(m, 2.0 / g.dim());
}

inline double alpha_g(const Geometry& g, const DensityData& d) { return alpha_g(g, d.f); }

inline std::vector<double> normalized_weights(const Geometry& g, const DensityData& d) {
    auto w = measure_weights(g, d.f);
    if (d.normalized) {
        const double m = total_mass(g, d.f);
        for (double& x : w) x /= m;
    }
    return w;
}

inline double integrate(const Geometry& g, const ScalarField& f, const ScalarField& u) {
    require_scalar(g, u, "integrand");
    const auto w = measure_weights(g, f);
    double s = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) s += u[i] * w[i];
    return s;
}

// f from node masses M_i of d omega: f_i = log mu_i - log M_i
inline ScalarField density_from_masses(const Geometry& g, const std::vector<double>& log_mass) {
    const auto q = quadrature(g);
    ScalarField f(q.node.size());
    for (std::size_t i = 0; i < f.size(); ++i) {
        f[i] = std::log(q.node[i]) - log_mass[i];
        if (!std::isfinite(f[i])) throw PositivityError("density lost positivity");
    }
    return f;
}

inline std::vector<double> log_masses(const Geometry& g, const ScalarField& f) {
    const auto q = quadrature(g);
    std::vector<double> l(q.node.size());
    for (std::size_t i = 0; i < l.size(); ++i) l[i] = std::log(q.node[i]) - f[i];
    return l;
}

// integral of |xi|^2 d omega: radial part on the dual cells, angular part on nodes
inline double integrate_norm2(const Geometry& g, const ScalarField& f, const VectorField& x) {
    const VectorField o = vector_orthonormal(g, x);
    if (g.is_frame()) {
        double s = 0.0;
        for (double v : o.v) s += v * v;
        return s * total_mass(g, f);
    }
    const detail::Torus t(g.wt());
    const auto p = t.density(f);
    const auto q = quadrature(g);
    double s = 0.0;
    for (std::size_t i = 0; i < t.n; ++i) {
        s += 0.5 * (p[i] + p[t.up(i)]) * q.half[i] * o.v[i] * o.v[i];
        s += p[i] * q.node[i] * o.theta[i] * o.theta[i];
    }
    return s;
}

// pointwise max of |xi|^2 over the representation's sample locations
inline double max_norm2(const Geometry& g, const VectorField& x) {
    const VectorField o = vector_orthonormal(g, x);
    if (g.is_frame()) {
        double s = 0.0;
        for (double v : o.v) s += v * v;
        return s;
    }
    double m = 0.0;
    const std::size_t n = o.v.size();
    for (std::size_t i = 0; i < n; ++i) {
        const double th = 0.5 * (o.theta[i] * o.theta[i] + o.theta[(i + 1) % n] * o.theta[(i + 1) % n]);
        m = std::max(m, o.v[i] * o.v[i] + th);
    }
    return m;
}

// ------------------------------------------------------ Helmholtz-Otto split
//
// Solve Delta_w psi = div_w xi with zero d omega-mean; xi_perp = xi - grad psi.

inline DriftField helmholtz_otto(const Geometry& g, const ScalarField& f, const VectorField& x) {
    require_scalar(g, f, "density exponent");
    require_vector(g, x);
    if (g.is_frame()) {
        const double d = weighted_divergence(g, f, x)[0];
        if (std::abs(d) > 1e-10) throw GaugeError("left-invariant field with non-zero divergence");
        return {ScalarField{0.0}, x};
    }
    const detail::Torus t(g.wt());
    const std::size_t n = t.n;
    const auto p = t.density(f);
    const auto b = t.div_w(p, x.v);

    // (h w_i) (Delta_w psi)_i = a_i (psi_{i+1} - psi_i) - a_{i-1} (psi_i - psi_{i-1})
    std::vector<double> a(n), w(n);
    for (std::size_t i = 0; i < n; ++i) {
        a[i] = 0.5 * (p[i] + p[t.up(i)]) * t.ph[i] / (t.rh[i] * t.h);
        w[i] = p[i] * t.rho[i] * t.phi[i];
    }
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(5 * n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto ii = static_cast<int>(i);
        trip.emplace_back(ii, ii, -(a[i] + a[t.dn(i)]));
        trip.emplace_back(ii, static_cast<int>(t.up(i)), a[i]);
        trip.emplace_back(ii, static_cast<int>(t.dn(i)), a[t.dn(i)]);
        trip.emplace_back(ii, static_cast<int>(n), w[i]);
        trip.emplace_back(static_cast<int>(n), ii, w[i]);
    }
    Eigen::SparseMatrix<double> m(static_cast<int>(n + 1), static_cast<int>(n + 1));
    m.setFromTriplets(trip.begin(), trip.end());
    Eigen::VectorXd rhs(static_cast<int>(n + 1));
    for (std::size_t i = 0; i < n; ++i) rhs[static_cast<int>(i)] = t.h * w[i] * b[i];
    rhs[static_cast<int>(n)] = 0.0;
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.compute(m);
    if (lu.info() != Eigen::Success) throw SolverError("weighted Poisson factorisation failed");
    const Eigen::VectorXd sol = lu.solve(rhs);
    if (lu.info() != Eigen::Success || !sol.allFinite()) throw GaugeError("weighted Poisson solve failed");

    DriftField out;
    out.psi.resize(n);
    for (std::size_t i = 0; i < n; ++i) out.psi[i] = sol[static_cast<int>(i)];
    const auto gp = t.grad_half(out.psi);
    out.perp = x;
    for (std::size_t i = 0; i < n; ++i) out.perp.v[i] -= gp[i];
    return out;
}

// --------------------------------------------------------- Fokker-Planck
//
// d/deta (d omega) = Delta d omega + div_w(xi) d omega, written for the log node
// masses of d omega in conservative flux form. Mass is conserved exactly.

namespace detail {

inline std::vector<double> fp_rhs(const Geometry& g, const std::vector<double>& lm, const VectorField& xi) {
    if (g.is_frame()) return std::vector<double>(lm.size(), 0.0);
    const Torus t(g.wt());
    const auto mu = t.node_volume();
    std::vector<double> p(t.n), flux(t.n), out(t.n);
    for (std::size_t i = 0; i < t.n; ++i) p[i] = std::exp(lm[i]) / mu[i];
    for (std::size_t j = 0; j < t.n; ++j) {
        const std::size_t k = t.up(j);
        flux[j] = 2.0 * pi *
                  (t.ph[j] / t.rh[j] * (p[k] - p[j]) / t.h + t.rh[j] * t.ph[j] * 0.5 * (p[j] + p[k]) * xi.v[j]);
    }
    for (std::size_t i = 0; i < t.n; ++i) out[i] = (flux[i] - flux[t.dn(i)]) / std::exp(lm[i]);
    return out;
}

inline double fp_step_bound(const Geometry& g, const ScalarField& f, const VectorField& xi) {
    if (g.is_frame()) return std::numeric_limits<double>::infinity();
    const Torus t(g.wt());
    const double rmin = *std::min_element(t.rho.begin(), t.rho.end());
    double drift = 1.0;
    const auto fs = t.d_s(f);
    for (double v : fs) drift = std::max(drift, std::abs(v));
    for (std::size_t i = 0; i < t.n; ++i) drift = std::max(drift, std::abs(t.rh[i] * xi.v[i]));
    return 0.25 * (t.h * rmin) * (t.h * rmin) / drift;
}

} // namespace detail

// One RK4 step with the metric frozen at g.
inline DensityData fokker_planck_step(const Geometry& g, const DensityData& d, const DriftField& drift,
                                      double deta) {
    require_scalar(g, d.f, "density exponent");
    const VectorField xi = assemble(g, drift);
    if (!(deta > 0.0) || deta > detail::fp_step_bound(g, d.f, xi))
        throw StepSizeError("Fokker-Planck step exceeds the explicit stability bound");
    const auto lm = log_masses(g, d.f);
    const auto next = rk4_step(lm, deta, [&](double, const std::vector<double>& y) { return detail::fp_rhs(g, y, xi); });
    return {density_from_masses(g, next), d.normalized};
}

} // namespace rg2
