#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <queue>
#include <string>
#include <utility>
#include <vector>

#include "curvature.hpp"
#include "density.hpp"
#include "flow.hpp"

namespace rg2 {

// ------------------------------------------------------------ pointwise terms

// R^Per = R + 2 Lap f - |grad f|^2 = R + 2 Lap_w f + |grad f|^2
inline ScalarField perelman_scalar(const Geometry& g, const ScalarField& f) {
    require_scalar(g, f, "density exponent");
    const auto p = curvature_package(g);
    if (g.is_frame()) return p.scalar;
    const detail::Torus t(g.wt());
    const auto lf = t.lap_w(t.density(f), f);
    const auto g2 = t.grad_sq(f);
    ScalarField out(t.n);
    for (std::size_t i = 0; i < t.n; ++i) out[i] = p.scalar[i] + 2.0 * lf[i] + g2[i];
    return out;
}

inline ScalarField grad_norm2(const Geometry& g, const ScalarField& f) {
    require_scalar(g, f, "density exponent");
    if (g.is_frame()) return {0.0};
    return detail::Torus(g.wt()).grad_sq(f);
}

// Unweighted divergence of a vector field (zero for left-invariant fields on
// unimodular groups and for Killing fields).
inline ScalarField divergence(const Geometry& g, const VectorField& x) {
    require_vector(g, x);
    if (g.is_frame()) return {0.0};
    const detail::Torus t(g.wt());
    return t.div_w(std::vector<double>(t.n, 1.0), x.v);
}

// ------------------------------------------------------------------ energies

// F = int (R + |grad f|^2) d omega
inline double perelman_F(const Geometry& g, const ScalarField& f) {
    const auto r = curvature_package(g).scalar;
    const auto g2 = grad_norm2(g, f);
    ScalarField u(r.size());
    for (std::size_t i = 0; i < u.size(); ++i) u[i] = r[i] + g2[i];
    return integrate(g, f, u);
}

// int |grad psi|^2 d omega, edge-based on the torus (the quadratic form of Lap_w)
inline double dirichlet_energy(const Geometry& g, const ScalarField& f, const ScalarField& psi) {
    require_scalar(g, f, "density exponent");
    require_scalar(g, psi, "potential");
    if (g.is_frame()) return 0.0;
    const detail::Torus t(g.wt());
    const auto p = t.density(f);
    const auto c = t.conductance();
    double s = 0.0;
    for (std::size_t j = 0; j < t.n; ++j) {
        const double d = psi[t.up(j)] - psi[j];
        s += c[j] * 0.5 * (p[j] + p[t.up(j)]) * d * d;
    }
    return s;
}

inline double extended_F(const Geometry& g, const ScalarField& f, const ScalarField& psi) {
    return perelman_F(g, f) + dirichlet_energy(g, f, psi);
}

// int (R^Per + |xi|^2) d omega; agrees with the potential form for gradient fields
inline double extended_F(const Geometry& g, const ScalarField& f, const DriftField& d) {
    return perelman_F(g, f) + integrate_norm2(g, f, assemble(g, d));
}

// F2 = int (R^Per + (alpha/8)|Rm|^2 - div xi) d omega. `weighted` swaps in div_w.
inline double f2_energy(const Geometry& g, const ScalarField& f, const DriftField& d, double alpha,
                        bool weighted = false) {
    require_coupling(alpha);
    const auto xi = assemble(g, d);
    const auto rp = perelman_scalar(g, f);
    const auto rm = curvature_package(g).rm_norm2;
    const auto dv = weighted ? weighted_divergence(g, f, xi) : divergence(g, xi);
    ScalarField u(rp.size());
    for (std::size_t i = 0; i < u.size(); ++i) u[i] = rp[i] + alpha / 8.0 * rm[i] - dv[i];
    return integrate(g, f, u);
}

// ------------------------------------------------------------- Nash entropy

struct NashEntropy {
    double N = 0.0;
    double production = 0.0;
};

namespace detail {

// alpha is the coupling of the flow, alpha_g the one of the measure
inline NashEntropy nash_terms(const Geometry& g, const ScalarField& f, double t, double alpha) {
    const double n = g.dim();
    const double m = total_mass(g, f);
    const double ag = alpha_g(g, f);
    NashEntropy e;
    e.N = -integrate(g, f, f) + n * (n - 1.0) * (m / ag) * t;
    const auto rp = perelman_scalar(g, f);
    const auto rm = curvature_package(g).rm_norm2;
    ScalarField u(rp.size());
    for (std::size_t i = 0; i < u.size(); ++i) u[i] = rp[i] + alpha / 4.0 * rm[i];
    e.production = integrate(g, f, u) + n * (n - 1.0) * m / ag;
    return e;
}

inline bool drift_vanishes(const Geometry& g, const DriftField& d) {
    const auto x = assemble(g, d);
    for (double v : x.v)
        if (v != 0.0) return false;
    for (double v : x.theta)
        if (v != 0.0) return false;
    return true;
}

} // namespace detail

// N = -int f d omega + n(n-1) alpha_g^{n/2-1} t and its production
// int [R^Per + (alpha/4)|Rm|^2 + n(n-1)/alpha_g] d omega. Needs xi = 0.
inline NashEntropy nash_entropy(const FlowState& s) {
    if (!detail::drift_vanishes(s.g, s.drift)) throw GaugeError("Nash entropy is defined in the gauge xi = 0");
    require_coupling(s.alpha);
    return detail::nash_terms(s.g, s.density.f, s.t, s.alpha);
}

// ----------------------------------------------------- reduced 1-D spectra
//
// Eigenproblems are posed on functions of one variable: r on the warped torus,
// the polar angle on round spheres (zonal functions). Both are graphs with node
// weights mu_i, edge conductances c_e and the scalar curvature at the nodes.

namespace detail {

struct Reduced {
    std::vector<double> mu, R, coord;
    std::vector<std::pair<std::size_t, std::size_t>> edges;
    std::vector<double> c;
    int dim = 2;
    double radius = 0.0; // zonal sphere radius, 0 on the torus
    std::size_t size() const { return mu.size(); }
};

// int_0^x sin^m
inline double sin_power_integral(int m, double x) {
    if (m == 0) return x;
    if (m == 1) return 1.0 - std::cos(x);
    return -std::pow(std::sin(x), m - 1) * std::cos(x) / m + (m - 1.0) / m * sin_power_integral(m - 2, x);
}

inline Reduced zonal_sphere(int n, double Kg, std::size_t cells) {
    if (cells < 16) throw ResolutionError("zonal grid needs at least 16 cells");
    Reduced r;
    r.dim = n;
    r.radius = 1.0 / std::sqrt(Kg);
    const double a = r.radius;
    const double d = pi / static_cast<double>(cells);
    const double area = unit_sphere_volume(n - 1);
    r.mu.resize(cells);
    r.R.assign(cells, n * (n - 1.0) * Kg);
    r.coord.resize(cells);
    for (std::size_t i = 0; i < cells; ++i) {
        const double lo = d * static_cast<double>(i), hi = lo + d;
        r.coord[i] = lo + 0.5 * d;
        r.mu[i] = area * std::pow(a, n) * (sin_power_integral(n - 1, hi) - sin_power_integral(n - 1, lo));
    }
    for (std::size_t i = 0; i + 1 < cells; ++i) {
        r.edges.emplace_back(i, i + 1);
        const double face = d * static_cast<double>(i + 1);
        r.c.push_back(area * std::pow(a, n - 2) * std::pow(std::sin(face), n - 1) / d);
    }
    return r;
}

inline Reduced reduce(const Geometry& g, std::size_t zonal_cells) {
    switch (g.kind()) {
    case GeometryClass::warped_torus: {
        const Torus t(g.wt());
        Reduced r;
        r.mu = t.node_volume();
        r.c = t.conductance();
        r.R = curvature_package(g).scalar;
        r.coord.resize(t.n);
        for (std::size_t i = 0; i < t.n; ++i) {
            r.coord[i] = g.wt().node(i);
            r.edges.emplace_back(i, t.up(i));
        }
        return r;
    }
    case GeometryClass::constant_curvature: {
        const auto& c = g.cc();
        if (c.K <= 0.0) throw UnsupportedCase("eigenproblems need a round sphere (K > 0)");
        const double sphere = unit_sphere_volume(c.n) * std::pow(c.K, -0.5 * c.n);
        if (std::abs(c.base_volume - sphere) > 1e-12 * sphere)
            throw UnsupportedCase("eigenproblems are implemented on the sphere, not on its quotients");
        return zonal_sphere(c.n, c.K / c.sigma, zonal_cells);
    }
    case GeometryClass::homogeneous3: {
        const auto& h = g.h3();
        const auto p = curvature_package(g);
        const double kg = p.sectional_min;
        const bool round = kg > 0.0 && p.sectional_max - kg <= 1e-12 * kg;
        const double sphere = 2.0 * pi * pi * std::pow(kg, -1.5);
        if (!round || std::abs(volume(g) - sphere) > 1e-10 * sphere)
            throw UnsupportedCase("eigenproblems on homogeneous 3-manifolds are limited to the round sphere");
        (void)h;
        return zonal_sphere(3, kg, zonal_cells);
    }
    }
    throw UnsupportedCase("unknown geometry class");
}

// sum_e w_e c_e (u_a - u_b)^2 as a dense matrix
inline Eigen::MatrixXd stiffness(const Reduced& r, const std::vector<double>& w) {
    const auto n = static_cast<Eigen::Index>(r.size());
    Eigen::MatrixXd s = Eigen::MatrixXd::Zero(n, n);
    for (std::size_t e = 0; e < r.edges.size(); ++e) {
        const auto a = static_cast<Eigen::Index>(r.edges[e].first);
        const auto b = static_cast<Eigen::Index>(r.edges[e].second);
        const double k = r.c[e] * (w.empty() ? 1.0 : w[e]);
        s(a, a) += k;
        s(b, b) += k;
        s(a, b) -= k;
        s(b, a) -= k;
    }
    return s;
}

struct Eigenpairs {
    Eigen::VectorXd values;
    Eigen::MatrixXd vectors; // D-orthonormal columns
};

// K x = lambda D x with diagonal D > 0. Chain graphs (zonal grids) are
// tridiagonal after the diagonal scaling and skip the Householder reduction.
inline Eigenpairs generalized(const Eigen::MatrixXd& K, const std::vector<double>& d) {
    const auto n = K.rows();
    Eigen::VectorXd s(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        if (!(d[static_cast<std::size_t>(i)] > 0.0)) throw ConvergenceError("mass matrix lost positivity");
        s[i] = 1.0 / std::sqrt(d[static_cast<std::size_t>(i)]);
    }
    const Eigen::MatrixXd B = s.asDiagonal() * K * s.asDiagonal();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
    if (n > 2 && B(0, n - 1) == 0.0) {
        Eigen::VectorXd diag = B.diagonal();
        Eigen::VectorXd sub(n - 1);
        for (Eigen::Index i = 0; i + 1 < n; ++i) sub[i] = B(i + 1, i);
        es.computeFromTridiagonal(diag, sub);
    } else {
        es.compute(B);
    }
    if (es.info() != Eigen::Success) throw ConvergenceError("symmetric eigensolver failed");
    return {es.eigenvalues(), s.asDiagonal() * es.eigenvectors()};
}

// positive at the first node where |v| is maximal
inline void fix_sign(std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    for (double x : v)
        if (std::abs(x) >= m * (1.0 - 1e-12)) {
            if (x < 0.0)
                for (double& y : v) y = -y;
            return;
        }
}

inline std::vector<double> column(const Eigen::MatrixXd& m, Eigen::Index k) {
    std::vector<double> v(static_cast<std::size_t>(m.rows()));
    for (Eigen::Index i = 0; i < m.rows(); ++i) v[static_cast<std::size_t>(i)] = m(i, k);
    return v;
}

inline void normalize(std::vector<double>& v, const std::vector<double>& w, double target) {
    double s = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) s += w[i] * v[i] * v[i];
    const double k = std::sqrt(target / s);
    for (double& x : v) x *= k;
}

} // namespace detail

struct SpectralResult {
    double lambda = 0.0;
    std::vector<double> u;     // eigenfunction on the reduced grid
    std::vector<double> coord; // r on the torus, polar angle on spheres
};

// Ground state of -4 Lap h + R h, int h^2 dmu = alpha^{n/2}.
inline SpectralResult perelman_lambda(const Geometry& g, double alpha, std::size_t zonal_cells = 256) {
    require_coupling(alpha);
    const double A = std::pow(alpha, 0.5 * g.dim());
    if (g.is_frame()) {
        const double r = curvature_package(g).scalar[0];
        return {r, {std::sqrt(A / volume(g))}, {0.0}};
    }
    const auto red = detail::reduce(g, zonal_cells);
    Eigen::MatrixXd K = 4.0 * detail::stiffness(red, {});
    for (std::size_t i = 0; i < red.size(); ++i) K(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) += red.mu[i] * red.R[i];
    const auto ep = detail::generalized(K, red.mu);
    SpectralResult out{ep.values[0], detail::column(ep.vectors, 0), red.coord};
    detail::fix_sign(out.u);
    for (double x : out.u)
        if (x <= 0.0) throw ConvergenceError("ground state is not positive");
    detail::normalize(out.u, red.mu, A);
    return out;
}

// First non-zero eigenvalue of -Lap_w on zero-mean functions. `azimuthal` adds
// the cos(theta) sector on the torus (potential 1/phi^2).
inline SpectralResult weighted_lambda2(const Geometry& g, const ScalarField& f, bool azimuthal = false,
                                       std::size_t zonal_cells = 256) {
    require_scalar(g, f, "density exponent");
    const auto red = detail::reduce(g, zonal_cells);
    const std::size_t n = red.size();
    std::vector<double> p(n, 1.0), pe(red.edges.size(), 1.0);
    if (!g.is_frame()) {
        for (std::size_t i = 0; i < n; ++i) p[i] = std::exp(-f[i]);
        for (std::size_t e = 0; e < red.edges.size(); ++e)
            pe[e] = 0.5 * (p[red.edges[e].first] + p[red.edges[e].second]);
    }
    std::vector<double> d(n);
    for (std::size_t i = 0; i < n; ++i) d[i] = red.mu[i] * p[i];
    const Eigen::MatrixXd S = detail::stiffness(red, pe);
    const auto ep = detail::generalized(S, d);
    SpectralResult out{ep.values[1], detail::column(ep.vectors, 1), red.coord};
    if (azimuthal) {
        if (g.is_frame()) throw UnsupportedCase("azimuthal sector exists on the warped torus only");
        Eigen::MatrixXd Sa = S;
        for (std::size_t i = 0; i < n; ++i) {
            const double ph = g.wt().phi[i];
            Sa(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) += d[i] / (ph * ph);
        }
        const auto ea = detail::generalized(Sa, d);
        if (ea.values[0] < out.lambda) out = {ea.values[0], detail::column(ea.vectors, 0), red.coord};
    }
    detail::fix_sign(out.u);
    double mass = 0.0;
    for (double x : d) mass += x;
    detail::normalize(out.u, d, mass);
    return out;
}

// ------------------------------------------------------------------ Lambda

// Relative band within which two objective values are indistinguishable
// (eigen-solve round-off); steps inside it count as non-increasing.
inline constexpr double lambda_noise = 1e-12;

struct LambdaOptions {
    double tol = 1e-8;
    int max_sweeps = 20000;
    std::size_t zonal_cells = 256;
};

struct EigenResult {
    double lambda1 = 0.0, lambda2 = 0.0;
    double Lambda = 0.0;    // alpha^{n/2} (lambda1 + lambda2)
    double objective = 0.0; // F(h, psi) at the returned pair
    double A = 0.0;         // alpha^{n/2}
    std::vector<double> h, psi, coord, mu;
    double residual_h = 0.0, residual_psi = 0.0;
    double constraint_mass = 0.0, constraint_mean = 0.0, constraint_norm = 0.0;
    int sweeps = 0;
    std::vector<double> objective_log; // one entry per sweep
};

namespace detail {

struct LambdaState {
    double G = 0.0, lambda2 = 0.0;
    std::vector<double> psi;
};

// psi-step for fixed h: second eigenpair of the h^2-weighted graph Laplacian
inline LambdaState lambda_psi_step(const Reduced& r, const std::vector<double>& h, double A) {
    const std::size_t n = r.size();
    std::vector<double> we(r.edges.size()), d(n);
    for (std::size_t e = 0; e < r.edges.size(); ++e) {
        const double ha = h[r.edges[e].first], hb = h[r.edges[e].second];
        we[e] = 0.5 * (ha * ha + hb * hb);
    }
    for (std::size_t i = 0; i < n; ++i) d[i] = r.mu[i] * h[i] * h[i];
    const auto ep = generalized(stiffness(r, we), d);
    LambdaState s;
    s.psi = column(ep.vectors, 1);
    // exact D-orthogonality to constants, then the Rayleigh quotient, whose
    // error is quadratic in the eigenvector error
    double m0 = 0.0, m1 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        m0 += d[i];
        m1 += d[i] * s.psi[i];
    }
    for (double& x : s.psi) x -= m1 / m0;
    fix_sign(s.psi);
    normalize(s.psi, d, A);
    double q = 0.0;
    for (std::size_t e = 0; e < r.edges.size(); ++e) {
        const double dp = s.psi[r.edges[e].first] - s.psi[r.edges[e].second];
        q += r.c[e] * we[e] * dp * dp;
    }
    s.lambda2 = q / A;
    double q0 = 0.0;
    for (std::size_t i = 0; i < n; ++i) q0 += r.mu[i] * r.R[i] * h[i] * h[i];
    for (std::size_t e = 0; e < r.edges.size(); ++e) {
        const double dh = h[r.edges[e].first] - h[r.edges[e].second];
        q0 += 4.0 * r.c[e] * dh * dh;
    }
    s.G = q0 + A * s.lambda2;
    return s;
}

// the Schroedinger operator of the h-equation for fixed (psi, lambda2)
inline Eigen::MatrixXd lambda_h_operator(const Reduced& r, const std::vector<double>& psi, double lambda2) {
    Eigen::MatrixXd M = 4.0 * stiffness(r, {});
    std::vector<double> P(r.size(), 0.0);
    for (std::size_t e = 0; e < r.edges.size(); ++e) {
        const double dp = psi[r.edges[e].first] - psi[r.edges[e].second];
        P[r.edges[e].first] += 0.5 * r.c[e] * dp * dp;
        P[r.edges[e].second] += 0.5 * r.c[e] * dp * dp;
    }
    for (std::size_t i = 0; i < r.size(); ++i) {
        const auto k = static_cast<Eigen::Index>(i);
        M(k, k) += r.mu[i] * r.R[i] + P[i] - lambda2 * r.mu[i] * psi[i] * psi[i];
    }
    return M;
}

inline Eigen::VectorXd as_vector(const std::vector<double>& v) {
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

} // namespace detail

// Alternating minimisation over Gamma = {int psi h^2 = 0, int psi^2 h^2 = int h^2 = A}.
// The psi-step is exact; the h-step moves towards the ground state of the
// h-equation with a backtracking line search on G(h) = F(h, psi(h)), so the
// objective never increases between sweeps.
inline EigenResult capital_lambda(const Geometry& g, double alpha, const LambdaOptions& opt = {}) {
    require_coupling(alpha);
    const auto red = detail::reduce(g, opt.zonal_cells);
    const std::size_t n = red.size();
    const double A = std::pow(alpha, 0.5 * g.dim());

    Eigen::MatrixXd K0 = 4.0 * detail::stiffness(red, {});
    for (std::size_t i = 0; i < n; ++i) K0(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) += red.mu[i] * red.R[i];
    std::vector<double> h = detail::column(detail::generalized(K0, red.mu).vectors, 0);
    detail::fix_sign(h);
    detail::normalize(h, red.mu, A);

    EigenResult out;
    out.A = A;
    auto st = detail::lambda_psi_step(red, h, A);
    double lambda1 = 0.0, res_h = 1.0;
    auto residual = [&](const std::vector<double>& hh, const detail::LambdaState& s) {
        const Eigen::MatrixXd M = detail::lambda_h_operator(red, s.psi, s.lambda2);
        const Eigen::VectorXd hv = detail::as_vector(hh);
        const Eigen::VectorXd mh = M * hv;
        double num = 0.0, den = 0.0;
        for (std::size_t i = 0; i < n; ++i) den += red.mu[i] * hh[i] * hh[i];
        lambda1 = hv.dot(mh) / den;
        for (std::size_t i = 0; i < n; ++i) {
            const double ri = mh[static_cast<Eigen::Index>(i)] - lambda1 * red.mu[i] * hh[i];
            num += ri * ri / red.mu[i];
        }
        return std::sqrt(num / den) / std::max(1.0, std::abs(lambda1));
    };
    res_h = residual(h, st);

    int sweep = 0;
    for (; sweep < opt.max_sweeps && res_h >= opt.tol; ++sweep) {
        const Eigen::MatrixXd M = detail::lambda_h_operator(red, st.psi, st.lambda2);
        std::vector<double> hs = detail::column(detail::generalized(M, red.mu).vectors, 0);
        detail::fix_sign(hs);
        detail::normalize(hs, red.mu, A);
        double tau = 1.0;
        bool accepted = false;
        std::vector<double> hn(n);
        detail::LambdaState sn;
        while (tau >= 1e-10) {
            for (std::size_t i = 0; i < n; ++i) hn[i] = (1.0 - tau) * h[i] + tau * hs[i];
            detail::normalize(hn, red.mu, A);
            sn = detail::lambda_psi_step(red, hn, A);
            if (sn.G <= st.G + lambda_noise * std::abs(st.G)) {
                accepted = true;
                break;
            }
            tau *= 0.5;
        }
        if (!accepted) break;
        for (double x : hn)
            if (!(x > 0.0)) throw ConvergenceError("h lost positivity during the line search");
        h = hn;
        st = sn;
        out.objective_log.push_back(st.G);
        res_h = residual(h, st);
    }
    out.sweeps = sweep;
    if (res_h >= opt.tol) {
        std::string log;
        const std::size_t k0 = out.objective_log.size() > 5 ? out.objective_log.size() - 5 : 0;
        for (std::size_t k = k0; k < out.objective_log.size(); ++k) log += " " + std::to_string(out.objective_log[k]);
        throw ConvergenceError("alternating minimisation stalled after " + std::to_string(sweep) +
                               " sweeps (residual " + std::to_string(res_h) + "; last objectives" + log + ")");
    }

    out.h = h;
    out.psi = st.psi;
    out.coord = red.coord;
    out.mu = red.mu;
    out.lambda1 = lambda1;
    out.lambda2 = st.lambda2;
    out.Lambda = A * (lambda1 + st.lambda2);
    out.residual_h = res_h;

    // F(h, psi) evaluated directly, and the psi-equation residual
    std::vector<double> we(red.edges.size()), d(n);
    double F = 0.0, m0 = 0.0, m1 = 0.0, m2 = 0.0;
    for (std::size_t e = 0; e < red.edges.size(); ++e) {
        const auto [a, b] = red.edges[e];
        we[e] = 0.5 * (h[a] * h[a] + h[b] * h[b]);
        const double dp = st.psi[a] - st.psi[b], dh = h[a] - h[b];
        F += red.c[e] * (we[e] * dp * dp + 4.0 * dh * dh);
    }
    for (std::size_t i = 0; i < n; ++i) {
        d[i] = red.mu[i] * h[i] * h[i];
        F += d[i] * red.R[i];
        m0 += d[i];
        m1 += d[i] * st.psi[i];
        m2 += d[i] * st.psi[i] * st.psi[i];
    }
    out.objective = F;
    out.constraint_mass = std::abs(m0 - A) / A;
    out.constraint_mean = std::abs(m1) / A;
    out.constraint_norm = std::abs(m2 - A) / A;
    const Eigen::VectorXd r = detail::stiffness(red, we) * detail::as_vector(st.psi);
    double num = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double ri = r[static_cast<Eigen::Index>(i)] - st.lambda2 * d[i] * st.psi[i];
        num += ri * ri / d[i];
    }
    out.residual_psi = std::sqrt(num / m2) / std::max(1.0, st.lambda2);
    return out;
}

// ----------------------------------------------------------- Futaki bound

// sup over s in (0,1) of 4 s (1-s) pi^2/diam^2 + s C0
inline double futaki_bound(double diam, double C0) {
    if (!(diam > 0.0) || !std::isfinite(diam)) throw InvalidGeometry("diameter must be positive");
    const double a = pi * pi / (diam * diam);
    const double s = (4.0 * a + C0) / (8.0 * a);
    if (s >= 1.0) return C0;
    if (s <= 0.0) return 0.0;
    return 4.0 * s * (1.0 - s) * a + s * C0;
}

namespace detail {

// periodic linear interpolation of node samples
inline double periodic_interp(const std::vector<double>& v, double L, double r) {
    const std::size_t n = v.size();
    double x = std::fmod(r / L, 1.0);
    if (x < 0.0) x += 1.0;
    x *= static_cast<double>(n);
    const auto i = static_cast<std::size_t>(x) % n;
    const double w = x - std::floor(x);
    return (1.0 - w) * v[i] + w * v[(i + 1) % n];
}

// Graph distances on an (r, theta) lattice with a 16-neighbour stencil; every
// edge is an actual curve, so the result bounds the true diameter from above.
inline double torus_diameter(const WarpedTorus& w) {
    const std::size_t nr = std::min<std::size_t>(w.size(), 96);
    double rbar = 0.0, pbar = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
        rbar += w.rho[i];
        pbar += w.phi[i];
    }
    const double dr = w.length / static_cast<double>(nr);
    const double step = dr * rbar / static_cast<double>(w.size());
    const auto nt = static_cast<std::size_t>(
        std::clamp(std::llround(2.0 * pi * pbar / static_cast<double>(w.size()) / step), 16LL, 192LL));
    const double dth = 2.0 * pi / static_cast<double>(nt);

    static const int moves[16][2] = {{1, 0}, {-1, 0}, {0, 1},  {0, -1}, {1, 1},  {1, -1}, {-1, 1}, {-1, -1},
                                     {1, 2}, {1, -2}, {-1, 2}, {-1, -2}, {2, 1}, {2, -1}, {-2, 1}, {-2, -1}};
    // Gauss-Legendre nodes on [0,1]
    static const double gx[4] = {0.0694318442029737, 0.3300094782075719, 0.6699905217924281, 0.9305681557970263};
    static const double gw[4] = {0.1739274225687269, 0.3260725774312731, 0.3260725774312731, 0.1739274225687269};
    // edge length depends on the start row and the move only
    std::vector<double> len(nr * 16);
    for (std::size_t i = 0; i < nr; ++i)
        for (int m = 0; m < 16; ++m) {
            const double r0 = dr * static_cast<double>(i);
            const double a = moves[m][0] * dr, b = moves[m][1] * dth;
            double s = 0.0;
            for (int q = 0; q < 4; ++q) {
                const double r = r0 + gx[q] * a;
                const double ro = periodic_interp(w.rho, w.length, r), ph = periodic_interp(w.phi, w.length, r);
                s += gw[q] * std::sqrt(ro * ro * a * a + ph * ph * b * b);
            }
            len[i * 16 + static_cast<std::size_t>(m)] = s;
        }
    const std::size_t total = nr * nt;
    double diam = 0.0;
    std::vector<double> dist(total);
    using Item = std::pair<double, std::size_t>;
    for (std::size_t src = 0; src < nr; ++src) {
        std::fill(dist.begin(), dist.end(), std::numeric_limits<double>::infinity());
        std::priority_queue<Item, std::vector<Item>, std::greater<>> q;
        dist[src * nt] = 0.0;
        q.emplace(0.0, src * nt);
        while (!q.empty()) {
            const auto [dcur, id] = q.top();
            q.pop();
            if (dcur > dist[id]) continue;
            const std::size_t i = id / nt, j = id % nt;
            for (int m = 0; m < 16; ++m) {
                const std::size_t ii = (i + nr + static_cast<std::size_t>(moves[m][0] + 2) - 2) % nr;
                const std::size_t jj = (j + nt + static_cast<std::size_t>(moves[m][1] + 2) - 2) % nt;
                const std::size_t k = ii * nt + jj;
                const double nd = dcur + len[i * 16 + static_cast<std::size_t>(m)];
                if (nd < dist[k]) {
                    dist[k] = nd;
                    q.emplace(nd, k);
                }
            }
        }
        diam = std::max(diam, *std::max_element(dist.begin(), dist.end()));
    }
    return diam;
}

} // namespace detail

inline double diameter(const Geometry& g) {
    switch (g.kind()) {
    case GeometryClass::constant_curvature: {
        const auto& c = g.cc();
        if (c.K <= 0.0) throw UnsupportedCase("diameter needs K > 0");
        return pi * std::sqrt(c.sigma / c.K);
    }
    case GeometryClass::homogeneous3: {
        const auto p = curvature_package(g);
        if (!(p.sectional_min > 0.0) || p.sectional_max - p.sectional_min > 1e-12 * p.sectional_min)
            throw UnsupportedCase("diameter of non-round homogeneous metrics is not computed");
        return pi / std::sqrt(p.sectional_min);
    }
    case GeometryClass::warped_torus: return detail::torus_diameter(g.wt());
    }
    throw UnsupportedCase("unknown geometry class");
}

struct FutakiCheck {
    double C0_constant = 0.0;  // min Ric^BE eigenvalue for constant density
    double C0_certified = 0.0; // with f0 = -2 log h0
    double diam = 0.0;
    double bound = 0.0;        // futaki_bound(diam, C0_certified)
    double perelman = 0.0;     // lambda(g)
    double lhs = 0.0;          // Lambda
    double rhs = 0.0;          // A lambda + bound
    bool pass = false;
};

namespace detail {

// smallest eigenvalue of Ric + Hess f0 over the reduced grid
inline double certified_c0(const Geometry& g, const Reduced& red, const std::vector<double>& h) {
    const std::size_t n = h.size();
    std::vector<double> f(n);
    for (std::size_t i = 0; i < n; ++i) f[i] = -2.0 * std::log(h[i]);
    double c0 = std::numeric_limits<double>::infinity();
    if (g.kind() == GeometryClass::warped_torus) {
        const auto be = orthonormal(g, bakry_emery_ricci(g, f));
        for (const auto& e : be) c0 = std::min({c0, e[0], e[1]});
        return c0;
    }
    // zonal sphere of radius a, cell-centred with reflecting ends
    const double a = red.radius;
    const double d = red.coord[1] - red.coord[0];
    const int dim = red.dim;
    for (std::size_t i = 0; i < n; ++i) {
        const double fm = f[i == 0 ? 0 : i - 1], fp = f[i + 1 == n ? n - 1 : i + 1];
        const double ft = (fp - fm) / (2.0 * d), ftt = (fp - 2.0 * f[i] + fm) / (d * d);
        const double ric = (dim - 1.0) / (a * a);
        const double radial = ric + ftt / (a * a);
        const double tangential = ric + ft / std::tan(red.coord[i]) / (a * a);
        c0 = std::min({c0, radial, tangential});
    }
    return c0;
}

} // namespace detail

inline FutakiCheck futaki_check(const Geometry& g, double alpha, const EigenResult& e,
                                std::size_t zonal_cells = 256) {
    FutakiCheck c;
    const auto red = detail::reduce(g, zonal_cells);
    const auto be = orthonormal(g, bakry_emery_ricci(g, ScalarField(g.nodes(), 0.0)));
    c.C0_constant = std::numeric_limits<double>::infinity();
    for (const auto& x : be) {
        if (g.kind() == GeometryClass::warped_torus) c.C0_constant = std::min({c.C0_constant, x[0], x[1]});
        else if (g.kind() == GeometryClass::constant_curvature) c.C0_constant = std::min(c.C0_constant, x[0]);
        else c.C0_constant = std::min({c.C0_constant, x[0], x[1], x[2]});
    }
    c.C0_certified = detail::certified_c0(g, red, e.h);
    c.diam = diameter(g);
    c.bound = futaki_bound(c.diam, c.C0_certified);
    c.perelman = perelman_lambda(g, alpha, zonal_cells).lambda;
    c.lhs = e.Lambda;
    c.rhs = e.A * c.perelman + c.bound;
    c.pass = c.lhs >= c.rhs;
    return c;
}

// ----------------------------------------------------- |Rm|^2 variation

struct VariationCheck {
    double finite_difference = 0.0;
    double formula = 0.0;
    double relative = 0.0;
};

// d/deps int |Rm|^2(g + eps v) d omega with d omega held fixed, against
// int (-4 K (Lap tr v - divdiv v) - 4 K^2 tr v) d omega (the 2-D reduction of
// -4 R_ijkl nabla^i nabla^l v^jk - 2 Rm2_jk v^jk). v holds coordinate components.
inline VariationCheck rm_norm_variation(const Geometry& g, const ScalarField& f, const SymmetricTensorField& v,
                                        double eps = 1e-5) {
    if (g.kind() != GeometryClass::warped_torus) throw UnsupportedCase("variation check runs on the warped torus");
    if (v.c.size() != g.nodes()) throw RepresentationError("perturbation has the wrong number of nodes");
    const auto w = measure_weights(g, f);
    const std::size_t n = g.nodes();
    auto energy = [&](double e) {
        auto c = metric_coefficients(g);
        for (std::size_t i = 0; i < n; ++i) {
            if (v.c[i][2] != 0.0) throw RepresentationError("perturbation must be diagonal");
            c[i] += e * v.c[i][0];
            c[n + i] += e * v.c[i][1];
        }
        const auto rm = curvature_package(with_metric_coefficients(g, c)).rm_norm2;
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += w[i] * rm[i];
        return s;
    };
    VariationCheck out;
    out.finite_difference = (energy(eps) - energy(-eps)) / (2.0 * eps);

    const detail::Torus t(g.wt());
    const auto o = orthonormal(g, v);
    const auto K = t.gauss();
    const auto kh = t.k_half();
    std::vector<double> a(n), b(n), tr(n), X(n);
    for (std::size_t i = 0; i < n; ++i) {
        a[i] = o[i][0];
        b[i] = o[i][1];
        tr[i] = a[i] + b[i];
    }
    // div v at half nodes (orthonormal radial component), then its divergence
    for (std::size_t j = 0; j < n; ++j) {
        const std::size_t k = t.up(j);
        X[j] = (a[k] - a[j]) / (t.h * t.rh[j]) + kh[j] * 0.5 * (a[j] + a[k] - b[j] - b[k]);
    }
    const std::vector<double> one(n, 1.0);
    const auto lap = t.lap_w(one, tr);
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t m = t.dn(i);
        const double dd = (t.ph[i] * X[i] - t.ph[m] * X[m]) / (t.h * t.rho[i] * t.phi[i]);
        s += w[i] * (-4.0 * K[i] * (lap[i] - dd) - 4.0 * K[i] * K[i] * tr[i]);
    }
    out.formula = s;
    out.relative = std::abs(out.finite_difference - out.formula) /
                   std::max(std::abs(out.formula), std::numeric_limits<double>::min());
    return out;
}

// --------------------------------------------------------- entropy records

struct EntropyRecord {
    double t = 0.0;
    double N = 0.0;
    double N_production = 0.0;
    bool nash_gauge = true; // xi = 0, so N is meaningful
    double F = 0.0;
    double F_ext = 0.0;
    double F2 = 0.0;
    double rhs_bound = 0.0; // 2 int |Ric^BE + (alpha/8) Rm2(g, xi)|^2 d omega
};

inline double extended_F_bound(const Geometry& g, const ScalarField& f, const VectorField& xi, double alpha) {
    const auto be = bakry_emery_ricci(g, f);
    const auto b = drift_modified_rm2(g, xi, alpha);
    const auto q = tensor_norm2(g, tensor_combine(be, 1.0, b, alpha / 8.0));
    return 2.0 * integrate(g, f, q);
}

inline EntropyRecord entropy_record(const FlowState& s) {
    EntropyRecord r;
    r.t = s.t;
    const auto& f = s.density.f;
    r.nash_gauge = detail::drift_vanishes(s.g, s.drift);
    const auto ne = detail::nash_terms(s.g, f, s.t, s.alpha);
    r.N = ne.N;
    r.N_production = ne.production;
    r.F = perelman_F(s.g, f);
    r.F_ext = extended_F(s.g, f, s.drift);
    r.F2 = f2_energy(s.g, f, s.drift, s.alpha);
    r.rhs_bound = extended_F_bound(s.g, f, assemble(s.g, s.drift), s.alpha);
    return r;
}

// ---------------------------------------------------- monotonicity report

struct Inequality {
    std::string name;
    bool informational = false; // reported, never counted as a failure
    std::vector<double> times, quotient, bound, slack, tolerance;
    std::vector<bool> step_pass;
    bool pass = true;
};

struct MonotonicityReport {
    std::vector<EntropyRecord> records;
    std::vector<Inequality> inequalities;
    bool pass() const {
        for (const auto& q : inequalities)
            if (!q.informational && !q.pass) return false;
        return true;
    }
};

struct ReportOptions {
    double tol_constant = 1.0; // tolerance C (dt + h^2) max(1, |bound|)
    bool lambda = false;       // Lambda difference quotients (informational)
    std::size_t lambda_stride = 1;
    LambdaOptions lambda_options;
};

namespace detail {

inline Inequality named(std::string name, bool informational = false) {
    Inequality q;
    q.name = std::move(name);
    q.informational = informational;
    return q;
}

inline void add(Inequality& q, double t, double quotient, double bound, double tol) {
    q.times.push_back(t);
    q.quotient.push_back(quotient);
    q.bound.push_back(bound);
    q.slack.push_back(quotient - bound);
    q.tolerance.push_back(tol);
    const bool ok = quotient - bound >= -tol;
    q.step_pass.push_back(ok);
    q.pass = q.pass && ok;
}

} // namespace detail

// Difference quotients between consecutive snapshots against the lower bounds:
//   nash_production:  production >= 0 at every snapshot (xi = 0 runs)
//   nash_monotone:    dN/dt >= 0 and equal to the production (trapezoid)
//   extended_F:       dF_ext/dt >= 2 int |Ric^BE + alpha/8 Rm2(g,xi)|^2 (DeTurck runs)
//   capital_lambda:   dLambda/dt >= 0, informational
inline MonotonicityReport monotonicity_report(const Trajectory& tr, const ReportOptions& opt = {}) {
    if (tr.states.size() < 3) throw InsufficientData("monotonicity needs at least three snapshots");
    if (!tr.measure_resolved) throw InsufficientData("trajectory carries no resolved measure");
    MonotonicityReport rep;
    for (const auto& s : tr.states) rep.records.push_back(entropy_record(s));
    const auto& g0 = tr.states.front().g;
    const double h = g0.is_frame() ? 0.0 : g0.wt().spacing();
    bool gauge = true;
    for (const auto& r : rep.records) gauge = gauge && r.nash_gauge;

    if (gauge && tr.mode != FlowMode::deturck) {
        Inequality prod = detail::named("nash_production"), mono = detail::named("nash_monotone"),
                   match = detail::named("nash_rate_matches_production");
        for (const auto& r : rep.records) detail::add(prod, r.t, r.N_production, 0.0, 0.0);
        for (std::size_t k = 0; k + 1 < rep.records.size(); ++k) {
            const auto& a = rep.records[k];
            const auto& b = rep.records[k + 1];
            const double dt = b.t - a.t;
            const double qd = (b.N - a.N) / dt;
            const double pm = 0.5 * (a.N_production + b.N_production);
            const double tol = opt.tol_constant * (dt + h * h) * std::max(1.0, std::abs(pm));
            detail::add(mono, b.t, qd, 0.0, tol);
            // two-sided: |quotient - production| <= tol, recorded as tol - |diff|
            match.times.push_back(b.t);
            match.quotient.push_back(qd);
            match.bound.push_back(pm);
            match.slack.push_back(qd - pm);
            match.tolerance.push_back(tol);
            const bool ok = std::abs(qd - pm) <= tol;
            match.step_pass.push_back(ok);
            match.pass = match.pass && ok;
        }
        rep.inequalities.push_back(prod);
        rep.inequalities.push_back(mono);
        rep.inequalities.push_back(match);
    }
    if (tr.mode == FlowMode::deturck) {
        Inequality q = detail::named("extended_F");
        for (std::size_t k = 0; k + 1 < rep.records.size(); ++k) {
            const auto& a = rep.records[k];
            const auto& b = rep.records[k + 1];
            const double dt = b.t - a.t;
            const double bound = 0.5 * (a.rhs_bound + b.rhs_bound);
            const double tol = opt.tol_constant * (dt + h * h) * std::max(1.0, std::abs(bound));
            detail::add(q, b.t, (b.F_ext - a.F_ext) / dt, bound, tol);
        }
        rep.inequalities.push_back(q);
    }
    if (opt.lambda) {
        Inequality q = detail::named("capital_lambda", true);
        const std::size_t stride = std::max<std::size_t>(1, opt.lambda_stride);
        double prev = 0.0, tprev = 0.0;
        bool have = false;
        for (std::size_t k = 0; k < tr.states.size(); k += stride) {
            const auto& s = tr.states[k];
            const double lam = capital_lambda(s.g, s.alpha, opt.lambda_options).Lambda;
            if (have) detail::add(q, s.t, (lam - prev) / (s.t - tprev), 0.0, 0.0);
            prev = lam;
            tprev = s.t;
            have = true;
        }
        rep.inequalities.push_back(q);
    }
    return rep;
}

} // namespace rg2
