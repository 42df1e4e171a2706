#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "detail/lie_frame.hpp"
#include "detail/torus.hpp"
#include "geometry.hpp"

// Curvature sign convention: R_ijkl = K (g_il g_jk - g_ik g_jl) on a space form,
// so R_ijji is the sectional curvature. Rm2_ij = R_iklm R_j^klm.

namespace rg2 {

using Frame3 = std::array<double, 3>;

// ------------------------------------------------------------- validation

inline void require_scalar(const Geometry& g, const ScalarField& u, const char* what) {
    if (u.size() != g.nodes())
        throw RepresentationError(std::string(what) + ": expected " + std::to_string(g.nodes()) + " node values, got " +
                                  std::to_string(u.size()));
    for (double x : u)
        if (!std::isfinite(x)) throw RepresentationError(std::string(what) + ": non-finite value");
}

inline void require_vector(const Geometry& g, const VectorField& x) {
    switch (g.kind()) {
    case GeometryClass::constant_curvature: {
        if (x.v.size() != 1 || !x.theta.empty())
            throw RepresentationError("constant-curvature vector fields carry one Killing amplitude");
        const auto& c = g.cc();
        if (x.v[0] != 0.0 && !(c.K == 0.0 || (c.K > 0.0 && c.n % 2 == 1)))
            throw RepresentationError("no nowhere-vanishing Killing field of constant length in this space form");
        break;
    }
    case GeometryClass::homogeneous3:
        if (x.v.size() != 3 || !x.theta.empty())
            throw RepresentationError("homogeneous vector fields carry three frame components");
        break;
    case GeometryClass::warped_torus:
        if (x.v.size() != g.nodes() || x.theta.size() != g.nodes())
            throw RepresentationError("warped-torus vector fields need radial and angular samples");
        break;
    }
    for (double v : x.v)
        if (!std::isfinite(v)) throw RepresentationError("non-finite vector component");
    for (double v : x.theta)
        if (!std::isfinite(v)) throw RepresentationError("non-finite vector component");
}

inline void require_coupling(double alpha) {
    if (!std::isfinite(alpha) || alpha <= 0.0) throw InvalidCoupling("coupling must be positive and finite");
}

inline VectorField zero_vector(const Geometry& g) {
    switch (g.kind()) {
    case GeometryClass::constant_curvature: return {{0.0}, {}};
    case GeometryClass::homogeneous3: return {{0.0, 0.0, 0.0}, {}};
    case GeometryClass::warped_torus:
        return {std::vector<double>(g.nodes(), 0.0), std::vector<double>(g.nodes(), 0.0)};
    }
    return {};
}

inline SymmetricTensorField zero_tensor(const Geometry& g) {
    return {std::vector<Frame3>(g.nodes(), Frame3{0.0, 0.0, 0.0})};
}

// --------------------------------------------------- orthonormal components
//
// Per node: constant curvature {c,0,0} meaning c * identity; Homogeneous3 the
// diagonal in the frame E_i = e_i/sqrt(a_i); WarpedTorus {rr, thth, rth} in
// the frame (dr rho, dtheta phi).

inline std::vector<Frame3> orthonormal(const Geometry& g, const SymmetricTensorField& t) {
    std::vector<Frame3> out = t.c;
    if (t.c.size() != g.nodes()) throw RepresentationError("tensor field has the wrong number of nodes");
    if (g.kind() == GeometryClass::homogeneous3) {
        for (int i = 0; i < 3; ++i) out[0][i] /= g.h3().a[i];
    } else if (g.kind() == GeometryClass::warped_torus) {
        const auto& w = g.wt();
        for (std::size_t i = 0; i < w.size(); ++i) {
            out[i][0] /= w.rho[i] * w.rho[i];
            out[i][1] /= w.phi[i] * w.phi[i];
            out[i][2] /= w.rho[i] * w.phi[i];
        }
    }
    return out;
}

inline SymmetricTensorField from_orthonormal(const Geometry& g, std::vector<Frame3> t) {
    if (g.kind() == GeometryClass::homogeneous3) {
        for (int i = 0; i < 3; ++i) t[0][i] *= g.h3().a[i];
    } else if (g.kind() == GeometryClass::warped_torus) {
        const auto& w = g.wt();
        for (std::size_t i = 0; i < w.size(); ++i) {
            t[i][0] *= w.rho[i] * w.rho[i];
            t[i][1] *= w.phi[i] * w.phi[i];
            t[i][2] *= w.rho[i] * w.phi[i];
        }
    }
    return {std::move(t)};
}

inline ScalarField tensor_norm2(const Geometry& g, const SymmetricTensorField& t) {
    const auto o = orthonormal(g, t);
    ScalarField out(o.size());
    for (std::size_t i = 0; i < o.size(); ++i) {
        switch (g.kind()) {
        case GeometryClass::constant_curvature: out[i] = g.dim() * o[i][0] * o[i][0]; break;
        case GeometryClass::homogeneous3: out[i] = o[i][0] * o[i][0] + o[i][1] * o[i][1] + o[i][2] * o[i][2]; break;
        case GeometryClass::warped_torus:
            out[i] = o[i][0] * o[i][0] + o[i][1] * o[i][1] + 2.0 * o[i][2] * o[i][2];
            break;
        }
    }
    return out;
}

inline ScalarField tensor_trace(const Geometry& g, const SymmetricTensorField& t) {
    const auto o = orthonormal(g, t);
    ScalarField out(o.size());
    for (std::size_t i = 0; i < o.size(); ++i) {
        switch (g.kind()) {
        case GeometryClass::constant_curvature: out[i] = g.dim() * o[i][0]; break;
        case GeometryClass::homogeneous3: out[i] = o[i][0] + o[i][1] + o[i][2]; break;
        case GeometryClass::warped_torus: out[i] = o[i][0] + o[i][1]; break;
        }
    }
    return out;
}

inline SymmetricTensorField tensor_combine(const SymmetricTensorField& a, double sa, const SymmetricTensorField& b,
                                           double sb) {
    if (a.c.size() != b.c.size()) throw RepresentationError("tensor fields differ in size");
    SymmetricTensorField out = a;
    for (std::size_t i = 0; i < a.c.size(); ++i)
        for (int k = 0; k < 3; ++k) out.c[i][k] = sa * a.c[i][k] + sb * b.c[i][k];
    return out;
}

// ------------------------------------------------------------- curvature

struct CurvaturePackage {
    SymmetricTensorField ricci;
    SymmetricTensorField rm2;
    ScalarField scalar;   // R
    ScalarField rm_norm2; // |Rm|^2
    double sectional_min = 0.0;
    double sectional_max = 0.0;
    std::vector<Frame3> sectional; // Homogeneous3: K_23, K_13, K_12; otherwise one value per node
};

namespace detail {

// Milnor's closed forms in the orthonormal frame. Returns Ric(E_i,E_i) and K_jk
// with K[i] the curvature of the plane spanned by the two other directions.
inline void milnor(const Homogeneous3& h, Frame3& ric, Frame3& sec) {
    const auto& a = h.a;
    const double m1 = h.lambda[0] * std::sqrt(a[0] / (a[1] * a[2]));
    const double m2 = h.lambda[1] * std::sqrt(a[1] / (a[0] * a[2]));
    const double m3 = h.lambda[2] * std::sqrt(a[2] / (a[0] * a[1]));
    const double s = 0.5 * (m1 + m2 + m3);
    const double n1 = s - m1, n2 = s - m2, n3 = s - m3;
    ric = {2.0 * n2 * n3, 2.0 * n1 * n3, 2.0 * n1 * n2};
    for (int i = 0; i < 3; ++i) {
        const int j = (i + 1) % 3, k = (i + 2) % 3;
        sec[i] = 0.5 * (ric[j] + ric[k] - ric[i]);
    }
}

} // namespace detail

inline CurvaturePackage curvature_package(const Geometry& g) {
    CurvaturePackage p;
    switch (g.kind()) {
    case GeometryClass::constant_curvature: {
        const auto& c = g.cc();
        const double kg = c.K / c.sigma;
        const double n = c.n;
        p.ricci.c = {{(n - 1.0) * kg, 0.0, 0.0}};
        p.rm2.c = {{2.0 * (n - 1.0) * kg * kg, 0.0, 0.0}};
        p.scalar = {n * (n - 1.0) * kg};
        p.rm_norm2 = {2.0 * n * (n - 1.0) * kg * kg};
        p.sectional = {{kg, kg, kg}};
        p.sectional_min = p.sectional_max = kg;
        break;
    }
    case GeometryClass::homogeneous3: {
        const auto& h = g.h3();
        Frame3 ric, sec;
        detail::milnor(h, ric, sec);
        Frame3 rm2;
        for (int i = 0; i < 3; ++i) {
            const int j = (i + 1) % 3, k = (i + 2) % 3;
            // planes containing E_i are E_i^E_j (curvature sec[k]) and E_i^E_k (sec[j])
            rm2[i] = 2.0 * (sec[j] * sec[j] + sec[k] * sec[k]);
        }
        p.ricci = from_orthonormal(g, {ric});
        p.rm2 = from_orthonormal(g, {rm2});
        p.scalar = {ric[0] + ric[1] + ric[2]};
        p.rm_norm2 = {4.0 * (sec[0] * sec[0] + sec[1] * sec[1] + sec[2] * sec[2])};
        p.sectional = {sec};
        p.sectional_min = std::min({sec[0], sec[1], sec[2]});
        p.sectional_max = std::max({sec[0], sec[1], sec[2]});
        break;
    }
    case GeometryClass::warped_torus: {
        const detail::Torus t(g.wt());
        const auto k = t.gauss();
        std::vector<Frame3> ric(t.n), rm2(t.n);
        p.scalar.resize(t.n);
        p.rm_norm2.resize(t.n);
        p.sectional.resize(t.n);
        for (std::size_t i = 0; i < t.n; ++i) {
            ric[i] = {k[i], k[i], 0.0};
            rm2[i] = {2.0 * k[i] * k[i], 2.0 * k[i] * k[i], 0.0};
            p.scalar[i] = 2.0 * k[i];
            p.rm_norm2[i] = 4.0 * k[i] * k[i];
            p.sectional[i] = {k[i], k[i], k[i]};
        }
        p.ricci = from_orthonormal(g, ric);
        p.rm2 = from_orthonormal(g, rm2);
        p.sectional_min = *std::min_element(k.begin(), k.end());
        p.sectional_max = *std::max_element(k.begin(), k.end());
        break;
    }
    }
    return p;
}

// ------------------------------------------------- first and second order

inline SymmetricTensorField hessian(const Geometry& g, const ScalarField& u) {
    require_scalar(g, u, "hessian");
    if (g.is_frame()) return zero_tensor(g);
    const detail::Torus t(g.wt());
    const auto uss = t.d_ss(u);
    const auto us = t.d_s(u);
    const auto k = t.k_node();
    std::vector<Frame3> o(t.n);
    for (std::size_t i = 0; i < t.n; ++i) o[i] = {uss[i], k[i] * us[i], 0.0};
    return from_orthonormal(g, o);
}

inline SymmetricTensorField bakry_emery_ricci(const Geometry& g, const ScalarField& f) {
    const auto p = curvature_package(g);
    return tensor_combine(p.ricci, 1.0, hessian(g, f), 1.0);
}

inline VectorField gradient(const Geometry& g, const ScalarField& u) {
    require_scalar(g, u, "gradient");
    VectorField out = zero_vector(g);
    if (!g.is_frame()) out.v = detail::Torus(g.wt()).grad_half(u);
    return out;
}

inline VectorField assemble(const Geometry& g, const DriftField& d) {
    require_vector(g, d.perp);
    VectorField out = gradient(g, d.psi);
    for (std::size_t i = 0; i < out.v.size(); ++i) out.v[i] += d.perp.v[i];
    for (std::size_t i = 0; i < out.theta.size(); ++i) out.theta[i] += d.perp.theta[i];
    return out;
}

inline ScalarField weighted_laplacian_apply(const Geometry& g, const ScalarField& f, const ScalarField& u) {
    require_scalar(g, f, "density exponent");
    require_scalar(g, u, "laplacian argument");
    if (g.is_frame()) return {0.0};
    const detail::Torus t(g.wt());
    return t.lap_w(t.density(f), u);
}

inline ScalarField weighted_divergence(const Geometry& g, const ScalarField& f, const VectorField& x) {
    require_scalar(g, f, "density exponent");
    require_vector(g, x);
    switch (g.kind()) {
    case GeometryClass::constant_curvature: return {0.0}; // Killing fields
    case GeometryClass::homogeneous3: {
        // left-invariant fields on a unimodular group: div = -sum_a Gamma_aam x_m
        const detail::LieFrame fr(g.h3());
        double s = 0.0;
        for (int a = 0; a < 3; ++a)
            for (int m = 0; m < 3; ++m) s -= fr.gamma(a, a, m) * x.v[m] * std::sqrt(g.h3().a[m]);
        return {s};
    }
    case GeometryClass::warped_torus: {
        const detail::Torus t(g.wt());
        return t.div_w(t.density(f), x.v);
    }
    }
    return {};
}

inline ScalarField weighted_divergence(const Geometry& g, const ScalarField& f, const DriftField& d) {
    return weighted_divergence(g, f, assemble(g, d));
}

// Orthonormal components of a vector field: CC {sqrt(sigma) s}, H3 {sqrt(a_i) x_i},
// WT radial u_j = rho_{j+1/2} xi^r_j (half nodes) and angular phi_i xi^theta_i.
inline VectorField vector_orthonormal(const Geometry& g, const VectorField& x) {
    require_vector(g, x);
    VectorField o = x;
    switch (g.kind()) {
    case GeometryClass::constant_curvature: o.v[0] *= std::sqrt(g.cc().sigma); break;
    case GeometryClass::homogeneous3:
        for (int i = 0; i < 3; ++i) o.v[i] *= std::sqrt(g.h3().a[i]);
        break;
    case GeometryClass::warped_torus: {
        const detail::Torus t(g.wt());
        for (std::size_t i = 0; i < t.n; ++i) {
            o.v[i] *= t.rh[i];
            o.theta[i] *= t.phi[i];
        }
        break;
    }
    }
    return o;
}

inline VectorField vector_from_orthonormal(const Geometry& g, VectorField o) {
    switch (g.kind()) {
    case GeometryClass::constant_curvature: o.v[0] /= std::sqrt(g.cc().sigma); break;
    case GeometryClass::homogeneous3:
        for (int i = 0; i < 3; ++i) o.v[i] /= std::sqrt(g.h3().a[i]);
        break;
    case GeometryClass::warped_torus: {
        const detail::Torus t(g.wt());
        for (std::size_t i = 0; i < t.n; ++i) {
            o.v[i] /= t.rh[i];
            o.theta[i] /= t.phi[i];
        }
        break;
    }
    }
    return o;
}

namespace detail {

inline std::vector<double> lie_ortho_h3(const Homogeneous3& h, const std::vector<double>& x) {
    const LieFrame fr(h);
    std::vector<double> xo(3);
    for (int i = 0; i < 3; ++i) xo[i] = x[i] * std::sqrt(h.a[i]);
    const auto dx = fr.nabla(xo, 1); // (nabla xi)_{a,b}
    std::vector<double> l(9);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) l[i * 3 + j] = dx[i * 3 + j] + dx[j * 3 + i];
    return l;
}

inline Frame3 diagonal_or_throw(const std::vector<double>& m, const char* what) {
    double scale = 0.0;
    for (double v : m) scale = std::max(scale, std::abs(v));
    const double off = std::max({std::abs(m[1]), std::abs(m[2]), std::abs(m[5])});
    if (off > 1e-12 * std::max(1.0, scale))
        throw RepresentationError(std::string(what) + " is not diagonal in the Milnor frame");
    return {m[0], m[4], m[8]};
}

} // namespace detail

inline SymmetricTensorField lie_derivative_metric(const Geometry& g, const VectorField& x) {
    require_vector(g, x);
    switch (g.kind()) {
    case GeometryClass::constant_curvature: return zero_tensor(g);
    case GeometryClass::homogeneous3: {
        const auto l = detail::lie_ortho_h3(g.h3(), x.v);
        return from_orthonormal(g, {detail::diagonal_or_throw(l, "Lie derivative of the metric")});
    }
    case GeometryClass::warped_torus: {
        const detail::Torus t(g.wt());
        SymmetricTensorField out = zero_tensor(g);
        for (std::size_t i = 0; i < t.n; ++i) {
            const std::size_t m = t.dn(i), p = t.up(i);
            const double up = t.rh[i] * x.v[i], um = t.rh[m] * x.v[m];
            const double xr = 0.5 * (x.v[m] + x.v[i]);
            out.c[i][0] = 2.0 * t.rho[i] * (up - um) / t.h;
            out.c[i][1] = xr * (t.phi[p] * t.phi[p] - t.phi[m] * t.phi[m]) / (2.0 * t.h);
            out.c[i][2] = t.phi[i] * t.phi[i] * (x.theta[p] - x.theta[m]) / (2.0 * t.h);
        }
        return out;
    }
    }
    return {};
}

// Rm2(g, xi) = Rm2 - (2/alpha) L_xi g
inline SymmetricTensorField drift_modified_rm2(const Geometry& g, const VectorField& x, double alpha) {
    require_coupling(alpha);
    return tensor_combine(curvature_package(g).rm2, 1.0, lie_derivative_metric(g, x), -2.0 / alpha);
}

// Rough (connection) Laplacian of a vector field for the measure e^{-f} dmu,
// returned in orthonormal components (same layout as vector_orthonormal).
inline VectorField rough_laplacian_orthonormal(const Geometry& g, const ScalarField& f, const VectorField& x) {
    require_scalar(g, f, "density exponent");
    require_vector(g, x);
    const VectorField o = vector_orthonormal(g, x);
    switch (g.kind()) {
    case GeometryClass::constant_curvature: {
        const auto& c = g.cc();
        return {{-(c.n - 1.0) * (c.K / c.sigma) * o.v[0]}, {}};
    }
    case GeometryClass::homogeneous3: {
        const detail::LieFrame fr(g.h3());
        return {fr.rough_laplacian(o.v, 1), {}};
    }
    case GeometryClass::warped_torus: {
        const detail::Torus t(g.wt());
        const auto p = t.density(f);
        auto lr = t.lap_w_half(p, o.v);
        auto la = t.lap_w(p, o.theta);
        const auto kh = t.k_half();
        const auto kn = t.k_node();
        for (std::size_t i = 0; i < t.n; ++i) {
            lr[i] -= kh[i] * kh[i] * o.v[i];
            la[i] -= kn[i] * kn[i] * o.theta[i];
        }
        return {lr, la};
    }
    }
    return {};
}

// ------------------------------------------------------ div-div identity

struct HarnackSides {
    SymmetricTensorField lhs; // e^f div_w div_w (e^{-f} Rm)
    SymmetricTensorField rhs;
    double max_residual = 0.0; // orthonormal max |lhs - rhs|
};

inline HarnackSides divdiv_riemann(const Geometry& g, const ScalarField& f) {
    require_scalar(g, f, "density exponent");
    HarnackSides out;
    std::vector<Frame3> lhs(g.nodes()), rhs(g.nodes());
    switch (g.kind()) {
    case GeometryClass::constant_curvature: {
        const auto& c = g.cc();
        const double kg = c.K / c.sigma, be = (c.n - 1.0) * kg;
        lhs[0] = {0.0, 0.0, 0.0};
        rhs[0] = {-be * be + (c.n - 1.0) * kg * be, 0.0, 0.0};
        out.max_residual = std::abs(rhs[0][0]);
        break;
    }
    case GeometryClass::homogeneous3: {
        const detail::LieFrame fr(g.h3());
        const auto& rm = fr.riemann();
        const auto ric = fr.ricci();
        const auto d2r = fr.nabla(fr.nabla(rm, 4), 5);
        const auto lric = fr.rough_laplacian(ric, 2);
        std::vector<double> l(9, 0.0), r(9, 0.0);
        for (int j = 0; j < 3; ++j)
            for (int k = 0; k < 3; ++k) {
                double s = 0.0;
                for (int i = 0; i < 3; ++i)
                    for (int m = 0; m < 3; ++m) {
                        // (nabla nabla Rm)_{m, i, i j k m}
                        const std::size_t id = ((static_cast<std::size_t>(m) * 3 + i) * 81) +
                                               detail::LieFrame::idx(i, j, k, m);
                        s += d2r[id];
                    }
                l[j * 3 + k] = s;
                double q = lric[j * 3 + k];
                for (int a = 0; a < 3; ++a) q -= ric[k * 3 + a] * ric[a * 3 + j];
                for (int i = 0; i < 3; ++i)
                    for (int m = 0; m < 3; ++m) q += rm[detail::LieFrame::idx(i, j, k, m)] * ric[i * 3 + m];
                r[j * 3 + k] = q;
            }
        for (int e = 0; e < 9; ++e) out.max_residual = std::max(out.max_residual, std::abs(l[e] - r[e]));
        lhs[0] = {l[0], l[4], l[8]};
        rhs[0] = {r[0], r[4], r[8]};
        break;
    }
    case GeometryClass::warped_torus: {
        const detail::Torus t(g.wt());
        const auto K = t.gauss();
        const auto k = t.k_node();
        const auto p = t.density(f);
        std::vector<double> kap(t.n);
        for (std::size_t i = 0; i < t.n; ++i) kap[i] = p[i] * K[i];
        const auto ks = t.d_s(kap), kss = t.d_ss(kap);
        const auto fs = t.d_s(f), fss = t.d_ss(f);
        std::vector<double> a(t.n), b(t.n), rper(t.n);
        const auto lapf = t.lap_w(p, f);
        const auto g2 = t.grad_sq(f);
        for (std::size_t i = 0; i < t.n; ++i) {
            a[i] = K[i] + fss[i];
            b[i] = K[i] + k[i] * fs[i];
            rper[i] = 2.0 * K[i] + 2.0 * lapf[i] + g2[i];
        }
        const auto la = t.lap_w(p, a), lb = t.lap_w(p, b);
        const auto rs = t.d_s(rper), rss = t.d_ss(rper);
        for (std::size_t i = 0; i < t.n; ++i) {
            lhs[i] = {k[i] * ks[i] / p[i], kss[i] / p[i], 0.0};
            const double k2 = k[i] * k[i];
            rhs[i] = {la[i] + 2.0 * k2 * (b[i] - a[i]) - a[i] * a[i] + K[i] * b[i] - 0.5 * rss[i],
                      lb[i] + 2.0 * k2 * (a[i] - b[i]) - b[i] * b[i] + K[i] * a[i] - 0.5 * k[i] * rs[i], 0.0};
            for (int e = 0; e < 2; ++e) out.max_residual = std::max(out.max_residual, std::abs(lhs[i][e] - rhs[i][e]));
        }
        break;
    }
    }
    out.lhs = from_orthonormal(g, lhs);
    out.rhs = from_orthonormal(g, rhs);
    return out;
}

} // namespace rg2
