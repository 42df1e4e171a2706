#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "curvature.hpp"
#include "density.hpp"
#include "rk4.hpp"

namespace rg2 {

enum class FlowMode { plain, scale_invariant, deturck, seesaw };

inline const char* mode_name(FlowMode m) {
    switch (m) {
    case FlowMode::plain: return "plain";
    case FlowMode::scale_invariant: return "scale_invariant";
    case FlowMode::deturck: return "deturck";
    case FlowMode::seesaw: return "seesaw";
    }
    return "?";
}

struct FlowState {
    Geometry g;
    DensityData density;
    DriftField drift;
    double t = 0.0;
    double alpha = 1.0;
};

struct Trajectory {
    FlowMode mode = FlowMode::plain;
    double dt = 0.0;
    std::vector<FlowState> states;
    bool halted = false;
    std::string halt_reason;
    bool measure_resolved = false;

    std::vector<double> times() const {
        std::vector<double> t;
        t.reserve(states.size());
        for (const auto& s : states) t.push_back(s.t);
        return t;
    }
};

// ---------------------------------------------------------------- RG-2 field

// dg/dt = -2 Ric - (alpha/2) Rm2
inline SymmetricTensorField rg2_rhs(const Geometry& g, double alpha) {
    require_coupling(alpha);
    const auto p = curvature_package(g);
    return tensor_combine(p.ricci, -2.0, p.rm2, -0.5 * alpha);
}

// min over planes of 1 + alpha K; the flow is parabolic where this is positive
inline double parabolicity_margin(const Geometry& g, double alpha) {
    require_coupling(alpha);
    return 1.0 + alpha * curvature_package(g).sectional_min;
}

// Tensor field laid out like metric_coefficients(g).
inline std::vector<double> tensor_as_coefficients(const Geometry& g, const SymmetricTensorField& t) {
    switch (g.kind()) {
    case GeometryClass::constant_curvature: return {t.c[0][0] * g.cc().sigma};
    case GeometryClass::homogeneous3: return {t.c[0][0], t.c[0][1], t.c[0][2]};
    case GeometryClass::warped_torus: {
        const std::size_t n = g.nodes();
        std::vector<double> out(2 * n);
        for (std::size_t i = 0; i < n; ++i) {
            if (t.c[i][2] != 0.0) throw RepresentationError("metric velocity has an off-diagonal component");
            out[i] = t.c[i][0];
            out[n + i] = t.c[i][1];
        }
        return out;
    }
    }
    return {};
}

// Largest stable explicit step for the metric on the torus grid; frame
// classes have no spatial stiffness.
inline double rg2_step_bound(const Geometry& g, double alpha) {
    if (g.is_frame()) return std::numeric_limits<double>::infinity();
    const detail::Torus t(g.wt());
    const auto k = t.gauss();
    double diff = 1.0;
    for (double x : k) diff = std::max(diff, 1.0 + alpha * x);
    const double rmin = *std::min_element(t.rho.begin(), t.rho.end());
    return 0.5 * (t.h * rmin) * (t.h * rmin) / diff;
}

namespace detail {

// Returns an empty string when the geometry may be advanced, otherwise the reason to halt.
inline std::string singularity_check(const Geometry& g, double alpha, double dt) {
    const auto p = curvature_package(g);
    if (1.0 + alpha * p.sectional_min <= 0.0) return "parabolicity margin reached zero";
    const double kmax = std::max(std::abs(p.sectional_min), std::abs(p.sectional_max));
    if (!std::isfinite(kmax) || kmax > 1e8) return "curvature blow-up";
    if (g.is_frame()) {
        const auto v = tensor_as_coefficients(g, rg2_rhs(g, alpha));
        const auto c = metric_coefficients(g);
        for (std::size_t i = 0; i < c.size(); ++i)
            if (dt * std::abs(v[i]) > 0.5 * c[i]) return "metric collapsing faster than the step resolves";
    } else if (dt > rg2_step_bound(g, alpha)) {
        return "curvature growth violates the explicit step bound";
    }
    return {};
}

inline Geometry interpolate(const Geometry& a, const Geometry& b, double tau) {
    const auto x = metric_coefficients(a);
    const auto y = metric_coefficients(b);
    std::vector<double> z(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) z[i] = (1.0 - tau) * x[i] + tau * y[i];
    return with_metric_coefficients(a, z);
}

} // namespace detail

// Method-of-lines RK4 for the metric alone. The density and drift of the
// input state are copied unchanged (measure_resolved stays false); see-saw
// runs fill them in afterwards.
inline Trajectory integrate_rg2(const FlowState& s0, double dt, std::size_t steps, FlowMode mode) {
    if (mode != FlowMode::plain && mode != FlowMode::scale_invariant)
        throw RepresentationError("integrate_rg2 handles the plain and scale-invariant flows");
    const double alpha = mode == FlowMode::scale_invariant ? alpha_g(s0.g, s0.density) : s0.alpha;
    require_coupling(alpha);
    if (!(dt > 0.0) || !std::isfinite(dt)) throw StepSizeError("time step must be positive");
    if (parabolicity_margin(s0.g, alpha) <= 0.0) throw NotParabolic("initial data violate 1 + alpha K > 0");
    if (dt > rg2_step_bound(s0.g, alpha)) throw StepSizeError("time step exceeds the explicit stability bound");

    Trajectory tr;
    tr.mode = mode;
    tr.dt = dt;
    FlowState cur = s0;
    cur.alpha = alpha;
    tr.states.push_back(cur);
    for (std::size_t k = 0; k < steps; ++k) {
        const std::string why = detail::singularity_check(cur.g, alpha, dt);
        if (!why.empty()) {
            tr.halted = true;
            tr.halt_reason = why;
            break;
        }
        try {
            const auto y = metric_coefficients(cur.g);
            const auto next = rk4_step(y, dt, [&](double, const std::vector<double>& x) {
                const Geometry gx = with_metric_coefficients(cur.g, x);
                return tensor_as_coefficients(gx, rg2_rhs(gx, alpha));
            });
            cur.g = with_metric_coefficients(cur.g, next);
        } catch (const InvalidGeometry&) {
            tr.halted = true;
            tr.halt_reason = "metric degenerated";
            break;
        }
        cur.t = s0.t + static_cast<double>(k + 1) * dt;
        tr.states.push_back(cur);
    }
    return tr;
}

// --------------------------------------------------- constant curvature ODE
//
// dsigma/dt = -(n-1) K (2 sigma + alpha K) / sigma, sigma(0) = 1, solved through
// sigma = 1 - 2(n-1)K t + (alpha K/2) log((2 sigma + alpha K)/(2 + alpha K)).

inline double constant_curvature_implicit_sigma(int n, double K, double alpha, double t) {
    require_coupling(alpha);
    if (n < 2 || !std::isfinite(K) || !std::isfinite(t) || t < 0.0)
        throw InvalidGeometry("need n >= 2, finite K and t >= 0");
    if (K == 0.0) return 1.0;
    const double ak = alpha * K;
    if (2.0 + ak <= 0.0) throw BranchError("initial metric lies on the wrong branch (2 + alpha K <= 0)");
    const double c = 1.0 - 2.0 * (n - 1.0) * K * t;
    // G is increasing on the admissible branch sigma > max(0, -alpha K/2)
    auto G = [&](double s) { return s - c - 0.5 * ak * std::log((2.0 * s + ak) / (2.0 + ak)); };
    double lo = std::max(0.0, -0.5 * ak);
    if (G(lo + 1e-300) > 0.0 && K > 0.0) throw BranchError("extinction time exceeded");
    double hi = std::max(1.0, c) + std::abs(ak) + 1.0;
    while (G(hi) < 0.0) hi *= 2.0;
    double s = std::clamp(c, lo + 0.5 * (hi - lo) * 1e-6, hi);
    for (int it = 0; it < 200; ++it) {
        const double gv = G(s);
        if (gv > 0.0) hi = s;
        else lo = s;
        const double dg = 2.0 * s / (2.0 * s + ak);
        double next = s - gv / dg;
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        if (std::abs(next - s) <= 1e-15 * std::max(1.0, std::abs(s))) return next;
        s = next;
    }
    if (hi - lo <= 1e-12 * std::max(1.0, s)) return s;
    throw ConvergenceError("implicit sigma equation did not converge");
}

// ------------------------------------------------------------- drift evolution

namespace detail {

// orthonormal |B|^2, B = Rm2 - (2/alpha) L_xi g, with L_xi g from orthonormal u
// WarpedTorus: node values; requires xi^theta = 0.
inline std::vector<double> torus_b2(const Torus& t, const std::vector<double>& K, const std::vector<double>& u,
                                    double alpha, std::vector<double>* lhat_rr = nullptr) {
    const auto kn = t.k_node();
    std::vector<double> b2(t.n);
    for (std::size_t i = 0; i < t.n; ++i) {
        const std::size_t m = t.dn(i);
        const double us = (u[i] - u[m]) / (t.h * t.rho[i]);
        const double un = 0.5 * (u[i] + u[m]);
        const double brr = 2.0 * K[i] * K[i] - (2.0 / alpha) * 2.0 * us;
        const double btt = 2.0 * K[i] * K[i] - (2.0 / alpha) * 2.0 * kn[i] * un;
        b2[i] = brr * brr + btt * btt;
        if (lhat_rr) (*lhat_rr)[i] = 2.0 * us;
    }
    return b2;
}

inline void require_reflection_symmetric(const Geometry& g, const VectorField& x) {
    if (g.kind() != GeometryClass::warped_torus) return;
    for (double v : x.theta)
        if (v != 0.0) throw RepresentationError("drift evolution on the warped torus needs xi^theta = 0");
}

// Right-hand side for the orthonormal components u of xi.
// backward = true: d/deta along the plain reversed path,
//   du = Lap xi + (1/2) L_xi g (u) - (alpha^2/64)|B|^2 u
// backward = false: d/dt of the pulled-back system,
//   du = -Lap_w xi + (alpha^2/64)|B|^2 u
inline std::vector<double> xi_rhs(const Geometry& g, const ScalarField& f, const std::vector<double>& u, double alpha,
                                  bool backward) {
    const double c = alpha * alpha / 64.0;
    switch (g.kind()) {
    case GeometryClass::constant_curvature: {
        const auto& cc = g.cc();
        const double kg = cc.K / cc.sigma;
        const double rm2 = 2.0 * (cc.n - 1.0) * kg * kg;
        const double b2 = cc.n * rm2 * rm2;
        const double lap = -(cc.n - 1.0) * kg * u[0];
        return {backward ? lap - c * b2 * u[0] : -lap + c * b2 * u[0]};
    }
    case GeometryClass::homogeneous3: {
        const auto& h = g.h3();
        const LieFrame fr(h);
        std::vector<double> x(3);
        for (int i = 0; i < 3; ++i) x[i] = u[i] / std::sqrt(h.a[i]);
        const Frame3 lhat = diagonal_or_throw(lie_ortho_h3(h, x), "Lie derivative of the metric");
        const auto lap = fr.rough_laplacian(u, 1);
        Frame3 ric, sec;
        milnor(h, ric, sec);
        double b2 = 0.0;
        for (int i = 0; i < 3; ++i) {
            const int j = (i + 1) % 3, k = (i + 2) % 3;
            const double bi = 2.0 * (sec[j] * sec[j] + sec[k] * sec[k]) - (2.0 / alpha) * lhat[i];
            b2 += bi * bi;
        }
        std::vector<double> out(3);
        for (int i = 0; i < 3; ++i)
            out[i] = backward ? lap[i] + 0.5 * lhat[i] * u[i] - c * b2 * u[i] : -lap[i] + c * b2 * u[i];
        return out;
    }
    case GeometryClass::warped_torus: {
        const Torus t(g.wt());
        const auto K = t.gauss();
        const auto b2n = torus_b2(t, K, u, alpha);
        const auto kh = t.k_half();
        const auto p = backward ? std::vector<double>(t.n, 1.0) : t.density(f);
        const auto lap = t.lap_w_half(p, u);
        std::vector<double> out(t.n);
        for (std::size_t j = 0; j < t.n; ++j) {
            const double b2 = 0.5 * (b2n[j] + b2n[t.up(j)]);
            const double rough = lap[j] - kh[j] * kh[j] * u[j];
            if (backward) {
                const double us = (u[t.up(j)] - u[t.dn(j)]) / (2.0 * t.h * t.rh[j]);
                out[j] = rough + u[j] * us - c * b2 * u[j];
            } else {
                out[j] = -rough + c * b2 * u[j];
            }
        }
        return out;
    }
    }
    return {};
}

} // namespace detail

// One RK4 step (in eta = T0 - t) of the drift equation along the plain RG-2 path,
// given the metric at eta, eta + deta/2 and eta + deta.
inline VectorField xi_evolution_step(const Geometry& g0, const Geometry& g_mid, const Geometry& g1,
                                     const VectorField& xi, double alpha, double deta) {
    require_coupling(alpha);
    detail::require_reflection_symmetric(g0, xi);
    const ScalarField none(g0.nodes(), 0.0);
    const auto u0 = vector_orthonormal(g0, xi).v;
    const auto u1 = rk4_step(u0, deta, [&](double tau, const std::vector<double>& u) {
        const Geometry& gs = tau == 0.0 ? g0 : (tau == 1.0 ? g1 : g_mid);
        return detail::xi_rhs(gs, none, u, alpha, true);
    });
    VectorField o = zero_vector(g1);
    o.v = u1;
    return vector_from_orthonormal(g1, o);
}

// ------------------------------------------------------------------ see-saw

enum class DriftPolicy { none, prescribed, evolve };

inline const char* drift_policy_name(DriftPolicy p) {
    switch (p) {
    case DriftPolicy::none: return "none";
    case DriftPolicy::prescribed: return "prescribed";
    case DriftPolicy::evolve: return "evolve";
    }
    return "?";
}

struct SeesawOptions {
    FlowMode metric_mode = FlowMode::scale_invariant; // plain or scale_invariant
    DriftPolicy drift = DriftPolicy::none;
};

// The initial state's density is read as a fixed measure (node masses): the
// same measure is imposed at the terminal time T0 and transported back to
// t = 0 by the Fokker-Planck equation in eta = T0 - t. With policy `prescribed`
// xi(eta) = grad_{g(eta)} psi0 + perp0 (coordinate components); with `evolve`
// xi starts from the initial drift at eta = 0 and follows its evolution equation.
inline Trajectory seesaw_solve(const FlowState& s0, double T0, double dt, const SeesawOptions& opt) {
    if (!(T0 > 0.0) || !(dt > 0.0)) throw StepSizeError("horizon and step must be positive");
    const double ratio = T0 / dt;
    const auto steps = static_cast<std::size_t>(std::llround(ratio));
    if (steps == 0 || std::abs(ratio - static_cast<double>(steps)) > 1e-9 * ratio)
        throw AlignmentError("horizon is not an integer number of steps");
    require_vector(s0.g, s0.drift.perp);
    require_scalar(s0.g, s0.drift.psi, "drift potential");
    if (opt.drift == DriftPolicy::evolve) detail::require_reflection_symmetric(s0.g, assemble(s0.g, s0.drift));

    Trajectory tr = integrate_rg2(s0, dt, steps, opt.metric_mode);
    const double alpha = tr.states.front().alpha;
    const auto lm0 = log_masses(s0.g, s0.density.f);
    const std::size_t last = tr.states.size() - 1;

    // xi at a given metric from the evolved orthonormal state
    auto xi_at = [&](const Geometry& g, const std::vector<double>& u) -> VectorField {
        switch (opt.drift) {
        case DriftPolicy::none: return zero_vector(g);
        case DriftPolicy::prescribed: return assemble(g, s0.drift);
        case DriftPolicy::evolve: {
            VectorField o = zero_vector(g);
            o.v = u;
            return vector_from_orthonormal(g, o);
        }
        }
        return zero_vector(g);
    };

    const std::size_t nq = lm0.size();
    std::vector<double> y = lm0;
    std::vector<double> u0;
    if (opt.drift == DriftPolicy::evolve) {
        u0 = vector_orthonormal(tr.states[last].g, assemble(s0.g, s0.drift)).v;
        y.insert(y.end(), u0.begin(), u0.end());
    }
    const ScalarField none(s0.g.nodes(), 0.0);

    auto record = [&](std::size_t k, const std::vector<double>& yy) {
        FlowState& st = tr.states[k];
        const std::vector<double> lm(yy.begin(), yy.begin() + static_cast<long>(nq));
        st.density.f = density_from_masses(st.g, lm);
        st.density.normalized = s0.density.normalized;
        st.alpha = alpha;
        switch (opt.drift) {
        case DriftPolicy::none: st.drift = {ScalarField(st.g.nodes(), 0.0), zero_vector(st.g)}; break;
        case DriftPolicy::prescribed: st.drift = s0.drift; break;
        case DriftPolicy::evolve: {
            const std::vector<double> u(yy.begin() + static_cast<long>(nq), yy.end());
            st.drift = helmholtz_otto(st.g, st.density.f, xi_at(st.g, u));
            break;
        }
        }
    };

    record(last, y);
    for (std::size_t k = last; k > 0; --k) {
        const Geometry& ga = tr.states[k].g;
        const Geometry& gb = tr.states[k - 1].g;
        const Geometry gm = detail::interpolate(ga, gb, 0.5);
        {
            const std::vector<double> lm(y.begin(), y.begin() + static_cast<long>(nq));
            const std::vector<double> u(y.begin() + static_cast<long>(nq), y.end());
            if (dt > detail::fp_step_bound(ga, density_from_masses(ga, lm), xi_at(ga, u)))
                throw StepSizeError("time step exceeds the Fokker-Planck stability bound");
        }
        y = rk4_step(y, dt, [&](double tau, const std::vector<double>& yy) {
            const Geometry& gs = tau == 0.0 ? ga : (tau == 1.0 ? gb : gm);
            const std::vector<double> lm(yy.begin(), yy.begin() + static_cast<long>(nq));
            const std::vector<double> u(yy.begin() + static_cast<long>(nq), yy.end());
            auto out = detail::fp_rhs(gs, lm, xi_at(gs, u));
            if (opt.drift == DriftPolicy::evolve) {
                const auto du = detail::xi_rhs(gs, none, u, alpha, true);
                out.insert(out.end(), du.begin(), du.end());
            }
            return out;
        });
        for (double v : y)
            if (!std::isfinite(v)) throw PositivityError("see-saw state became non-finite");
        record(k - 1, y);
    }
    tr.measure_resolved = true;
    if (opt.drift == DriftPolicy::evolve) tr.mode = FlowMode::seesaw;
    return tr;
}

// ---------------------------------------------------------------- DeTurck
//
// Pulled-back system with d omega frozen:
//   dg/dt  = -2 Ric_w - (alpha/2) Rm2 + L_xi g
//   dxi/dt = -Lap_w xi + xi * (Ric_w + alpha/4 Rm2(g,xi)) + (alpha^2/64)|Rm2(g,xi)|^2 xi
// State: metric coefficients followed by the orthonormal components of xi.

namespace detail {

inline std::vector<double> deturck_rhs(const Geometry& gref, const std::vector<double>& lm, double alpha,
                                       const std::vector<double>& y, std::size_t ncoef) {
    const std::vector<double> c(y.begin(), y.begin() + static_cast<long>(ncoef));
    const std::vector<double> u(y.begin() + static_cast<long>(ncoef), y.end());
    const Geometry g = with_metric_coefficients(gref, c);
    const ScalarField f = density_from_masses(g, lm);
    VectorField o = zero_vector(g);
    o.v = u;
    const VectorField xi = vector_from_orthonormal(g, o);
    const auto be = bakry_emery_ricci(g, f);
    const auto rm2 = curvature_package(g).rm2;
    auto v = tensor_combine(tensor_combine(be, -2.0, rm2, -0.5 * alpha), 1.0, lie_derivative_metric(g, xi), 1.0);
    auto out = tensor_as_coefficients(g, v);
    const auto du = xi_rhs(g, f, u, alpha, false);
    out.insert(out.end(), du.begin(), du.end());
    return out;
}

} // namespace detail

inline FlowState deturck_step(const FlowState& s, double dt) {
    require_coupling(s.alpha);
    const VectorField xi = assemble(s.g, s.drift);
    detail::require_reflection_symmetric(s.g, xi);
    const auto lm = log_masses(s.g, s.density.f);
    auto y = metric_coefficients(s.g);
    const std::size_t nc = y.size();
    const auto u = vector_orthonormal(s.g, xi).v;
    y.insert(y.end(), u.begin(), u.end());
    const auto next = rk4_step(y, dt, [&](double, const std::vector<double>& yy) {
        return detail::deturck_rhs(s.g, lm, s.alpha, yy, nc);
    });
    FlowState out = s;
    out.g = with_metric_coefficients(s.g, std::vector<double>(next.begin(), next.begin() + static_cast<long>(nc)));
    out.density.f = density_from_masses(out.g, lm);
    VectorField o = zero_vector(out.g);
    o.v.assign(next.begin() + static_cast<long>(nc), next.end());
    out.drift = helmholtz_otto(out.g, out.density.f, vector_from_orthonormal(out.g, o));
    out.t = s.t + dt;
    return out;
}

// alpha is alpha_g of the frozen measure.
inline Trajectory integrate_deturck(const FlowState& s0, double dt, std::size_t steps) {
    FlowState cur = s0;
    cur.alpha = alpha_g(s0.g, s0.density);
    if (!(dt > 0.0) || dt > rg2_step_bound(s0.g, cur.alpha)) throw StepSizeError("time step exceeds the stability bound");
    if (parabolicity_margin(s0.g, cur.alpha) <= 0.0) throw NotParabolic("initial data violate 1 + alpha K > 0");
    Trajectory tr;
    tr.mode = FlowMode::deturck;
    tr.dt = dt;
    tr.measure_resolved = true;
    tr.states.push_back(cur);
    const double u0 = std::sqrt(max_norm2(cur.g, assemble(cur.g, cur.drift)));
    for (std::size_t k = 0; k < steps; ++k) {
        const std::string why = detail::singularity_check(cur.g, cur.alpha, dt);
        if (!why.empty()) {
            tr.halted = true;
            tr.halt_reason = why;
            break;
        }
        std::optional<FlowState> next;
        try {
            next.emplace(deturck_step(cur, dt));
        } catch (const InvalidGeometry&) {
            tr.halted = true;
            tr.halt_reason = "metric degenerated";
            break;
        } catch (const PositivityError&) {
            tr.halted = true;
            tr.halt_reason = "blow-up (non-finite state)";
            break;
        }
        const double un = std::sqrt(max_norm2(next->g, assemble(next->g, next->drift)));
        if (!std::isfinite(un) || un > 1e3 * std::max(1.0, u0)) {
            tr.halted = true;
            tr.halt_reason = "blow-up of the drift field";
            break;
        }
        cur = std::move(*next);
        cur.t = s0.t + static_cast<double>(k + 1) * dt;
        tr.states.push_back(cur);
    }
    return tr;
}

// --------------------------------------------------------- scale symmetry

struct ScaleReport {
    double metric = 0.0;  // max relative deviation of g_lambda from lambda g
    double drift = 0.0;   // of xi_lambda from xi / lambda
    double measure = 0.0; // of d omega_lambda from lambda^{n/2} d omega
    std::size_t snapshots = 0;
};

inline ScaleReport verify_scale_symmetry(const Trajectory& a, double lambda, const Trajectory& b) {
    if (!std::isfinite(lambda) || lambda <= 0.0) throw InvalidScale("scale factor must be positive");
    if (a.states.size() != b.states.size()) throw AlignmentError("trajectories have different lengths");
    ScaleReport r;
    r.snapshots = a.states.size();
    for (std::size_t k = 0; k < a.states.size(); ++k) {
        const auto& sa = a.states[k];
        const auto& sb = b.states[k];
        if (std::abs(sb.t - lambda * sa.t) > 1e-12 * std::max(1.0, std::abs(lambda * sa.t)))
            throw AlignmentError("snapshot times are not related by the scale factor");
        const auto ca = metric_coefficients(sa.g), cb = metric_coefficients(sb.g);
        if (ca.size() != cb.size()) throw AlignmentError("geometries differ in resolution");
        for (std::size_t i = 0; i < ca.size(); ++i)
            r.metric = std::max(r.metric, std::abs(cb[i] - lambda * ca[i]) / std::abs(lambda * ca[i]));
        if (a.measure_resolved && b.measure_resolved) {
            const double n = sa.g.dim();
            const auto ma = measure_weights(sa.g, sa.density.f), mb = measure_weights(sb.g, sb.density.f);
            const double s = std::pow(lambda, 0.5 * n);
            for (std::size_t i = 0; i < ma.size(); ++i)
                r.measure = std::max(r.measure, std::abs(mb[i] - s * ma[i]) / (s * ma[i]));
            const auto xa = assemble(sa.g, sa.drift), xb = assemble(sb.g, sb.drift);
            double scale = 0.0, dev = 0.0;
            for (std::size_t i = 0; i < xa.v.size(); ++i) {
                scale = std::max(scale, std::abs(xa.v[i] / lambda));
                dev = std::max(dev, std::abs(xb.v[i] - xa.v[i] / lambda));
            }
            for (std::size_t i = 0; i < xa.theta.size(); ++i) {
                scale = std::max(scale, std::abs(xa.theta[i] / lambda));
                dev = std::max(dev, std::abs(xb.theta[i] - xa.theta[i] / lambda));
            }
            if (scale > 0.0) r.drift = std::max(r.drift, dev / scale);
            else r.drift = std::max(r.drift, dev);
        }
    }
    return r;
}

} // namespace rg2
