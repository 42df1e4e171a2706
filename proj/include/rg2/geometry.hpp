#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numbers>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "errors.hpp"
#include "fields.hpp"

namespace rg2 {

inline constexpr double pi = std::numbers::pi;

enum class GeometryClass { constant_curvature, homogeneous3, warped_torus };

inline const char* class_name(GeometryClass k) {
    switch (k) {
    case GeometryClass::constant_curvature: return "constant_curvature";
    case GeometryClass::homogeneous3: return "homogeneous3";
    case GeometryClass::warped_torus: return "warped_torus";
    }
    return "?";
}

// g = sigma * g0, where g0 has constant sectional curvature K.
struct ConstantCurvature {
    int n = 3;
    double K = 1.0;
    double sigma = 1.0;
    double base_volume = 0.0; // vol(g0)
};

// Left-invariant metric a e^1 (x) e^1 + b e^2 (x) e^2 + c e^3 (x) e^3 on a unimodular
// 3-dimensional group with [e2,e3] = l1 e1, [e3,e1] = l2 e2, [e1,e2] = l3 e3.
struct Homogeneous3 {
    std::array<double, 3> lambda{2.0, 2.0, 2.0};
    std::array<double, 3> a{1.0, 1.0, 1.0};
    double frame_volume = 0.0; // volume when a = b = c = 1
};

// rho(r)^2 dr^2 + phi(r)^2 dtheta^2 on [0,L) x [0,2pi), sampled at r_i = i L / N.
struct WarpedTorus {
    double length = 2.0 * pi;
    std::vector<double> rho;
    std::vector<double> phi;

    std::size_t size() const { return rho.size(); }
    double spacing() const { return length / static_cast<double>(rho.size()); }
    double node(std::size_t i) const { return spacing() * static_cast<double>(i); }
};

inline double unit_sphere_volume(int n) {
    return 2.0 * std::pow(pi, 0.5 * (n + 1)) / std::tgamma(0.5 * (n + 1));
}

class Geometry {
public:
    using Data = std::variant<ConstantCurvature, Homogeneous3, WarpedTorus>;

    explicit Geometry(ConstantCurvature c) : data_(std::move(c)) { validate(); }
    explicit Geometry(Homogeneous3 h) : data_(std::move(h)) { validate(); }
    explicit Geometry(WarpedTorus w) : data_(std::move(w)) { validate(); }

    GeometryClass kind() const { return static_cast<GeometryClass>(data_.index()); }
    bool is_frame() const { return kind() != GeometryClass::warped_torus; }

    int dim() const {
        if (auto* c = std::get_if<ConstantCurvature>(&data_)) return c->n;
        return kind() == GeometryClass::homogeneous3 ? 3 : 2;
    }
    std::size_t nodes() const {
        if (auto* w = std::get_if<WarpedTorus>(&data_)) return w->size();
        return 1;
    }

    const ConstantCurvature& cc() const { return get<ConstantCurvature>(); }
    const Homogeneous3& h3() const { return get<Homogeneous3>(); }
    const WarpedTorus& wt() const { return get<WarpedTorus>(); }
    const Data& data() const { return data_; }

private:
    template <class T>
    const T& get() const {
        if (auto* p = std::get_if<T>(&data_)) return *p;
        throw RepresentationError(std::string("geometry is ") + class_name(kind()));
    }

    void validate() const {
        auto finite_pos = [](double x) { return std::isfinite(x) && x > 0.0; };
        if (auto* c = std::get_if<ConstantCurvature>(&data_)) {
            if (c->n < 2) throw InvalidGeometry("dimension must be at least 2");
            if (!std::isfinite(c->K)) throw InvalidGeometry("curvature must be finite");
            if (!finite_pos(c->sigma)) throw InvalidGeometry("scale factor must be positive");
            if (!finite_pos(c->base_volume)) throw InvalidGeometry("reference volume must be positive");
        } else if (auto* h = std::get_if<Homogeneous3>(&data_)) {
            for (double x : h->a)
                if (!finite_pos(x)) throw InvalidGeometry("metric coefficients must be positive");
            for (double x : h->lambda)
                if (!std::isfinite(x)) throw InvalidGeometry("structure constants must be finite");
            if (!finite_pos(h->frame_volume)) throw InvalidGeometry("frame volume must be positive");
        } else {
            const auto& w = std::get<WarpedTorus>(data_);
            if (w.rho.size() < 16) throw ResolutionError("warped torus needs at least 16 nodes");
            if (w.phi.size() != w.rho.size()) throw InvalidGeometry("profile sizes differ");
            if (!finite_pos(w.length)) throw InvalidGeometry("period must be positive");
            for (std::size_t i = 0; i < w.rho.size(); ++i) {
                if (!std::isfinite(w.rho[i]) || !std::isfinite(w.phi[i]))
                    throw SamplingError("non-finite profile sample at node " + std::to_string(i));
                if (w.rho[i] <= 0.0 || w.phi[i] <= 0.0)
                    throw InvalidGeometry("profiles must be positive (node " + std::to_string(i) + ")");
            }
        }
    }

    Data data_;
};

// ---------------------------------------------------------------- builders

inline Geometry make_constant_curvature(int n, double K, double sigma = 1.0,
                                        std::optional<double> base_volume = std::nullopt) {
    ConstantCurvature c{n, K, sigma, 0.0};
    if (base_volume) {
        c.base_volume = *base_volume;
    } else if (K > 0.0 && n >= 2) {
        c.base_volume = unit_sphere_volume(n) * std::pow(K, -0.5 * n);
    } else {
        throw InvalidGeometry("non-positive curvature needs an explicit reference volume");
    }
    return Geometry(c);
}

inline Geometry make_homogeneous3(std::array<double, 3> lambda, std::array<double, 3> a,
                                  std::optional<double> frame_volume = std::nullopt) {
    Homogeneous3 h{lambda, a, 0.0};
    if (frame_volume) {
        h.frame_volume = *frame_volume;
    } else {
        const double p = lambda[0] * lambda[1] * lambda[2];
        const bool su2 = (lambda[0] > 0 && lambda[1] > 0 && lambda[2] > 0) ||
                         (lambda[0] < 0 && lambda[1] < 0 && lambda[2] < 0);
        if (!su2) throw InvalidGeometry("non-compact structure constants need an explicit frame volume");
        h.frame_volume = 16.0 * pi * pi / std::abs(p);
    }
    return Geometry(h);
}

inline Geometry make_warped_torus(double length, std::vector<double> rho, std::vector<double> phi) {
    return Geometry(WarpedTorus{length, std::move(rho), std::move(phi)});
}

inline Geometry make_warped_torus(double length, std::size_t n, const std::function<double(double)>& rho,
                                  const std::function<double(double)>& phi) {
    if (n < 16) throw ResolutionError("warped torus needs at least 16 nodes");
    std::vector<double> r(n), p(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double x = length * static_cast<double>(i) / static_cast<double>(n);
        r[i] = rho(x);
        p[i] = phi(x);
    }
    return make_warped_torus(length, std::move(r), std::move(p));
}

struct GeometrySpec {
    GeometryClass kind = GeometryClass::constant_curvature;
    int dim = 3;
    double curvature = 1.0;
    double scale = 1.0;
    std::optional<double> base_volume;
    std::array<double, 3> structure{2.0, 2.0, 2.0};
    std::array<double, 3> coeffs{1.0, 1.0, 1.0};
    std::optional<double> frame_volume;
    double length = 2.0 * pi;
    std::size_t nodes = 128;
    std::function<double(double)> rho = [](double) { return 1.0; };
    std::function<double(double)> phi = [](double) { return 1.0; };
};

inline Geometry build_geometry(const GeometrySpec& s) {
    switch (s.kind) {
    case GeometryClass::constant_curvature:
        return make_constant_curvature(s.dim, s.curvature, s.scale, s.base_volume);
    case GeometryClass::homogeneous3:
        return make_homogeneous3(s.structure, s.coeffs, s.frame_volume);
    case GeometryClass::warped_torus:
        return make_warped_torus(s.length, s.nodes, s.rho, s.phi);
    }
    throw InvalidGeometry("unknown geometry class");
}

inline Geometry rescale_metric(const Geometry& g, double lambda) {
    if (!std::isfinite(lambda) || lambda <= 0.0) throw InvalidScale("scale factor must be positive");
    switch (g.kind()) {
    case GeometryClass::constant_curvature: {
        auto c = g.cc();
        c.sigma *= lambda;
        return Geometry(c);
    }
    case GeometryClass::homogeneous3: {
        auto h = g.h3();
        for (double& x : h.a) x *= lambda;
        return Geometry(h);
    }
    case GeometryClass::warped_torus: {
        auto w = g.wt();
        const double s = std::sqrt(lambda);
        for (double& x : w.rho) x *= s;
        for (double& x : w.phi) x *= s;
        return Geometry(w);
    }
    }
    throw InvalidGeometry("unknown geometry class");
}

// ------------------------------------------------------- metric coefficients
//
// Flat coefficient vectors used by the integrators and the trajectory CSV:
// sigma | (a, b, c) | (g_rr at every node, g_thth at every node).

inline std::vector<double> metric_coefficients(const Geometry& g) {
    switch (g.kind()) {
    case GeometryClass::constant_curvature: return {g.cc().sigma};
    case GeometryClass::homogeneous3: return {g.h3().a[0], g.h3().a[1], g.h3().a[2]};
    case GeometryClass::warped_torus: {
        const auto& w = g.wt();
        std::vector<double> out(2 * w.size());
        for (std::size_t i = 0; i < w.size(); ++i) {
            out[i] = w.rho[i] * w.rho[i];
            out[w.size() + i] = w.phi[i] * w.phi[i];
        }
        return out;
    }
    }
    return {};
}

inline std::vector<std::string> metric_coefficient_names(const Geometry& g) {
    switch (g.kind()) {
    case GeometryClass::constant_curvature: return {"sigma"};
    case GeometryClass::homogeneous3: return {"a", "b", "c"};
    case GeometryClass::warped_torus: {
        const std::size_t n = g.nodes();
        std::vector<std::string> out;
        out.reserve(2 * n);
        for (std::size_t i = 0; i < n; ++i) out.push_back("g_rr_" + std::to_string(i));
        for (std::size_t i = 0; i < n; ++i) out.push_back("g_thth_" + std::to_string(i));
        return out;
    }
    }
    return {};
}

// Throws when a coefficient became non-positive; callers that want a halting
// diagnostic instead test coefficients before calling.
inline Geometry with_metric_coefficients(const Geometry& g, const std::vector<double>& x) {
    for (double v : x)
        if (!std::isfinite(v) || v <= 0.0) throw InvalidGeometry("metric degenerated");
    switch (g.kind()) {
    case GeometryClass::constant_curvature: {
        auto c = g.cc();
        c.sigma = x.at(0);
        return Geometry(c);
    }
    case GeometryClass::homogeneous3: {
        auto h = g.h3();
        h.a = {x.at(0), x.at(1), x.at(2)};
        return Geometry(h);
    }
    case GeometryClass::warped_torus: {
        auto w = g.wt();
        const std::size_t n = w.size();
        for (std::size_t i = 0; i < n; ++i) {
            w.rho[i] = std::sqrt(x.at(i));
            w.phi[i] = std::sqrt(x.at(n + i));
        }
        return Geometry(w);
    }
    }
    throw InvalidGeometry("unknown geometry class");
}

// ----------------------------------------------------------------- quadrature

// Riemannian volume weights: one entry per node (total volume for frame classes).
// On the torus node i owns the cell [r_{i-1/2}, r_{i+1/2}] x [0, 2pi).
struct QuadratureTable {
    std::vector<double> node;
    std::vector<double> half; // warped torus: dual cells centred at r_{i+1/2}
};

inline double volume(const Geometry& g) {
    switch (g.kind()) {
    case GeometryClass::constant_curvature: {
        const auto& c = g.cc();
        return std::pow(c.sigma, 0.5 * c.n) * c.base_volume;
    }
    case GeometryClass::homogeneous3: {
        const auto& h = g.h3();
        return std::sqrt(h.a[0] * h.a[1] * h.a[2]) * h.frame_volume;
    }
    case GeometryClass::warped_torus: {
        const auto& w = g.wt();
        double s = 0.0;
        for (std::size_t i = 0; i < w.size(); ++i) s += w.rho[i] * w.phi[i];
        return 2.0 * pi * w.spacing() * s;
    }
    }
    return 0.0;
}

inline QuadratureTable quadrature(const Geometry& g) {
    QuadratureTable q;
    if (g.is_frame()) {
        q.node = {volume(g)};
        return q;
    }
    const auto& w = g.wt();
    const std::size_t n = w.size();
    const double hh = 2.0 * pi * w.spacing();
    q.node.resize(n);
    q.half.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t j = (i + 1) % n;
        q.node[i] = hh * w.rho[i] * w.phi[i];
        q.half[i] = hh * 0.25 * (w.rho[i] + w.rho[j]) * (w.phi[i] + w.phi[j]);
    }
    return q;
}

} // namespace rg2
