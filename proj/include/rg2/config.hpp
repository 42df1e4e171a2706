#pragma once

// Scenario configuration: one TOML table per concern, unknown keys rejected.
// Needs toml++ (third_party/tomlplusplus) on the include path.

#ifndef TOML_EXCEPTIONS
#define TOML_EXCEPTIONS 1
#endif
#include <toml++/toml.hpp>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "errors.hpp"
#include "flow.hpp"
#include "geometry.hpp"

namespace rg2 {

// c + sum_k cos[k-1] cos(2 pi k r / L) + sin[k-1] sin(2 pi k r / L)
struct Profile {
    double constant = 0.0;
    std::vector<double> cos, sin;

    bool is_constant() const { return cos.empty() && sin.empty(); }
    double operator()(double r, double L) const {
        double v = constant;
        for (std::size_t k = 0; k < cos.size(); ++k) v += cos[k] * std::cos(2.0 * pi * (k + 1.0) * r / L);
        for (std::size_t k = 0; k < sin.size(); ++k) v += sin[k] * std::sin(2.0 * pi * (k + 1.0) * r / L);
        return v;
    }
};

struct GeometryConfig {
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
    Profile rho{1.0, {}, {}};
    Profile phi{1.0, {}, {}};
};

struct DensityConfig {
    Profile f;
    std::optional<double> target_alpha; // shifts f so that alpha_g takes this value
};

struct DriftConfig {
    std::optional<DriftPolicy> policy;
    Profile psi;
    Profile radial;             // warped torus: orthonormal radial component at half nodes
    double angular = 0.0;       // warped torus: coordinate xi^theta
    std::vector<double> frame;  // frame classes: class-specific components
    bool perp = true;           // keep the divergence-free part
    bool unit_max = false;      // rescale to max |xi|^2 = 1
};

struct VerifyConfig {
    std::vector<double> scaling;
    double scaling_tol = 1e-6;
    bool monotonicity = true;
    double tol_constant = 1.0;
    bool lambda_quotients = false;
    std::size_t lambda_stride = 1;
    bool harnack = false;
    double harnack_tol = 1e-10;
    double harnack_order = 1.9;
    bool eigen = false;
    double alpha_tol = 1e-6;
};

struct EigenConfig {
    std::size_t zonal_cells = 256;
    double tol = 1e-8;
    int max_sweeps = 20000;
    bool azimuthal = false;
    std::optional<double> reference;
    double reference_tol = 1e-4;
};

struct ScenarioConfig {
    std::string name;
    FlowMode mode = FlowMode::scale_invariant;
    std::optional<double> alpha;
    double dt = 1e-3;
    std::size_t steps = 10;
    std::optional<double> T0;
    std::size_t stride = 1;
    GeometryConfig geometry;
    DensityConfig density;
    DriftConfig drift;
    VerifyConfig verify;
    EigenConfig eigen;
    std::string source; // raw config text, echoed into the manifest
};

struct BatchConfig {
    std::vector<std::filesystem::path> scenarios;
    std::string command = "verify";
    std::size_t threads = 0; // 0: hardware concurrency
};

namespace detail {

// Table wrapper that remembers which keys were read; finish() rejects the rest.
class Keys {
public:
    Keys(const toml::table* t, std::string path) : t_(t), path_(std::move(path)) {}

    bool present() const { return t_ != nullptr; }
    const std::string& path() const { return path_; }
    std::string at(const std::string& k) const { return path_.empty() ? k : path_ + "." + k; }

    const toml::node* node(const std::string& k) {
        used_.insert(k);
        return t_ ? t_->get(k) : nullptr;
    }

    std::optional<double> number(const std::string& k) {
        const auto* n = node(k);
        if (!n) return std::nullopt;
        if (auto v = n->value_exact<double>()) return finite(k, *v);
        if (auto v = n->value_exact<std::int64_t>()) return static_cast<double>(*v);
        throw ConfigError(at(k) + ": expected a number");
    }
    double number(const std::string& k, double fallback) { return number(k).value_or(fallback); }

    std::optional<std::int64_t> integer(const std::string& k) {
        const auto* n = node(k);
        if (!n) return std::nullopt;
        if (auto v = n->value_exact<std::int64_t>()) return *v;
        throw ConfigError(at(k) + ": expected an integer");
    }
    std::size_t count(const std::string& k, std::size_t fallback, std::size_t lo) {
        const auto v = integer(k);
        if (!v) return fallback;
        if (*v < static_cast<std::int64_t>(lo)) throw ConfigError(at(k) + ": must be at least " + std::to_string(lo));
        return static_cast<std::size_t>(*v);
    }

    std::optional<bool> boolean(const std::string& k) {
        const auto* n = node(k);
        if (!n) return std::nullopt;
        if (auto v = n->value_exact<bool>()) return *v;
        throw ConfigError(at(k) + ": expected true or false");
    }

    std::optional<std::string> string(const std::string& k) {
        const auto* n = node(k);
        if (!n) return std::nullopt;
        if (auto v = n->value_exact<std::string>()) return *v;
        throw ConfigError(at(k) + ": expected a string");
    }

    std::optional<std::vector<double>> numbers(const std::string& k) {
        const auto* n = node(k);
        if (!n) return std::nullopt;
        const auto* a = n->as_array();
        if (!a) throw ConfigError(at(k) + ": expected an array of numbers");
        std::vector<double> out;
        for (std::size_t i = 0; i < a->size(); ++i) {
            const auto& e = *a->get(i);
            const std::string p = at(k) + "[" + std::to_string(i) + "]";
            if (auto v = e.value_exact<double>()) out.push_back(finite(p, *v));
            else if (auto w = e.value_exact<std::int64_t>()) out.push_back(static_cast<double>(*w));
            else throw ConfigError(p + ": expected a number");
        }
        return out;
    }

    std::optional<std::vector<std::string>> strings(const std::string& k) {
        const auto* n = node(k);
        if (!n) return std::nullopt;
        const auto* a = n->as_array();
        if (!a) throw ConfigError(at(k) + ": expected an array of strings");
        std::vector<std::string> out;
        for (std::size_t i = 0; i < a->size(); ++i) {
            auto v = a->get(i)->value_exact<std::string>();
            if (!v) throw ConfigError(at(k) + "[" + std::to_string(i) + "]: expected a string");
            out.push_back(*v);
        }
        return out;
    }

    // A profile is either a bare number or a table {constant, cos, sin}.
    std::optional<Profile> profile(const std::string& k) {
        const auto* n = node(k);
        if (!n) return std::nullopt;
        if (auto v = n->value_exact<double>()) return Profile{finite(k, *v), {}, {}};
        if (auto v = n->value_exact<std::int64_t>()) return Profile{static_cast<double>(*v), {}, {}};
        const auto* t = n->as_table();
        if (!t) throw ConfigError(at(k) + ": expected a number or a {constant, cos, sin} table");
        Keys s(t, at(k));
        Profile p;
        p.constant = s.number("constant", 0.0);
        p.cos = s.numbers("cos").value_or(std::vector<double>{});
        p.sin = s.numbers("sin").value_or(std::vector<double>{});
        s.finish();
        return p;
    }

    void finish() const {
        if (!t_) return;
        for (const auto& [k, v] : *t_) {
            const std::string key(k.str());
            if (!used_.count(key)) throw ConfigError(at(key) + ": unknown key");
        }
    }

private:
    double finite(const std::string& k, double v) const {
        if (!std::isfinite(v)) throw ConfigError(at(k) + ": must be finite");
        return v;
    }

    const toml::table* t_;
    std::string path_;
    std::set<std::string> used_;
};

inline const toml::table* subtable(const toml::table& root, const std::string& k) {
    const auto* n = root.get(k);
    if (!n) return nullptr;
    const auto* t = n->as_table();
    if (!t) throw ConfigError(k + ": expected a table");
    return t;
}

inline std::array<double, 3> triple(Keys& k, const std::string& key, std::array<double, 3> fallback) {
    const auto v = k.numbers(key);
    if (!v) return fallback;
    if (v->size() != 3) throw ConfigError(k.at(key) + ": expected three numbers");
    return {(*v)[0], (*v)[1], (*v)[2]};
}

inline FlowMode parse_mode(const std::string& s, const std::string& path) {
    if (s == "plain") return FlowMode::plain;
    if (s == "scale_invariant") return FlowMode::scale_invariant;
    if (s == "deturck") return FlowMode::deturck;
    if (s == "seesaw") return FlowMode::seesaw;
    throw ConfigError(path + ": unknown mode '" + s + "' (plain, scale_invariant, deturck, seesaw)");
}

inline DriftPolicy parse_policy(const std::string& s, const std::string& path) {
    if (s == "none") return DriftPolicy::none;
    if (s == "prescribed") return DriftPolicy::prescribed;
    if (s == "evolve") return DriftPolicy::evolve;
    throw ConfigError(path + ": unknown drift policy '" + s + "' (none, prescribed, evolve)");
}

inline GeometryConfig parse_geometry(Keys k) {
    if (!k.present()) throw ConfigError("geometry: missing table");
    GeometryConfig g;
    const auto cls = k.string("class");
    if (!cls) throw ConfigError("geometry.class: missing");
    if (*cls == "constant_curvature") {
        g.kind = GeometryClass::constant_curvature;
        const auto d = k.integer("dim").value_or(3);
        if (d < 2 || d > 64) throw ConfigError("geometry.dim: must be between 2 and 64");
        g.dim = static_cast<int>(d);
        g.curvature = k.number("curvature", 1.0);
        g.scale = k.number("scale", 1.0);
        g.base_volume = k.number("base_volume");
    } else if (*cls == "homogeneous3") {
        g.kind = GeometryClass::homogeneous3;
        g.structure = triple(k, "structure", g.structure);
        g.coeffs = triple(k, "coeffs", g.coeffs);
        g.frame_volume = k.number("frame_volume");
    } else if (*cls == "warped_torus") {
        g.kind = GeometryClass::warped_torus;
        g.length = k.number("length", 2.0 * pi);
        g.nodes = k.count("nodes", 128, 16);
        if (auto p = k.profile("rho")) g.rho = *p;
        if (auto p = k.profile("phi")) g.phi = *p;
    } else {
        throw ConfigError("geometry.class: unknown class '" + *cls +
                          "' (constant_curvature, homogeneous3, warped_torus)");
    }
    k.finish();
    return g;
}

} // namespace detail

inline ScenarioConfig parse_scenario(const std::string& text, const std::string& fallback_name = "scenario") {
    toml::table root;
    try {
        root = toml::parse(text);
    } catch (const toml::parse_error& e) {
        std::ostringstream os;
        os << "line " << e.source().begin.line << ": " << e.description();
        throw ConfigError(os.str());
    }
    for (const auto& [k, v] : root) {
        const std::string key(k.str());
        static const std::set<std::string> tables{"scenario", "geometry", "density", "drift", "verify", "eigen"};
        if (!tables.count(key)) throw ConfigError(key + ": unknown table");
    }
    using detail::Keys;
    ScenarioConfig c;
    c.source = text;

    Keys s(detail::subtable(root, "scenario"), "scenario");
    c.name = s.string("name").value_or(fallback_name);
    if (c.name.empty() || c.name.find_first_of("/\\") != std::string::npos || c.name == "." || c.name == "..")
        throw ConfigError("scenario.name: must be a plain file name");
    c.mode = detail::parse_mode(s.string("mode").value_or("scale_invariant"), "scenario.mode");
    c.alpha = s.number("alpha");
    c.dt = s.number("dt", 1e-3);
    c.steps = s.count("steps", 10, 1);
    c.T0 = s.number("T0");
    c.stride = s.count("stride", 1, 1);
    s.finish();
    if (!(c.dt > 0.0)) throw ConfigError("scenario.dt: must be positive");
    if (c.mode == FlowMode::plain && !c.alpha) throw ConfigError("scenario.alpha: plain mode needs an explicit coupling");
    if (c.mode != FlowMode::plain && c.alpha)
        throw ConfigError("scenario.alpha: only plain mode takes an explicit coupling (others use alpha_g)");
    if (c.alpha && !(*c.alpha > 0.0)) throw ConfigError("scenario.alpha: must be positive");
    if (c.T0) {
        if (c.mode == FlowMode::deturck) throw ConfigError("scenario.T0: DeTurck runs carry no terminal measure");
        const double span = c.dt * static_cast<double>(c.steps);
        if (span > *c.T0 * (1.0 + 1e-12)) throw ConfigError("scenario.T0: dt * steps exceeds T0");
        const double r = *c.T0 / c.dt;
        if (std::abs(r - std::round(r)) > 1e-9 * r) throw ConfigError("scenario.T0: not a multiple of dt");
    }

    c.geometry = detail::parse_geometry(Keys(detail::subtable(root, "geometry"), "geometry"));
    const bool torus = c.geometry.kind == GeometryClass::warped_torus;

    Keys d(detail::subtable(root, "density"), "density");
    if (auto p = d.profile("f")) c.density.f = *p;
    c.density.target_alpha = d.number("target_alpha");
    d.finish();
    if (!torus && !c.density.f.is_constant()) throw ConfigError("density.f: profiles need a warped torus");
    if (c.density.target_alpha && !(*c.density.target_alpha > 0.0))
        throw ConfigError("density.target_alpha: must be positive");

    Keys x(detail::subtable(root, "drift"), "drift");
    if (auto p = x.string("policy")) c.drift.policy = detail::parse_policy(*p, "drift.policy");
    if (auto p = x.profile("psi")) c.drift.psi = *p;
    if (auto p = x.profile("radial")) c.drift.radial = *p;
    c.drift.angular = x.number("angular", 0.0);
    c.drift.frame = x.numbers("frame").value_or(std::vector<double>{});
    c.drift.perp = x.boolean("perp").value_or(true);
    c.drift.unit_max = x.boolean("unit_max").value_or(false);
    x.finish();
    if (c.mode == FlowMode::deturck && c.drift.policy)
        throw ConfigError("drift.policy: DeTurck runs always evolve the drift");
    if (c.mode == FlowMode::seesaw && c.drift.policy && *c.drift.policy != DriftPolicy::evolve)
        throw ConfigError("drift.policy: seesaw mode evolves the drift");
    if (torus && !c.drift.frame.empty()) throw ConfigError("drift.frame: only for frame classes");
    if (!torus) {
        if (c.drift.psi.constant != 0.0 || !c.drift.psi.is_constant())
            throw ConfigError("drift.psi: frame classes carry no gradient part");
        if (c.drift.radial.constant != 0.0 || !c.drift.radial.is_constant() || c.drift.angular != 0.0)
            throw ConfigError("drift.radial: only for the warped torus");
        const std::size_t want = c.geometry.kind == GeometryClass::constant_curvature ? 1 : 3;
        if (!c.drift.frame.empty() && c.drift.frame.size() != want)
            throw ConfigError("drift.frame: expected " + std::to_string(want) + " components");
    }

    Keys v(detail::subtable(root, "verify"), "verify");
    c.verify.scaling = v.numbers("scaling").value_or(std::vector<double>{});
    for (double l : c.verify.scaling)
        if (!(l > 0.0)) throw ConfigError("verify.scaling: factors must be positive");
    c.verify.scaling_tol = v.number("scaling_tol", 1e-6);
    c.verify.monotonicity = v.boolean("monotonicity").value_or(true);
    c.verify.tol_constant = v.number("tol_constant", 1.0);
    c.verify.lambda_quotients = v.boolean("lambda_quotients").value_or(false);
    c.verify.lambda_stride = v.count("lambda_stride", 1, 1);
    c.verify.harnack = v.boolean("harnack").value_or(false);
    c.verify.harnack_tol = v.number("harnack_tol", 1e-10);
    c.verify.harnack_order = v.number("harnack_order", 1.9);
    c.verify.eigen = v.boolean("eigen").value_or(false);
    c.verify.alpha_tol = v.number("alpha_tol", 1e-6);
    v.finish();

    Keys e(detail::subtable(root, "eigen"), "eigen");
    c.eigen.zonal_cells = e.count("zonal_cells", 256, 16);
    c.eigen.tol = e.number("tol", 1e-8);
    c.eigen.max_sweeps = static_cast<int>(e.count("max_sweeps", 20000, 1));
    c.eigen.azimuthal = e.boolean("azimuthal").value_or(false);
    c.eigen.reference = e.number("reference");
    c.eigen.reference_tol = e.number("reference_tol", 1e-4);
    e.finish();
    return c;
}

inline std::string read_text(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw ConfigError(p.string() + ": cannot open");
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

inline ScenarioConfig load_scenario(const std::filesystem::path& p) {
    try {
        return parse_scenario(read_text(p), p.stem().string());
    } catch (const ConfigError& e) {
        throw ConfigError(p.string() + ": " + e.what());
    }
}

inline BatchConfig load_batch(const std::filesystem::path& p) {
    toml::table root;
    try {
        root = toml::parse(read_text(p));
    } catch (const toml::parse_error& e) {
        std::ostringstream os;
        os << p.string() << ": line " << e.source().begin.line << ": " << e.description();
        throw ConfigError(os.str());
    }
    for (const auto& [k, v] : root)
        if (k.str() != "batch") throw ConfigError(p.string() + ": " + std::string(k.str()) + ": unknown table");
    detail::Keys k(detail::subtable(root, "batch"), "batch");
    if (!k.present()) throw ConfigError(p.string() + ": batch: missing table");
    BatchConfig b;
    const auto list = k.strings("scenarios");
    if (!list || list->empty()) throw ConfigError(p.string() + ": batch.scenarios: need at least one path");
    for (const auto& s : *list) b.scenarios.push_back(p.parent_path() / s);
    b.command = k.string("command").value_or("verify");
    if (b.command != "flow" && b.command != "entropy" && b.command != "eigen" && b.command != "verify")
        throw ConfigError(p.string() + ": batch.command: one of flow, entropy, eigen, verify");
    b.threads = k.count("threads", 0, 0);
    k.finish();
    return b;
}

} // namespace rg2
