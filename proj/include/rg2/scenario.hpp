#pragma once

// Scenario runner behind the rg2lab CLI: builds the initial state from a
// config, runs the flow, evaluates the requested verifications and writes
// CSV / JSON / gnuplot files. Every output except run.log is a pure function
// of the config, so reruns are byte-identical.

#include <nlohmann/json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <thread>
#include <vector>

#include "config.hpp"
#include "rg2.hpp"

namespace rg2 {

inline constexpr const char* version = "1.0.0";

enum class Command { flow, entropy, eigen, verify };
enum class CheckLevel { fast, full };

inline const char* command_name(Command c) {
    switch (c) {
    case Command::flow: return "flow";
    case Command::entropy: return "entropy";
    case Command::eigen: return "eigen";
    case Command::verify: return "verify";
    }
    return "?";
}

inline Command parse_command(const std::string& s) {
    if (s == "flow") return Command::flow;
    if (s == "entropy") return Command::entropy;
    if (s == "eigen") return Command::eigen;
    if (s == "verify") return Command::verify;
    throw ConfigError("unknown command '" + s + "'");
}

struct Check {
    std::string name;
    bool pass = true;
    bool informational = false;
    double value = 0.0;
    double tolerance = 0.0;
    std::string detail;
};

struct Outcome {
    std::string scenario;
    std::vector<Check> checks;
    std::vector<Inequality> inequalities;
    bool halted = false;
    std::string halt_reason;
    std::vector<std::string> files;
    double wall_seconds = 0.0;

    bool pass() const {
        for (const auto& c : checks)
            if (!c.informational && !c.pass) return false;
        return true;
    }
};

// ------------------------------------------------------------- initial data

inline Geometry geometry_from(const GeometryConfig& c, std::size_t nodes = 0) {
    switch (c.kind) {
    case GeometryClass::constant_curvature:
        return make_constant_curvature(c.dim, c.curvature, c.scale, c.base_volume);
    case GeometryClass::homogeneous3: return make_homogeneous3(c.structure, c.coeffs, c.frame_volume);
    case GeometryClass::warped_torus: {
        const double L = c.length;
        return make_warped_torus(
            L, nodes ? nodes : c.nodes, [&](double r) { return c.rho(r, L); }, [&](double r) { return c.phi(r, L); });
    }
    }
    throw InvalidGeometry("unknown geometry class");
}

// lambda rescales the metric by lambda, keeps f and psi, and divides the
// coordinate components of the prescribed field by lambda. nodes overrides
// the torus resolution (refinement studies).
inline FlowState initial_state(const ScenarioConfig& c, double lambda = 1.0, std::size_t nodes = 0) {
    const Geometry g1 = geometry_from(c.geometry, nodes);
    const bool torus = g1.kind() == GeometryClass::warped_torus;
    const std::size_t n = g1.nodes();

    ScalarField f(n, c.density.f.constant);
    if (torus)
        for (std::size_t i = 0; i < n; ++i) f[i] = c.density.f(g1.wt().node(i), g1.wt().length);
    if (c.density.target_alpha) {
        const double m = total_mass(g1, f);
        const double shift = std::log(m) - 0.5 * g1.dim() * std::log(*c.density.target_alpha);
        for (double& x : f) x += shift;
    }

    VectorField x = zero_vector(g1);
    ScalarField psi(n, 0.0);
    if (torus) {
        const auto& w = g1.wt();
        for (std::size_t j = 0; j < n; ++j) {
            const double rh = w.node(j) + 0.5 * w.spacing();
            const double rho = 0.5 * (w.rho[j] + w.rho[(j + 1) % n]);
            x.v[j] = c.drift.radial(rh, w.length) / rho;
            x.theta[j] = c.drift.angular;
            psi[j] = c.drift.psi(w.node(j), w.length);
        }
        const auto grad = gradient(g1, psi);
        for (std::size_t j = 0; j < n; ++j) x.v[j] += grad.v[j];
    } else if (!c.drift.frame.empty()) {
        x.v = c.drift.frame;
    }
    if (c.drift.unit_max) {
        const double m = max_norm2(g1, x);
        if (m > 0.0) {
            const double s = 1.0 / std::sqrt(m);
            for (double& v : x.v) v *= s;
            for (double& v : x.theta) v *= s;
        }
    }

    const Geometry g = lambda == 1.0 ? g1 : rescale_metric(g1, lambda);
    for (double& v : x.v) v /= lambda;
    for (double& v : x.theta) v /= lambda;
    DriftField d = helmholtz_otto(g, f, x);
    if (!c.drift.perp) d.perp = zero_vector(g);

    FlowState s{g, DensityData{f, false}, d, 0.0, 1.0};
    s.alpha = c.alpha ? *c.alpha * lambda : alpha_g(g, f);
    return s;
}

inline DriftPolicy effective_policy(const ScenarioConfig& c) {
    if (c.mode == FlowMode::seesaw) return DriftPolicy::evolve;
    return c.drift.policy.value_or(DriftPolicy::none);
}

inline Trajectory run_trajectory(const ScenarioConfig& c, double lambda = 1.0, std::size_t nodes = 0) {
    FlowState s0 = initial_state(c, lambda, nodes);
    const double dt = c.dt * lambda;
    if (c.mode == FlowMode::deturck) return integrate_deturck(s0, dt, c.steps);
    SeesawOptions opt;
    opt.metric_mode = c.mode == FlowMode::plain ? FlowMode::plain : FlowMode::scale_invariant;
    opt.drift = effective_policy(c);
    if (opt.drift == DriftPolicy::none) s0.drift = {ScalarField(s0.g.nodes(), 0.0), zero_vector(s0.g)};
    const double T0 = c.T0.value_or(c.dt * static_cast<double>(c.steps)) * lambda;
    Trajectory tr = seesaw_solve(s0, T0, dt, opt);
    if (tr.states.size() > c.steps + 1) tr.states.erase(tr.states.begin() + static_cast<long>(c.steps + 1), tr.states.end());
    return tr;
}

// ---------------------------------------------------------------- formatting

inline std::string num(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

namespace detail {

inline nlohmann::ordered_json jnum(double x) {
    if (!std::isfinite(x)) return nullptr;
    return x;
}

inline nlohmann::ordered_json jarray(const std::vector<double>& v) {
    auto a = nlohmann::ordered_json::array();
    for (double x : v) a.push_back(jnum(x));
    return a;
}

class Writer {
public:
    Writer(const std::filesystem::path& dir, Outcome& out) : dir_(dir), out_(out) {}

    void text(const std::string& name, const std::string& body) {
        std::ofstream f(dir_ / name, std::ios::binary | std::ios::trunc);
        if (!f) throw Error("cannot write " + (dir_ / name).string());
        f << body;
        if (!f) throw Error("write failed for " + (dir_ / name).string());
        if (std::find(out_.files.begin(), out_.files.end(), name) == out_.files.end()) out_.files.push_back(name);
    }
    void json(const std::string& name, const nlohmann::ordered_json& j) { text(name, j.dump(2) + "\n"); }

private:
    std::filesystem::path dir_;
    Outcome& out_;
};

inline std::string join(const std::vector<std::string>& v, char sep) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) s += sep;
        s += v[i];
    }
    return s;
}

inline std::vector<std::size_t> rows(std::size_t n, std::size_t stride) {
    std::vector<std::size_t> r;
    for (std::size_t k = 0; k < n; k += stride) r.push_back(k);
    if (n && r.back() != n - 1) r.push_back(n - 1);
    return r;
}

inline std::string safe(std::string s) {
    for (char& ch : s)
        if (!std::isalnum(static_cast<unsigned char>(ch)) && ch != '_' && ch != '-') ch = '_';
    return s;
}

} // namespace detail

// ------------------------------------------------------------------ outputs

// Trajectory CSV: t, metric coefficients, alpha_g, margin, R_min, R_max,
// mass_residual, N, F, F_ext, F2. The mass residual is relative to t = 0.
inline void write_trajectory(detail::Writer& w, const Trajectory& tr, const std::vector<EntropyRecord>& rec,
                             std::size_t stride) {
    const auto& s0 = tr.states.front();
    const double m0 = total_mass(s0.g, s0.density.f);
    std::vector<std::string> head{"t"};
    for (auto& n : metric_coefficient_names(s0.g)) head.push_back(n);
    for (const char* n : {"alpha_g", "margin", "R_min", "R_max", "mass_residual", "N", "F", "F_ext", "F2"})
        head.push_back(n);
    std::string csv = detail::join(head, ',') + "\n";
    std::string dat = "# t alpha_g margin R_min R_max mass_residual N F F_ext F2\n";
    for (std::size_t k : detail::rows(tr.states.size(), stride)) {
        const auto& s = tr.states[k];
        const auto p = curvature_package(s.g);
        const auto [rmin, rmax] = std::minmax_element(p.scalar.begin(), p.scalar.end());
        std::vector<double> tail{alpha_g(s.g, s.density),
                                 1.0 + s.alpha * p.sectional_min,
                                 *rmin,
                                 *rmax,
                                 total_mass(s.g, s.density.f) / m0 - 1.0,
                                 rec[k].N,
                                 rec[k].F,
                                 rec[k].F_ext,
                                 rec[k].F2};
        std::vector<std::string> row{num(s.t)};
        for (double x : metric_coefficients(s.g)) row.push_back(num(x));
        std::vector<std::string> drow{num(s.t)};
        for (double x : tail) {
            row.push_back(num(x));
            drow.push_back(num(x));
        }
        csv += detail::join(row, ',') + "\n";
        dat += detail::join(drow, ' ') + "\n";
    }
    if (tr.halted) {
        csv += "# halted: " + tr.halt_reason + "\n";
        dat += "# halted: " + tr.halt_reason + "\n";
    }
    w.text("trajectory.csv", csv);
    w.text("trajectory.dat", dat);
}

inline void write_entropy(detail::Writer& w, const std::vector<EntropyRecord>& rec, std::size_t stride, bool halted) {
    std::string csv = "t,N,N_production,nash_gauge,F,F_ext,F2,F_ext_bound\n";
    std::string dat = "# t N N_production F F_ext F2 F_ext_bound\n";
    for (std::size_t k : detail::rows(rec.size(), stride)) {
        const auto& r = rec[k];
        csv += detail::join({num(r.t), num(r.N), num(r.N_production), r.nash_gauge ? "1" : "0", num(r.F),
                             num(r.F_ext), num(r.F2), num(r.rhs_bound)},
                            ',') +
               "\n";
        dat += detail::join({num(r.t), num(r.N), num(r.N_production), num(r.F), num(r.F_ext), num(r.F2),
                             num(r.rhs_bound)},
                            ' ') +
               "\n";
    }
    if (halted) {
        csv += "# halted\n";
        dat += "# halted\n";
    }
    w.text("entropy.csv", csv);
    w.text("entropy.dat", dat);
}

inline nlohmann::ordered_json inequality_json(const Inequality& q) {
    nlohmann::ordered_json j;
    j["name"] = q.name;
    j["informational"] = q.informational;
    j["times"] = detail::jarray(q.times);
    j["quotient"] = detail::jarray(q.quotient);
    j["bound"] = detail::jarray(q.bound);
    j["slack"] = detail::jarray(q.slack);
    j["tolerance"] = detail::jarray(q.tolerance);
    auto steps = nlohmann::ordered_json::array();
    for (bool b : q.step_pass) steps.push_back(b);
    j["step_pass"] = steps;
    j["pass"] = q.pass;
    return j;
}

inline void write_report(detail::Writer& w, const ScenarioConfig& c, Command cmd, CheckLevel level, const Outcome& o) {
    nlohmann::ordered_json j;
    j["scenario"] = c.name;
    j["command"] = command_name(cmd);
    j["check_level"] = level == CheckLevel::fast ? "fast" : "full";
    j["pass"] = o.pass();
    j["halted"] = o.halted;
    j["halt_reason"] = o.halt_reason;
    auto checks = nlohmann::ordered_json::array();
    for (const auto& k : o.checks) {
        nlohmann::ordered_json e;
        e["name"] = k.name;
        e["pass"] = k.pass;
        e["informational"] = k.informational;
        e["value"] = detail::jnum(k.value);
        e["tolerance"] = detail::jnum(k.tolerance);
        e["detail"] = k.detail;
        checks.push_back(e);
    }
    j["checks"] = checks;
    auto ineq = nlohmann::ordered_json::array();
    for (const auto& q : o.inequalities) ineq.push_back(inequality_json(q));
    j["inequalities"] = ineq;
    w.json("report.json", j);

    std::string csv = "t,inequality,quotient,bound,slack,tolerance,pass\n";
    for (const auto& q : o.inequalities) {
        std::string dat = "# " + q.name + ": t quotient bound slack tolerance\n";
        for (std::size_t k = 0; k < q.times.size(); ++k) {
            csv += detail::join({num(q.times[k]), q.name, num(q.quotient[k]), num(q.bound[k]), num(q.slack[k]),
                                 num(q.tolerance[k]), q.step_pass[k] ? "1" : "0"},
                                ',') +
                   "\n";
            dat += detail::join({num(q.times[k]), num(q.quotient[k]), num(q.bound[k]), num(q.slack[k]),
                                 num(q.tolerance[k])},
                                ' ') +
                   "\n";
        }
        w.text("inequality_" + detail::safe(q.name) + ".dat", dat);
    }
    w.text("report.csv", csv);
}

// -------------------------------------------------------------- verifications

namespace detail {

inline Check make_check(std::string name, double value, double tol, bool pass, std::string what = {}) {
    Check k;
    k.name = std::move(name);
    k.value = value;
    k.tolerance = tol;
    k.pass = pass;
    k.detail = std::move(what);
    return k;
}

inline Check info(std::string name, double value, std::string what) {
    Check k = make_check(std::move(name), value, 0.0, true, std::move(what));
    k.informational = true;
    return k;
}

inline void conservation_checks(const ScenarioConfig& c, const Trajectory& tr, Outcome& o) {
    const auto& s0 = tr.states.front();
    const double a0 = alpha_g(s0.g, s0.density);
    double drift = 0.0, margin = std::numeric_limits<double>::infinity();
    for (const auto& s : tr.states) {
        drift = std::max(drift, std::abs(alpha_g(s.g, s.density) / a0 - 1.0));
        margin = std::min(margin, parabolicity_margin(s.g, s.alpha));
    }
    o.checks.push_back(make_check("alpha_g_drift", drift, c.verify.alpha_tol, drift < c.verify.alpha_tol,
                                  "max relative change of alpha_g along the run"));
    o.checks.push_back(make_check("parabolicity_margin", margin, 0.0, margin > 0.0, "min of 1 + alpha K over the run"));
    if (tr.halted) o.checks.push_back(info("halted", static_cast<double>(tr.states.size() - 1), tr.halt_reason));
}

inline void scaling_checks(const ScenarioConfig& c, const Trajectory& base, Outcome& o) {
    const auto s0 = initial_state(c);
    const bool moving_drift = (c.mode == FlowMode::deturck || effective_policy(c) == DriftPolicy::evolve) &&
                              !detail::drift_vanishes(s0.g, s0.drift);
    for (double lam : c.verify.scaling) {
        const std::string tag = "scaling_" + num(lam);
        try {
            const Trajectory tr = run_trajectory(c, lam);
            const ScaleReport r = verify_scale_symmetry(base, lam, tr);
            const double tol = c.verify.scaling_tol;
            Check m = make_check(tag + "_metric", r.metric, tol, r.metric < tol);
            Check w = make_check(tag + "_measure", r.measure, tol, r.measure < tol);
            Check x = make_check(tag + "_drift", r.drift, tol, r.drift < tol);
            if (moving_drift) {
                const char* why = "the drift equation carries a term that is not scale covariant";
                m.informational = w.informational = x.informational = true;
                m.detail = w.detail = x.detail = why;
            }
            o.checks.push_back(m);
            o.checks.push_back(w);
            o.checks.push_back(x);
        } catch (const Error& e) {
            o.checks.push_back(make_check(tag, std::nan(""), c.verify.scaling_tol, false, e.what()));
        }
    }
}

inline void harnack_checks(const ScenarioConfig& c, Outcome& o) {
    const auto s = initial_state(c);
    const double r = divdiv_riemann(s.g, s.density.f).max_residual;
    if (s.g.is_frame() || r <= c.verify.harnack_tol) {
        o.checks.push_back(make_check("harnack_residual", r, c.verify.harnack_tol, r <= c.verify.harnack_tol));
        return;
    }
    const std::size_t coarse = s.g.nodes() / 2;
    if (coarse < 16) {
        o.checks.push_back(make_check("harnack_order", std::nan(""), c.verify.harnack_order, false,
                                      "resolution too small for a refinement pair"));
        return;
    }
    const auto sc = initial_state(c, 1.0, coarse);
    const double rc = divdiv_riemann(sc.g, sc.density.f).max_residual;
    const double order = std::log2(rc / r);
    o.checks.push_back(info("harnack_residual", r, "nonzero on the torus grid; checked through its order"));
    o.checks.push_back(make_check("harnack_order", order, c.verify.harnack_order, order >= c.verify.harnack_order,
                                  "log2 of the residual ratio between N/2 and N"));
}

} // namespace detail

inline nlohmann::ordered_json eigen_checks(const ScenarioConfig& c, CheckLevel level, Outcome& o,
                                           std::string* dat = nullptr) {
    using detail::make_check;
    const auto s = initial_state(c);
    const double n = s.g.dim();
    const double A = std::pow(s.alpha, 0.5 * n);
    nlohmann::ordered_json j;
    j["alpha"] = s.alpha;
    j["A"] = A;
    const auto lam = perelman_lambda(s.g, s.alpha, c.eigen.zonal_cells);
    j["perelman_lambda"] = lam.lambda;
    try {
        const auto l2 = weighted_lambda2(s.g, s.density.f, c.eigen.azimuthal, c.eigen.zonal_cells);
        j["weighted_lambda2"] = l2.lambda;
    } catch (const UnsupportedCase& e) {
        j["weighted_lambda2"] = nullptr;
        o.checks.push_back(detail::info("weighted_lambda2", std::nan(""), e.what()));
    }
    LambdaOptions opt;
    opt.tol = c.eigen.tol;
    opt.max_sweeps = c.eigen.max_sweeps;
    opt.zonal_cells = c.eigen.zonal_cells;
    EigenResult e;
    try {
        e = capital_lambda(s.g, s.alpha, opt);
    } catch (const UnsupportedCase& ex) {
        j["capital_lambda"] = nullptr;
        o.checks.push_back(detail::info("capital_lambda", std::nan(""), ex.what()));
        return j;
    }
    nlohmann::ordered_json r;
    r["lambda1"] = e.lambda1;
    r["lambda2"] = e.lambda2;
    r["Lambda"] = e.Lambda;
    r["objective"] = e.objective;
    r["residual_h"] = e.residual_h;
    r["residual_psi"] = e.residual_psi;
    r["constraint_mass"] = e.constraint_mass;
    r["constraint_mean"] = e.constraint_mean;
    r["constraint_norm"] = e.constraint_norm;
    r["sweeps"] = e.sweeps;
    r["objective_log"] = detail::jarray(e.objective_log);
    j["capital_lambda"] = r;

    const double tol = c.eigen.tol;
    const double cons = std::max({e.constraint_mass, e.constraint_mean, e.constraint_norm});
    o.checks.push_back(make_check("eigen_constraints", cons, tol, cons < tol, "max Gamma constraint violation"));
    o.checks.push_back(make_check("eigen_residual_h", e.residual_h, tol, e.residual_h < tol));
    o.checks.push_back(make_check("eigen_residual_psi", e.residual_psi, tol, e.residual_psi < tol));
    const double eq = std::abs(e.objective - A * (e.lambda1 + e.lambda2)) / std::max(1.0, std::abs(e.Lambda));
    o.checks.push_back(make_check("eigen_equality", eq, tol, eq < tol, "objective vs A (lambda1 + lambda2)"));
    const double dom = e.Lambda - A * lam.lambda;
    o.checks.push_back(make_check("eigen_dominates_perelman", dom, 0.0, dom >= -1e-10 * std::max(1.0, std::abs(e.Lambda)),
                                  "Lambda - A lambda"));
    if (level == CheckLevel::full) {
        try {
            const auto fc = futaki_check(s.g, s.alpha, e, c.eigen.zonal_cells);
            nlohmann::ordered_json fj;
            fj["C0_constant"] = detail::jnum(fc.C0_constant);
            fj["C0_certified"] = detail::jnum(fc.C0_certified);
            fj["diameter"] = fc.diam;
            fj["bound"] = fc.bound;
            fj["lhs"] = fc.lhs;
            fj["rhs"] = fc.rhs;
            fj["pass"] = fc.pass;
            j["futaki"] = fj;
            o.checks.push_back(make_check("futaki", fc.lhs - fc.rhs, 0.0, fc.pass, "Lambda - (A lambda + bound)"));
        } catch (const UnsupportedCase& ex) {
            j["futaki"] = nullptr;
            o.checks.push_back(detail::info("futaki", std::nan(""), ex.what()));
        }
    }
    if (c.eigen.reference) {
        const double rel = std::abs(e.Lambda - *c.eigen.reference) / std::abs(*c.eigen.reference);
        j["reference"] = *c.eigen.reference;
        o.checks.push_back(make_check("eigen_reference", rel, c.eigen.reference_tol, rel < c.eigen.reference_tol,
                                      "relative distance to the reference Lambda"));
    }
    if (dat) {
        *dat = "# coord h psi mu\n";
        for (std::size_t i = 0; i < e.h.size(); ++i)
            *dat += detail::join({num(e.coord[i]), num(e.h[i]), num(e.psi[i]), num(e.mu[i])}, ' ') + "\n";
    }
    return j;
}

// ------------------------------------------------------------------ runner

namespace detail {

inline nlohmann::ordered_json manifest(const ScenarioConfig& c, Command cmd, CheckLevel level, const Outcome& o,
                                       const std::string& error) {
    nlohmann::ordered_json j;
    j["program"] = "rg2lab";
    j["version"] = version;
    j["scenario"] = c.name;
    j["command"] = command_name(cmd);
    j["check_level"] = level == CheckLevel::fast ? "fast" : "full";
    nlohmann::ordered_json lib;
    lib["eigen"] = std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                   std::to_string(EIGEN_MINOR_VERSION);
    lib["tomlplusplus"] = std::to_string(TOML_LIB_MAJOR) + "." + std::to_string(TOML_LIB_MINOR) + "." +
                          std::to_string(TOML_LIB_PATCH);
    lib["nlohmann_json"] = std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                           std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                           std::to_string(NLOHMANN_JSON_VERSION_PATCH);
#if defined(__VERSION__)
    lib["compiler"] = __VERSION__;
#endif
    j["versions"] = lib;
    j["status"] = error.empty() ? (o.pass() ? "pass" : "fail") : "error";
    if (!error.empty()) j["error"] = error;
    j["halted"] = o.halted;
    j["halt_reason"] = o.halt_reason;
    auto files = nlohmann::ordered_json::array();
    for (const auto& f : o.files) files.push_back(f);
    j["outputs"] = files;
    j["config"] = c.source;
    return j;
}

} // namespace detail

// Runs one scenario into `dir`. Throws (after writing the manifest) on
// runtime errors; verification failures are reported through Outcome::pass().
inline Outcome run_scenario(const ScenarioConfig& c, Command cmd, CheckLevel level, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    Outcome o;
    o.scenario = c.name;
    detail::Writer w(dir, o);
    const auto t0 = std::chrono::steady_clock::now();
    std::string error;
    try {
        if (cmd == Command::eigen || (cmd == Command::verify && c.verify.eigen && level == CheckLevel::full)) {
            std::string dat;
            auto j = eigen_checks(c, level, o, &dat);
            j["scenario"] = c.name;
            w.json("eigen.json", j);
            if (!dat.empty()) w.text("eigen.dat", dat);
        }
        if (cmd != Command::eigen) {
            const Trajectory tr = run_trajectory(c);
            o.halted = tr.halted;
            o.halt_reason = tr.halt_reason;
            std::vector<EntropyRecord> rec;
            rec.reserve(tr.states.size());
            for (const auto& s : tr.states) rec.push_back(entropy_record(s));
            write_trajectory(w, tr, rec, c.stride);
            detail::conservation_checks(c, tr, o);
            if (cmd == Command::entropy || cmd == Command::verify) {
                write_entropy(w, rec, c.stride, tr.halted);
                if (c.verify.monotonicity || cmd == Command::entropy) {
                    ReportOptions ro;
                    ro.tol_constant = c.verify.tol_constant;
                    ro.lambda = c.verify.lambda_quotients && level == CheckLevel::full;
                    ro.lambda_stride = c.verify.lambda_stride;
                    ro.lambda_options.zonal_cells = c.eigen.zonal_cells;
                    ro.lambda_options.tol = c.eigen.tol;
                    ro.lambda_options.max_sweeps = c.eigen.max_sweeps;
                    const auto rep = monotonicity_report(tr, ro);
                    o.inequalities = rep.inequalities;
                    if (rep.inequalities.empty())
                        o.checks.push_back(detail::info("monotonicity", std::nan(""),
                                                        "no inequality applies: Nash needs xi = 0, "
                                                        "extended F needs a DeTurck run"));
                    for (const auto& q : rep.inequalities) {
                        double worst = std::numeric_limits<double>::infinity();
                        for (double s : q.slack) worst = std::min(worst, s);
                        Check k = detail::make_check("monotonicity_" + q.name, worst, 0.0, q.pass,
                                                     "smallest slack (quotient - bound)");
                        k.informational = q.informational;
                        o.checks.push_back(k);
                    }
                }
            }
            if (cmd == Command::verify) {
                detail::scaling_checks(c, tr, o);
                if (c.verify.harnack) detail::harnack_checks(c, o);
            }
        }
        write_report(w, c, cmd, level, o);
    } catch (const Error& e) {
        error = std::string(e.kind()) + ": " + e.what();
    } catch (const std::exception& e) {
        error = std::string("error: ") + e.what();
    }
    o.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    w.json("manifest.json", detail::manifest(c, cmd, level, o, error));
    {
        std::ofstream log(dir / "run.log", std::ios::trunc);
        log << "scenario " << c.name << " command " << command_name(cmd) << "\n";
        log << "wall_seconds " << o.wall_seconds << "\n";
        if (o.halted) log << "halted " << o.halt_reason << "\n";
        for (const auto& k : o.checks)
            log << (k.informational ? "info " : (k.pass ? "pass " : "FAIL ")) << k.name << " " << num(k.value) << "\n";
        if (!error.empty()) log << "error " << error << "\n";
    }
    if (!error.empty()) throw Error("scenario " + c.name + ": " + error);
    return o;
}

// ------------------------------------------------------------------- batch

struct BatchResult {
    std::vector<std::string> lines; // one summary line per scenario, in config order
    int exit_code = 0;
};

// One scenario per worker, each writing into dir / <name>.
inline BatchResult run_batch(const BatchConfig& b, CheckLevel level, const std::filesystem::path& dir) {
    std::vector<ScenarioConfig> configs;
    for (const auto& p : b.scenarios) configs.push_back(load_scenario(p));
    for (std::size_t i = 0; i < configs.size(); ++i)
        for (std::size_t k = 0; k < i; ++k)
            if (configs[i].name == configs[k].name)
                throw ConfigError("batch: two scenarios are named '" + configs[i].name + "'");
    const Command cmd = parse_command(b.command);
    std::vector<int> codes(configs.size(), 0);
    std::vector<std::string> lines(configs.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < configs.size(); i = next++) {
            try {
                const auto o = run_scenario(configs[i], cmd, level, dir / configs[i].name);
                codes[i] = o.pass() ? 0 : 2;
                lines[i] = configs[i].name + (o.pass() ? ": pass" : ": FAIL");
            } catch (const std::exception& e) {
                codes[i] = 1;
                lines[i] = configs[i].name + ": error: " + e.what();
            }
        }
    };
    std::size_t nt = b.threads ? b.threads : std::max(1u, std::thread::hardware_concurrency());
    nt = std::min(nt, configs.size());
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < nt; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();

    BatchResult r;
    r.lines = lines;
    nlohmann::ordered_json j;
    j["command"] = b.command;
    auto arr = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < configs.size(); ++i) {
        nlohmann::ordered_json e;
        e["scenario"] = configs[i].name;
        e["status"] = codes[i] == 0 ? "pass" : (codes[i] == 2 ? "fail" : "error");
        arr.push_back(e);
        if (codes[i] == 1) r.exit_code = 1;
        else if (codes[i] == 2 && r.exit_code == 0) r.exit_code = 2;
    }
    j["scenarios"] = arr;
    std::filesystem::create_directories(dir);
    std::ofstream(dir / "batch.json", std::ios::binary | std::ios::trunc) << j.dump(2) << "\n";
    return r;
}

} // namespace rg2
