#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "persol/common.hpp"
#include "persol/fields.hpp"
#include "persol/solver.hpp"
#include "persol/weights.hpp"

namespace persol {

using json = nlohmann::ordered_json;

namespace detail {

// Strict object reader: every key must be consumed, unknown keys are errors.
class ObjReader {
 public:
    ObjReader(json j, std::string path) : j_(std::move(j)), path_(std::move(path)) {
        if (!j_.is_object()) throw ConfigError(path_ + ": expected an object");
    }

    bool has(const std::string& key) { return j_.contains(key); }

    template <class T>
    T get(const std::string& key, T fallback) {
        seen_.insert(key);
        if (!j_.contains(key)) return fallback;
        return coerce<T>(j_.at(key), path_ + "." + key);
    }

    template <class T>
    T require(const std::string& key) {
        seen_.insert(key);
        if (!j_.contains(key)) throw ConfigError(path_ + ": missing required key '" + key + "'");
        return coerce<T>(j_.at(key), path_ + "." + key);
    }

    json child(const std::string& key) {
        seen_.insert(key);
        return j_.contains(key) ? j_.at(key) : json::object();
    }

    void done() {
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (!seen_.count(it.key()))
                throw ConfigError(path_ + ": unknown key '" + it.key() + "'");
    }

 private:
    template <class T>
    static T coerce(const json& v, const std::string& where) {
        try {
            return v.get<T>();
        } catch (const std::exception&) {
            throw ConfigError(where + ": wrong type");
        }
    }

    json j_;
    std::string path_;
    std::set<std::string> seen_;
};

}  // namespace detail

struct HSpec {
    std::string family = "identity";
    double alpha = 3;        // power
    double p = 3, q = 2;     // p_laplacian / pq_laplacian
    double p0 = 3, p_amp = 1, phase = 0;  // pt_laplacian
};

struct GSpec {
    std::string family = "power";
    double beta = 3;         // power
    double c0 = 1.5, c1 = 1.0;  // power_mod
};

struct SystemConfig {
    HSpec h;
    GSpec g;
    WeightSpec weight;
    double lambda = 1.0;
    double period = 1.0;
};

struct CheckConfig {
    std::vector<double> k_list;  // empty: defaults derived from the weight
    int grid_mult = 1;
    std::vector<std::string> require;
};

struct ThresholdsConfig {
    std::string mode = "lambda_star";  // or "R_of_lambda"
    double R = 1.0;
    double r0_probe = 1e-2;
    bool probe_r0 = false;  // refine r0_probe by sampling the theta-homotopy
};

struct DegreeConfig {
    bool ledger = true;
    double r0 = 1e-2;
    double cap = 1e6;
    int max_points = 4096;
    double box_cu = 0, box_cv = 0, box_ru = 0, box_rv = 0;  // explicit box (ru > 0 enables)
    std::string field = "poincare";                          // or "averaged"
    double R_for_thresholds = 1.0;
};

struct SolveConfig {
    MultistartGrid grid;
};

struct ContinueConfig {
    double lambda_from = 50.0;
    double lambda_to = 200.0;
};

struct PeriodMapConfig {
    double A = 1, B = 1, alpha = 1, beta = 3;
    std::vector<double> energies{0.25};
};

struct ProbeConfig {
    double r = 1e-3;
    std::vector<double> theta_grid{0.25, 0.5, 0.75, 1.0};
    int starts = 36;
};

struct RunConfig {
    double tol = 1e-9;
    std::uint64_t seed = 20221107;
    CheckConfig check;
    ThresholdsConfig thresholds;
    DegreeConfig degree;
    SolveConfig solve;
    ContinueConfig cont;
    PeriodMapConfig period_map;
    ProbeConfig probe;
};

struct OutputConfig {
    std::string dir = ".";
    bool csv = false;
};

struct Config {
    SystemConfig system;
    RunConfig run;
    OutputConfig output;
};

// ---------------------------------------------------------------------------
// Parsing (strict: unknown keys are errors)
// ---------------------------------------------------------------------------

inline Config parse_config(const json& root) {
    Config cfg;
    detail::ObjReader top(root, "config");

    {
        detail::ObjReader sys(top.child("system"), "system");
        cfg.system.period = sys.get<double>("period", 1.0);
        if (!(cfg.system.period > 0)) throw ConfigError("system.period: must be positive");
        {
            detail::ObjReader h(sys.child("h"), "system.h");
            cfg.system.h.family = h.get<std::string>("family", "identity");
            cfg.system.h.alpha = h.get<double>("alpha", 3.0);
            cfg.system.h.p = h.get<double>("p", 3.0);
            cfg.system.h.q = h.get<double>("q", 2.0);
            cfg.system.h.p0 = h.get<double>("p0", 3.0);
            cfg.system.h.p_amp = h.get<double>("p_amp", 1.0);
            cfg.system.h.phase = h.get<double>("phase", 0.0);
            h.done();
        }
        {
            detail::ObjReader g(sys.child("g"), "system.g");
            cfg.system.g.family = g.get<std::string>("family", "power");
            cfg.system.g.beta = g.get<double>("beta", 3.0);
            cfg.system.g.c0 = g.get<double>("c0", 1.5);
            cfg.system.g.c1 = g.get<double>("c1", 1.0);
            g.done();
        }
        {
            detail::ObjReader w(sys.child("weight"), "system.weight");
            cfg.system.weight.family = w.get<std::string>("family", "sine");
            cfg.system.weight.period = cfg.system.period;
            cfg.system.weight.offset = w.get<double>("offset", -0.3);
            cfg.system.weight.amplitude = w.get<double>("amplitude", 1.0);
            cfg.system.weight.phase = w.get<double>("phase", 0.0);
            cfg.system.weight.value = w.get<double>("value", -1.0);
            cfg.system.weight.breaks = w.get<std::vector<double>>("breaks", {});
            cfg.system.weight.values = w.get<std::vector<double>>("values", {});
            cfg.system.weight.ts = w.get<std::vector<double>>("ts", {});
            w.done();
        }
        cfg.system.lambda = sys.get<double>("lambda", 1.0);
        if (!(cfg.system.lambda > 0)) throw ConfigError("system.lambda: must be positive");
        sys.done();
    }

    {
        detail::ObjReader run(top.child("run"), "run");
        cfg.run.tol = run.get<double>("tol", 1e-9);
        cfg.run.seed = run.get<std::uint64_t>("seed", 20221107ull);
        {
            detail::ObjReader c(run.child("check"), "run.check");
            cfg.run.check.k_list = c.get<std::vector<double>>("k_list", {});
            cfg.run.check.grid_mult = c.get<int>("grid_mult", 1);
            cfg.run.check.require = c.get<std::vector<std::string>>("require", {});
            c.done();
        }
        {
            detail::ObjReader t(run.child("thresholds"), "run.thresholds");
            cfg.run.thresholds.mode = t.get<std::string>("mode", "lambda_star");
            cfg.run.thresholds.R = t.get<double>("R", 1.0);
            cfg.run.thresholds.r0_probe = t.get<double>("r0_probe", 1e-2);
            cfg.run.thresholds.probe_r0 = t.get<bool>("probe_r0", false);
            t.done();
        }
        {
            detail::ObjReader d(run.child("degree"), "run.degree");
            cfg.run.degree.ledger = d.get<bool>("ledger", true);
            cfg.run.degree.r0 = d.get<double>("r0", 1e-2);
            cfg.run.degree.cap = d.get<double>("cap", 1e6);
            cfg.run.degree.max_points = d.get<int>("max_points", 4096);
            cfg.run.degree.box_cu = d.get<double>("box_cu", 0.0);
            cfg.run.degree.box_cv = d.get<double>("box_cv", 0.0);
            cfg.run.degree.box_ru = d.get<double>("box_ru", 0.0);
            cfg.run.degree.box_rv = d.get<double>("box_rv", 0.0);
            cfg.run.degree.field = d.get<std::string>("field", "poincare");
            cfg.run.degree.R_for_thresholds = d.get<double>("R_for_thresholds", 1.0);
            d.done();
        }
        {
            detail::ObjReader s(run.child("solve"), "run.solve");
            cfg.run.solve.grid.u_lo = s.get<double>("u_lo", 0.0);
            cfg.run.solve.grid.u_hi = s.get<double>("u_hi", 2.0);
            cfg.run.solve.grid.v_lo = s.get<double>("v_lo", -2.0);
            cfg.run.solve.grid.v_hi = s.get<double>("v_hi", 2.0);
            cfg.run.solve.grid.nu = s.get<int>("nu", 16);
            cfg.run.solve.grid.nv = s.get<int>("nv", 16);
            s.done();
        }
        {
            detail::ObjReader c(run.child("continue"), "run.continue");
            cfg.run.cont.lambda_from = c.get<double>("lambda_from", 50.0);
            cfg.run.cont.lambda_to = c.get<double>("lambda_to", 200.0);
            c.done();
        }
        {
            detail::ObjReader p(run.child("period_map"), "run.period_map");
            cfg.run.period_map.A = p.get<double>("A", 1.0);
            cfg.run.period_map.B = p.get<double>("B", 1.0);
            cfg.run.period_map.alpha = p.get<double>("alpha", 1.0);
            cfg.run.period_map.beta = p.get<double>("beta", 3.0);
            cfg.run.period_map.energies = p.get<std::vector<double>>("E", {0.25});
            p.done();
        }
        {
            detail::ObjReader p(run.child("probe"), "run.probe");
            cfg.run.probe.r = p.get<double>("r", 1e-3);
            cfg.run.probe.theta_grid = p.get<std::vector<double>>("theta_grid", {0.25, 0.5, 0.75, 1.0});
            cfg.run.probe.starts = p.get<int>("starts", 36);
            p.done();
        }
        run.done();
    }

    {
        detail::ObjReader out(top.child("output"), "output");
        cfg.output.dir = out.get<std::string>("dir", ".");
        cfg.output.csv = out.get<bool>("csv", false);
        out.done();
    }

    top.done();
    return cfg;
}

// Echo with every default materialized; reparsing this reproduces behavior.
inline json effective_config(const Config& c) {
    json j;
    j["system"] = {
        {"period", c.system.period},
        {"h",
         {{"family", c.system.h.family},
          {"alpha", c.system.h.alpha},
          {"p", c.system.h.p},
          {"q", c.system.h.q},
          {"p0", c.system.h.p0},
          {"p_amp", c.system.h.p_amp},
          {"phase", c.system.h.phase}}},
        {"g",
         {{"family", c.system.g.family},
          {"beta", c.system.g.beta},
          {"c0", c.system.g.c0},
          {"c1", c.system.g.c1}}},
        {"weight",
         {{"family", c.system.weight.family},
          {"offset", c.system.weight.offset},
          {"amplitude", c.system.weight.amplitude},
          {"phase", c.system.weight.phase},
          {"value", c.system.weight.value},
          {"breaks", c.system.weight.breaks},
          {"values", c.system.weight.values},
          {"ts", c.system.weight.ts}}},
        {"lambda", c.system.lambda}};
    j["run"] = {
        {"tol", c.run.tol},
        {"seed", c.run.seed},
        {"check",
         {{"k_list", c.run.check.k_list},
          {"grid_mult", c.run.check.grid_mult},
          {"require", c.run.check.require}}},
        {"thresholds",
         {{"mode", c.run.thresholds.mode},
          {"R", c.run.thresholds.R},
          {"r0_probe", c.run.thresholds.r0_probe},
          {"probe_r0", c.run.thresholds.probe_r0}}},
        {"degree",
         {{"ledger", c.run.degree.ledger},
          {"r0", c.run.degree.r0},
          {"cap", c.run.degree.cap},
          {"max_points", c.run.degree.max_points},
          {"box_cu", c.run.degree.box_cu},
          {"box_cv", c.run.degree.box_cv},
          {"box_ru", c.run.degree.box_ru},
          {"box_rv", c.run.degree.box_rv},
          {"field", c.run.degree.field},
          {"R_for_thresholds", c.run.degree.R_for_thresholds}}},
        {"solve",
         {{"u_lo", c.run.solve.grid.u_lo},
          {"u_hi", c.run.solve.grid.u_hi},
          {"v_lo", c.run.solve.grid.v_lo},
          {"v_hi", c.run.solve.grid.v_hi},
          {"nu", c.run.solve.grid.nu},
          {"nv", c.run.solve.grid.nv}}},
        {"continue",
         {{"lambda_from", c.run.cont.lambda_from}, {"lambda_to", c.run.cont.lambda_to}}},
        {"period_map",
         {{"A", c.run.period_map.A},
          {"B", c.run.period_map.B},
          {"alpha", c.run.period_map.alpha},
          {"beta", c.run.period_map.beta},
          {"E", c.run.period_map.energies}}},
        {"probe",
         {{"r", c.run.probe.r},
          {"theta_grid", c.run.probe.theta_grid},
          {"starts", c.run.probe.starts}}}};
    j["output"] = {{"dir", c.output.dir}, {"csv", c.output.csv}};
    return j;
}

// ---------------------------------------------------------------------------
// Object factories
// ---------------------------------------------------------------------------

inline HOperator make_h(const HSpec& s, double T) {
    if (s.family == "identity") return HOperator::identity();
    if (s.family == "power") return HOperator::power(s.alpha);
    if (s.family == "p_laplacian") return HOperator::p_laplacian(s.p);
    if (s.family == "pq_laplacian") return HOperator::pq_laplacian(s.p, s.q);
    if (s.family == "pt_laplacian") return HOperator::pt_laplacian(s.p0, s.p_amp, T, s.phase);
    if (s.family == "minkowski") return HOperator::minkowski();
    throw UnknownFamily("unknown h family: " + s.family);
}

inline GNonlinearity make_g(const GSpec& s) {
    if (s.family == "power") return GNonlinearity::power(s.beta);
    if (s.family == "power_mod") return GNonlinearity::power_mod(s.beta, s.c0, s.c1);
    throw UnknownFamily("unknown g family: " + s.family);
}

// phi associated with the h family, when one exists (for sigma checks).
inline std::optional<PhiOperator> make_phi(const HSpec& s) {
    if (s.family == "identity") return PhiOperator::p_power(2.0);
    if (s.family == "power") return PhiOperator::p_power(1.0 + 1.0 / s.alpha);
    if (s.family == "p_laplacian") return PhiOperator::p_power(s.p);
    if (s.family == "pq_laplacian") return PhiOperator::pq(s.p, s.q);
    if (s.family == "minkowski") return PhiOperator::minkowski();
    return std::nullopt;  // time-dependent operators have no single phi
}

inline SystemInstance make_system(const SystemConfig& sc, SystemMode mode = SystemMode::Extended) {
    SystemInstance sys{make_h(sc.h, sc.period), make_g(sc.g), build_weight(sc.weight), sc.lambda,
                       mode};
    return sys;
}

// Dotted-path override: "system.lambda=75" etc. Values parse as JSON when
// possible, otherwise as strings.
inline void apply_override(json& root, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos)
        throw ConfigError("override must look like key.path=value: " + assignment);
    const std::string path = assignment.substr(0, eq);
    const std::string raw = assignment.substr(eq + 1);
    json value;
    try {
        value = json::parse(raw);
    } catch (const std::exception&) {
        value = raw;
    }
    json* node = &root;
    std::size_t pos = 0;
    while (true) {
        const auto dot = path.find('.', pos);
        const std::string key = path.substr(pos, dot == std::string::npos ? dot : dot - pos);
        if (key.empty()) throw ConfigError("override has an empty path segment: " + assignment);
        if (dot == std::string::npos) {
            (*node)[key] = value;
            break;
        }
        node = &(*node)[key];
        pos = dot + 1;
    }
}

}  // namespace persol
