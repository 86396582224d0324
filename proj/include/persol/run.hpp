#pragma once

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "persol/report.hpp"

namespace persol {

// ---------------------------------------------------------------------------
// Structural hypothesis audits (grid tests on the raw operators)
// ---------------------------------------------------------------------------

inline CheckReport check_h_structure(const HOperator& h, double T) {
    CheckReport rep;
    rep.id = "h-structure";
    bool zero_ok = true, increasing_ok = true;
    const auto ts = linspace(0.0, T, 17);
    std::vector<double> ss;
    for (double s : logspace(1e-6, 1e3, 500)) { ss.push_back(-s); ss.push_back(s); }
    ss.push_back(0.0);
    std::sort(ss.begin(), ss.end());
    for (double t : ts) {
        if (std::abs(h(t, 0.0)) > 1e-14) zero_ok = false;
        double prev = -std::numeric_limits<double>::infinity();
        for (double s : ss) {
            const double v = h(t, s);
            if (!(v > prev)) increasing_ok = false;
            prev = v;
        }
    }
    rep.verdict = (zero_ok && increasing_ok) ? Verdict::Pass : Verdict::Fail;
    rep.notes = std::string("h(t,0)=0: ") + (zero_ok ? "ok" : "violated") +
                "; strictly increasing: " + (increasing_ok ? "ok" : "violated");
    return rep;
}

inline CheckReport check_g_star(const GNonlinearity& g) {
    CheckReport rep;
    rep.id = "g-star";
    bool ok = std::abs(g(0.0)) <= 1e-14;
    for (double s : logspace(1e-10, 1e6, 600))
        if (!(g(s) > 0)) ok = false;
    rep.verdict = ok ? Verdict::Pass : Verdict::Fail;
    return rep;
}

// ---------------------------------------------------------------------------
// The check pipeline: every auditor applicable to the configured system,
// plus the per-theorem applicability table.
// ---------------------------------------------------------------------------

struct CheckRun {
    std::vector<CheckReport> checks;
    std::vector<std::pair<std::string, std::string>> theorems;  // (name, verdict/n-a)
};

inline CheckRun run_checks(const Config& cfg) {
    CheckRun out;
    const double T = cfg.system.period;
    const HOperator h = make_h(cfg.system.h, T);
    const GNonlinearity g = make_g(cfg.system.g);
    const WeightFn a = build_weight(cfg.system.weight);
    const double lambda = cfg.system.lambda;
    const int mult = cfg.run.check.grid_mult;

    std::vector<double> K = cfg.run.check.k_list;
    if (K.empty()) K = {1, -1, 10, -10, a.l1_norm(), -a.l1_norm()};

    out.checks.push_back(check_h_structure(h, T));
    out.checks.push_back(check_g_star(g));

    {
        CheckReport rep;
        rep.id = "mean-negativity";
        const auto mn = mean_negativity(a);
        rep.verdict = mn.pass ? Verdict::Pass : Verdict::Fail;
        rep.extra["integral"] = mn.integral;
        out.checks.push_back(rep);
    }
    {
        CheckReport rep;
        rep.id = "positivity-intervals";
        if (a.gamma() > 0) {
            rep.verdict = Verdict::Pass;
            rep.extra["gamma"] = a.gamma();
            rep.extra["count"] = static_cast<double>(a.positivity().size());
            int n = 0;
            for (const auto& J : a.positivity()) {
                rep.extra["J" + std::to_string(n) + "_start"] = J.start;
                rep.extra["J" + std::to_string(n) + "_end"] = J.end();
                ++n;
            }
        } else {
            rep.verdict = Verdict::Fail;
            rep.notes = "no positivity intervals on the sampling grid";
        }
        int plateau = 0;
        for (double t : linspace(0.0, T, 10001))
            if (std::abs(a(t)) <= 1e-12) ++plateau;
        if (plateau > 1)
            rep.notes += (rep.notes.empty() ? "" : "; ") +
                         std::string("near-zero plateau on ") + std::to_string(plateau) +
                         " grid samples";
        out.checks.push_back(rep);
    }

    out.checks.push_back(check_superlinear_zero(h, g, K, mult));
    out.checks.push_back(check_superlinear_infinity(h, g, K, mult));
    out.checks.push_back(check_regular_oscillation(g, mult));
    out.checks.push_back(check_strong_max_L1(h, g, lambda, a, mult));
    out.checks.push_back(check_strong_max_Linf(h, g, lambda, a, mult));
    if (auto phi = make_phi(cfg.system.h)) out.checks.push_back(check_sigma_conditions(*phi, mult));
    if (cfg.system.h.family == "pt_laplacian")
        out.checks.push_back(
            check_pt_growth(g, cfg.system.h.p0 + std::abs(cfg.system.h.p_amp), mult));

    auto verdict_of = [&](const std::string& id) -> const CheckReport* {
        for (const auto& c : out.checks)
            if (c.id == id) return &c;
        return nullptr;
    };
    auto passes = [&](std::initializer_list<const char*> ids) {
        for (const char* id : ids) {
            const CheckReport* c = verdict_of(id);
            if (!c || c->verdict != Verdict::Pass) return false;
        }
        return true;
    };
    auto sigma_part = [&](const char* key) {
        const CheckReport* c = verdict_of("sigma-conditions");
        return c && c->extra.count(key) && c->extra.at(key) == 1.0;
    };

    const bool base = passes({"h-structure", "g-star", "mean-negativity", "positivity-intervals",
                              "regular-oscillation"});
    out.theorems.emplace_back("Th 2.2 (lambda large)",
                              base && passes({"superlinear-zero"}) ? "applicable" : "not applicable");
    out.theorems.emplace_back("Th 2.3 (all lambda)",
                              base && passes({"superlinear-zero", "superlinear-infinity"})
                                  ? "applicable"
                                  : "not applicable");
    if (make_phi(cfg.system.h)) {
        out.theorems.emplace_back("Th 5.1 (phi, lambda large)",
                                  base && passes({"superlinear-zero"}) && sigma_part("zero_pass")
                                      ? "applicable"
                                      : "not applicable");
        out.theorems.emplace_back(
            "Th 5.2 (phi, all lambda)",
            base && passes({"superlinear-zero", "superlinear-infinity"}) &&
                    sigma_part("zero_pass") && sigma_part("infinity_pass")
                ? "applicable"
                : "not applicable");
    } else {
        out.theorems.emplace_back("Th 5.1 (phi, lambda large)", "n/a");
        out.theorems.emplace_back("Th 5.2 (phi, all lambda)", "n/a");
    }
    out.theorems.emplace_back("Th 5.3 (p(t))",
                              cfg.system.h.family == "pt_laplacian"
                                  ? (base && passes({"pt-growth"}) ? "applicable" : "not applicable")
                                  : "n/a");
    out.theorems.emplace_back("Th 5.4 (Minkowski)",
                              cfg.system.h.family == "minkowski"
                                  ? (base && passes({"superlinear-zero"}) ? "applicable"
                                                                          : "not applicable")
                                  : "n/a");
    return out;
}

// Required-condition names accepted by `check --require`.
inline std::string resolve_condition_id(const std::string& name) {
    static const std::map<std::string, std::string> aliases{
        {"zero", "superlinear-zero"},         {"infinity", "superlinear-infinity"},
        {"sigma", "sigma-conditions"},        {"mean-negativity", "mean-negativity"},
        {"positivity", "positivity-intervals"}};
    auto it = aliases.find(name);
    return it != aliases.end() ? it->second : name;
}

// ---------------------------------------------------------------------------
// Orchestration
// ---------------------------------------------------------------------------

struct RunResult {
    int exit_code = 0;
    json report;
    std::map<std::string, std::string> artifacts;  // extra files keyed by name
};

namespace detail {

inline ThresholdSystem make_threshold_system(const Config& cfg) {
    return ThresholdSystem{make_h(cfg.system.h, cfg.system.period), make_g(cfg.system.g),
                           build_weight(cfg.system.weight), cfg.system.lambda, std::nullopt,
                           cfg.run.thresholds.r0_probe};
}

inline void write_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw Error("cannot open for writing: " + path.string());
    os << text;
}

}  // namespace detail

inline RunResult run(const std::string& subcommand, const Config& cfg,
                     const std::vector<std::string>& require_flags = {},
                     std::ostream& console = std::cout) {
    RunResult out;
    out.report = empty_report(cfg, cfg.run.tol);
    const double tol = cfg.run.tol;

    if (subcommand == "check") {
        CheckRun cr = run_checks(cfg);
        for (const auto& c : cr.checks) out.report["checks"].push_back(to_json(c));
        json th = json::array();
        console << "condition                verdict\n";
        for (const auto& c : cr.checks) {
            console << "  " << c.id;
            for (std::size_t i = c.id.size(); i < 22; ++i) console << ' ';
            console << to_string(c.verdict) << (c.notes.empty() ? "" : "  [" + c.notes + "]")
                    << "\n";
        }
        console << "theorem applicability\n";
        for (const auto& [name, v] : cr.theorems) {
            th.push_back({{"theorem", name}, {"verdict", v}});
            console << "  " << name;
            for (std::size_t i = name.size(); i < 28; ++i) console << ' ';
            console << v << "\n";
        }
        out.report["results"]["theorems"] = th;

        std::vector<std::string> required = cfg.run.check.require;
        required.insert(required.end(), require_flags.begin(), require_flags.end());
        for (const auto& name : required) {
            const std::string id = resolve_condition_id(name);
            bool found = false, ok = false;
            for (const auto& c : cr.checks)
                if (c.id == id) {
                    found = true;
                    ok = c.verdict == Verdict::Pass;
                }
            if (!found) throw ConfigError("--require: unknown condition '" + name + "'");
            if (!ok) out.exit_code = 2;
        }
    } else if (subcommand == "thresholds") {
        ThresholdSystem ts = detail::make_threshold_system(cfg);
        if (cfg.run.thresholds.probe_r0) {
            // largest r <= r0_probe at which the probe stays negative
            SystemInstance sys = make_system(cfg.system);
            for (double r : {1.0, 0.3, 0.1, 0.03, 0.01}) {
                const double r_try = r * cfg.run.thresholds.r0_probe;
                if (!nonexistence_probe(sys, r_try, {1.0}, 16, std::min(tol, 1e-6)).any_found) {
                    ts.r0_probe = r_try;
                    break;
                }
            }
            out.report["results"]["r0_probe_refined"] = ts.r0_probe;
        }
        Thresholds th;
        if (cfg.run.thresholds.mode == "lambda_star") {
            th = lambda_star(ts, cfg.run.thresholds.R);
        } else if (cfg.run.thresholds.mode == "R_of_lambda") {
            th = R_of_lambda(ts, cfg.system.lambda);
        } else {
            throw ConfigError("run.thresholds.mode must be lambda_star or R_of_lambda");
        }
        out.report["thresholds"] = to_json(th);
        console << "R=" << th.R << " eta=" << th.eta;
        if (std::isfinite(th.lambda_star)) console << " lambda*=" << th.lambda_star;
        console << " alpha0=" << th.alpha0 << " R'=" << th.R_prime << "\n";
    } else if (subcommand == "degree") {
        SystemInstance sys = make_system(cfg.system);
        const auto& dc = cfg.run.degree;
        if (dc.ledger) {
            DegreeResult small = small_ball_degree(sys, dc.r0, dc.max_points);
            ThresholdSystem ts = detail::make_threshold_system(cfg);
            Thresholds th = lambda_star(ts, dc.R_for_thresholds);
            Rectangle big{0, 0, th.R, th.R_prime};
            DegreeResult large = poincare_residual_degree(sys, big, tol, dc.cap, dc.max_points);
            const int ann = annulus_degree(small, large);
            out.report["thresholds"] = to_json(th);
            out.report["degrees"].push_back(to_json("small_ball", small, tol));
            out.report["degrees"].push_back(to_json("large_box", large, tol));
            if (cfg.output.csv) {
                std::ostringstream s1, s2;
                degree_samples_to_csv(small, s1);
                degree_samples_to_csv(large, s2);
                out.artifacts["degree_small_ball.csv"] = s1.str();
                out.artifacts["degree_large_box.csv"] = s2.str();
            }
            out.report["degrees"].push_back(
                json{{"name", "annulus"}, {"degree", ann}, {"certified", true}});
            console << "deg(small ball, averaged field) = " << small.degree << "\n"
                    << "deg(large box, poincare residual) = " << large.degree << "\n"
                    << "deg(annulus) = " << ann << "\n";
        } else {
            Rectangle box{dc.box_cu, dc.box_cv, dc.box_ru, dc.box_rv};
            DegreeResult d = dc.field == "averaged"
                                 ? winding_degree(averaged_field(sys), box, dc.max_points)
                                 : poincare_residual_degree(sys, box, tol, dc.cap, dc.max_points);
            out.report["degrees"].push_back(to_json(dc.field, d, tol));
            if (cfg.output.csv) {
                std::ostringstream s1;
                degree_samples_to_csv(d, s1);
                out.artifacts["degree_boundary.csv"] = s1.str();
            }
            console << "deg(" << dc.field << ") = " << d.degree
                    << (d.certified ? " (certified)" : " (uncertified)") << "\n";
        }
    } else if (subcommand == "solve") {
        SystemInstance sys = make_system(cfg.system);
        MultistartResult ms = multistart_solve(sys, cfg.run.solve.grid, tol);
        if (ms.trivial)
            out.report["results"]["trivial_orbit"] = orbit_summary(cfg.system.lambda, *ms.trivial);
        int k = 0;
        std::ostringstream rows;
        rows << "lambda,u0,v0,residual,min_u,max_u,argmax_t,strong_ok\n";
        for (const auto& o : ms.solutions) {
            out.report["orbits"].push_back(orbit_summary(cfg.system.lambda, o));
            char line[256];
            std::snprintf(line, sizeof(line), "%.15g,%.15g,%.15g,%.15g,%.15g,%.15g,%.15g,%d\n",
                          cfg.system.lambda, o.z0[0], o.z0[1], o.residual_norm, o.min_u, o.max_u,
                          o.argmax_t, o.positivity.strong_ok ? 1 : 0);
            rows << line;
            if (cfg.output.csv) {
                std::ostringstream tcsv;
                trajectory_to_csv(o.trajectory, sys.period(), tcsv);
                out.artifacts["orbit_" + std::to_string(k) + ".csv"] = tcsv.str();
            }
            ++k;
        }
        if (cfg.output.csv) out.artifacts["orbits.csv"] = rows.str();
        out.report["results"]["starts"] = ms.starts;
        out.report["results"]["converged"] = ms.converged;
        out.report["results"]["blowups"] = ms.blowups;
        out.report["results"]["failures"] = ms.failures;
        console << ms.solutions.size() << " nontrivial orbit(s); " << ms.converged << "/"
                << ms.starts << " starts converged, " << ms.blowups << " blew up\n";
    } else if (subcommand == "continue") {
        SystemInstance sys = make_system(cfg.system);
        sys.lambda = cfg.run.cont.lambda_from;
        MultistartResult ms = multistart_solve(sys, cfg.run.solve.grid, tol);
        const OrbitSolution* seed = nullptr;
        for (const auto& o : ms.solutions)
            if (o.positivity.strong_ok) { seed = &o; break; }
        if (!seed) throw SeedInvalid("continue: no strong-positive orbit found at lambda_from");
        Branch br = continue_lambda(sys, cfg.run.cont.lambda_from, cfg.run.cont.lambda_to, *seed,
                                    tol);
        std::ostringstream rows;
        rows << "lambda,u0,v0,residual,min_u,max_u,argmax_t,strong_ok\n";
        for (const auto& bp : br.points) {
            out.report["orbits"].push_back(orbit_summary(bp.lambda, bp.orbit));
            char line[256];
            std::snprintf(line, sizeof(line), "%.15g,%.15g,%.15g,%.15g,%.15g,%.15g,%.15g,%d\n",
                          bp.lambda, bp.orbit.z0[0], bp.orbit.z0[1], bp.orbit.residual_norm,
                          bp.orbit.min_u, bp.orbit.max_u, bp.orbit.argmax_t,
                          bp.orbit.positivity.strong_ok ? 1 : 0);
            rows << line;
        }
        if (cfg.output.csv) out.artifacts["branch.csv"] = rows.str();
        out.report["results"]["termination"] = br.termination;
        console << "branch of " << br.points.size() << " points, terminated: " << br.termination
                << "\n";
    } else if (subcommand == "period-map") {
        const auto& pm = cfg.run.period_map;
        json taus = json::array();
        std::ostringstream rows;
        rows << "E,tau\n";
        for (double E : pm.energies) {
            const double tau = period_map(pm.A, pm.B, pm.alpha, pm.beta, E);
            taus.push_back({{"E", E}, {"tau", tau}});
            char line[80];
            std::snprintf(line, sizeof(line), "%.15g,%.15g\n", E, tau);
            rows << line;
            console << "tau(" << E << ") = " << tau << "\n";
        }
        if (cfg.output.csv) out.artifacts["period_map.csv"] = rows.str();
        out.report["results"]["period_map"] = taus;
    } else if (subcommand == "probe") {
        SystemInstance sys = make_system(cfg.system);
        ProbeReport pr = nonexistence_probe(sys, cfg.run.probe.r, cfg.run.probe.theta_grid,
                                            cfg.run.probe.starts, std::min(tol, 1e-6));
        json per = json::array();
        for (const auto& t : pr.per_theta) {
            per.push_back({{"theta", t.theta},
                           {"found", t.found},
                           {"starts", t.starts},
                           {"converged", t.converged},
                           {"nearest_max_u", t.nearest_max_u}});
            console << "theta=" << t.theta << ": "
                    << (t.found ? "orbit found" : "probe-negative") << "\n";
        }
        out.report["results"]["probe"] =
            json{{"r", pr.r}, {"any_found", pr.any_found}, {"per_theta", per},
                 {"label", "probe"}};
    } else {
        throw ConfigError("unknown subcommand: " + subcommand);
    }
    return out;
}

// Full pipeline: run + write report.json (and CSV artifacts) into output.dir.
inline int run_and_write(const std::string& subcommand, const Config& cfg,
                         const std::vector<std::string>& require_flags = {},
                         std::ostream& console = std::cout) {
    namespace fs = std::filesystem;
    const fs::path dir = cfg.output.dir;
    fs::create_directories(dir);
    RunResult rr;
    try {
        rr = run(subcommand, cfg, require_flags, console);
    } catch (const ConfigError&) {
        throw;  // configuration problems abort before any report exists
    } catch (const Error& e) {
        json rep = empty_report(cfg, cfg.run.tol);
        rep["results"]["error"] = e.what();
        detail::write_file(dir / "report.json", rep.dump(2) + "\n");
        console << "error: " << e.what() << "\n";
        return 1;
    }

    for (const auto& [name, text] : rr.artifacts) detail::write_file(dir / name, text);
    detail::write_file(dir / "report.json", rr.report.dump(2) + "\n");
    return rr.exit_code;
}

}  // namespace persol
