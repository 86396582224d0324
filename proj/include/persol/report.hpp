#pragma once

#include <string>

#include "persol/config.hpp"
#include "persol/degree.hpp"
#include "persol/hypotheses.hpp"
#include "persol/solver.hpp"

namespace persol {

inline json to_json(const CheckReport& r) {
    json w = json::array();
    for (const auto& p : r.witness) w.push_back({p.s, p.value});
    json extra = json::object();
    for (const auto& [k, v] : r.extra) extra[k] = v;
    return json{{"id", r.id},
                {"verdict", to_string(r.verdict)},
                {"slope", r.slope},
                {"notes", r.notes},
                {"extra", extra},
                {"witness", w}};
}

inline json to_json(const Thresholds& t) {
    json margins = json::object();
    for (const auto& [k, v] : t.margins) margins[k] = v;
    return json{{"R", t.R},
                {"eta", t.eta},
                {"lambda1_minus", t.lambda1_minus},
                {"lambda1_plus", t.lambda1_plus},
                {"lambda2_minus", t.lambda2_minus},
                {"lambda2_plus", t.lambda2_plus},
                {"lambda_star", t.lambda_star},
                {"alpha0", t.alpha0},
                {"R_prime", t.R_prime},
                {"r0_probe", t.r0_probe},
                {"margins", margins}};
}

inline json to_json(const std::string& name, const DegreeResult& d,
                    double tol = std::numeric_limits<double>::quiet_NaN()) {
    return json{{"name", name},
                {"tol", tol},
                {"degree", d.degree},
                {"certified", d.certified},
                {"min_boundary_norm", d.min_boundary_norm},
                {"points_used", d.points_used},
                {"total_angle", d.total_angle},
                {"box",
                 {{"cu", d.box.cu}, {"cv", d.box.cv}, {"ru", d.box.ru}, {"rv", d.box.rv}}}};
}

inline json orbit_summary(double lambda, const OrbitSolution& o) {
    return json{{"lambda", lambda},
                {"tol", o.tol},
                {"u0", o.z0[0]},
                {"v0", o.z0[1]},
                {"residual", o.residual_norm},
                {"min_u", o.min_u},
                {"max_u", o.max_u},
                {"argmax_t", o.argmax_t},
                {"strong_ok", o.positivity.strong_ok},
                {"weak_ok", o.positivity.weak_ok},
                {"argmax_in_Jn", o.positivity.argmax_in_Jn},
                {"newton_iters", o.newton_iters}};
}

inline json empty_report(const Config& cfg, double tol) {
    json rep;
    rep["config"] = effective_config(cfg);
    rep["checks"] = json::array();
    rep["thresholds"] = json::object();
    rep["degrees"] = json::array();
    rep["orbits"] = json::array();
    rep["results"] = json::object();
    json prov{{"tool", "persol"},
              {"version", "0.1.0"},
              {"tol", tol},
              {"seed", cfg.run.seed},
              {"degree_convention",
               "Brouwer degree by boundary winding of the stated planar map; "
               "coincidence-degree values are reproduced up to one global sign"}};
    if (cfg.system.weight.family == "table")
        prov["weight_note"] = "table weight evaluated by periodic linear interpolation";
    rep["provenance"] = prov;
    return rep;
}

}  // namespace persol
