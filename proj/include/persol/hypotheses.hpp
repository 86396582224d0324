#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "persol/common.hpp"
#include "persol/fields.hpp"
#include "persol/weights.hpp"

namespace persol {

enum class Verdict { Pass, Fail, Inconclusive };

inline const char* to_string(Verdict v) {
    switch (v) {
        case Verdict::Pass: return "pass";
        case Verdict::Fail: return "fail";
        case Verdict::Inconclusive: return "inconclusive";
    }
    return "?";
}

struct ProbePoint {
    double s = 0;
    double value = 0;
};

struct CheckReport {
    std::string id;
    Verdict verdict = Verdict::Inconclusive;
    std::vector<ProbePoint> witness;
    double slope = std::numeric_limits<double>::quiet_NaN();
    std::string notes;
    std::map<std::string, double> extra;

    bool pass() const { return verdict == Verdict::Pass; }
};

// Decision margin for fitted log-log slopes; verdicts inside the margin of a
// decision boundary come out inconclusive instead of flipping on noise.
inline constexpr double kSlopeTol = 0.1;

namespace detail {

// max over the t-grid of |h(t, x)| sign-resolved: returns h with the largest
// magnitude of the prescribed sign.
inline double h_extreme_over_t(const HOperator& h, double x, bool want_max) {
    if (!h.time_dependent()) return h(0.0, x);
    const int n = h.t_grid_n();
    double best = want_max ? -std::numeric_limits<double>::infinity()
                           : std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) {
        const double v = h(h.period() * i / n, x);
        best = want_max ? std::max(best, v) : std::min(best, v);
    }
    return best;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Superlinearity at zero:  h(t, K g(s)) / s -> 0 as s -> 0+, for each K.
// Probes a log grid and requires a positive fitted slope plus a concrete
// drop of three orders of magnitude across the grid.
// ---------------------------------------------------------------------------
inline CheckReport check_superlinear_zero(const HOperator& h, const GNonlinearity& g,
                                          std::vector<double> K_list = {1, -1, 10, -10},
                                          int grid_mult = 1) {
    if (K_list.empty()) throw InvalidParameter("check_superlinear_zero: K_list must be nonempty");
    CheckReport rep;
    rep.id = "superlinear-zero";
    const auto ss = logspace(1e-8, 1e-1, 36 * grid_mult + 1);
    std::vector<double> rs;
    bool nonfinite = false;
    for (double s : ss) {
        double worst = 0;
        for (double K : K_list) {
            const double x = K * g(s);
            const double hi = detail::h_extreme_over_t(h, x, true);
            const double lo = detail::h_extreme_over_t(h, x, false);
            worst = std::max(worst, std::max(std::abs(hi), std::abs(lo)) / s);
        }
        if (!std::isfinite(worst)) nonfinite = true;
        rs.push_back(worst);
        rep.witness.push_back({s, worst});
    }
    if (nonfinite) {
        rep.verdict = Verdict::Fail;
        rep.notes = "non-finite evaluations on the probe grid";
        return rep;
    }
    rep.slope = loglog_slope(ss, rs);
    const bool drop = rs.front() < 1e-3 * rs.back();
    const bool steep = rep.slope > kSlopeTol;
    if (steep && drop) rep.verdict = Verdict::Pass;
    else if (!steep && !drop) rep.verdict = Verdict::Fail;
    else rep.verdict = Verdict::Inconclusive;
    return rep;
}

// ---------------------------------------------------------------------------
// Superlinearity at infinity: sign(K) h(t, K g(s)) / s -> +inf.
// ---------------------------------------------------------------------------
inline CheckReport check_superlinear_infinity(const HOperator& h, const GNonlinearity& g,
                                              std::vector<double> K_list = {1, -1, 10, -10},
                                              int grid_mult = 1) {
    if (K_list.empty() ||
        std::any_of(K_list.begin(), K_list.end(), [](double k) { return k == 0; }))
        throw InvalidParameter("check_superlinear_infinity: K_list must exclude zero");
    CheckReport rep;
    rep.id = "superlinear-infinity";
    const auto ss = logspace(10.0, 1e8, 29 * grid_mult + 1);
    std::vector<double> rs;
    for (double s : ss) {
        double worst = std::numeric_limits<double>::infinity();
        for (double K : K_list) {
            const double x = K * g(s);
            // min over t of the signed ratio
            const double v = detail::h_extreme_over_t(h, x, /*want_max=*/K < 0);
            worst = std::min(worst, sign(K) * v / s);
        }
        if (!std::isfinite(worst)) worst = std::numeric_limits<double>::quiet_NaN();
        rs.push_back(worst);
        rep.witness.push_back({s, worst});
    }
    rep.slope = loglog_slope(ss, rs);
    const bool grew = std::isfinite(rs.back()) && std::isfinite(rs.front()) &&
                      rs.back() > 1e3 * rs.front() && rs.back() > 0;
    const bool steep = std::isfinite(rep.slope) && rep.slope > kSlopeTol;
    if (steep && grew) rep.verdict = Verdict::Pass;
    else if (!steep && !grew) rep.verdict = Verdict::Fail;
    else rep.verdict = Verdict::Inconclusive;
    return rep;
}

// ---------------------------------------------------------------------------
// Regular oscillation at zero: g(omega s)/g(s) -> 1 as s -> 0+, omega -> 1.
// Near-one omegas carry the 5% band; far omegas must settle. Also reports
// C_g = limsup g'(s) s / g(s) (the smoothness route).
// ---------------------------------------------------------------------------
inline CheckReport check_regular_oscillation(const GNonlinearity& g, int grid_mult = 1) {
    CheckReport rep;
    rep.id = "regular-oscillation";
    const std::vector<double> omegas{0.9, 0.99, 1.01, 1.1};
    const auto ss = logspace(1e-8, 1e-2, 24 * grid_mult + 1);
    const std::size_t tail = 5;  // smallest probes

    // For each omega, the ratio g(omega s)/g(s) must settle to a finite
    // positive limit L(omega); the exponents c(omega) = ln L / ln omega must
    // agree so that L(omega) -> 1 as omega -> 1.
    bool ok = true;
    std::vector<double> cs;
    std::ostringstream notes;
    for (double w : omegas) {
        double lo = std::numeric_limits<double>::infinity(), hi = -lo;
        double mean = 0;
        for (std::size_t i = 0; i < ss.size(); ++i) {
            const double r = g(w * ss[i]) / g(ss[i]);
            rep.witness.push_back({ss[i], r});
            if (i < tail) {
                if (!std::isfinite(r) || r <= 0) { ok = false; continue; }
                lo = std::min(lo, r);
                hi = std::max(hi, r);
                mean += r / tail;
            }
        }
        const bool settled = std::isfinite(lo) && std::isfinite(hi) &&
                             (hi - lo) <= 0.05 * std::abs(mean);
        if (!settled || !(mean > 0)) { ok = false; continue; }
        cs.push_back(std::log(mean) / std::log(w));
        rep.extra["limit_omega_" + std::to_string(w)] = mean;
    }
    if (cs.size() == omegas.size()) {
        double c_lo = *std::min_element(cs.begin(), cs.end());
        double c_hi = *std::max_element(cs.begin(), cs.end());
        if (!(c_hi - c_lo <= 0.05 * (1 + std::abs(c_hi)))) ok = false;
        rep.extra["power_exponent"] = 0.5 * (c_lo + c_hi);
    } else {
        ok = false;
    }

    // C_g estimate along the tail of the grid
    double cg = 0;
    for (std::size_t i = 0; i < 8 && i < ss.size(); ++i) {
        const double s = ss[i];
        const double q = g.derivative(s) * s / g(s);
        if (std::isfinite(q)) cg = std::max(cg, q);
    }
    rep.extra["C_g"] = cg;
    notes << "C_g ~= " << cg;
    rep.notes = notes.str();
    rep.verdict = ok ? Verdict::Pass : Verdict::Fail;
    return rep;
}

// ---------------------------------------------------------------------------
// Strong maximum principle, L1 route: with K = lambda ||a^-||_L1, look for a
// finite beta with h(t, K g(s)) <= beta s near zero.
// ---------------------------------------------------------------------------
inline CheckReport check_strong_max_L1(const HOperator& h, const GNonlinearity& g, double lambda,
                                       const WeightFn& a, int grid_mult = 1) {
    if (!(lambda > 0)) throw InvalidParameter("check_strong_max_L1: lambda must be positive");
    CheckReport rep;
    rep.id = "strong-max-l1";
    const double K = lambda * a.neg_l1_norm();
    double best_beta = std::numeric_limits<double>::infinity();
    Verdict v = Verdict::Fail;
    for (double eps : {1e-1, 1e-2, 1e-3}) {
        const auto ss = logspace(1e-6 * eps, eps, 24 * grid_mult + 1);
        std::vector<double> rs;
        double beta = 0;
        for (double s : ss) {
            const double r = detail::h_extreme_over_t(h, K * g(s), true) / s;
            rs.push_back(r);
            beta = std::max(beta, r);
            rep.witness.push_back({s, r});
        }
        const double slope = loglog_slope(ss, rs);
        rep.slope = slope;
        const double spread = rs.front() / std::max(rs.back(), 1e-300);
        Verdict v_eps;
        if (slope >= kSlopeTol || (std::abs(slope) < kSlopeTol && spread < 10 && spread > 0.1))
            v_eps = Verdict::Pass;
        else if (slope <= -kSlopeTol)
            v_eps = Verdict::Fail;
        else
            v_eps = Verdict::Inconclusive;
        if (v_eps == Verdict::Pass) {
            v = Verdict::Pass;
            best_beta = std::min(best_beta, beta);
        } else if (v_eps == Verdict::Inconclusive && v != Verdict::Pass) {
            v = Verdict::Inconclusive;
        }
    }
    rep.verdict = v;
    if (v == Verdict::Pass) rep.extra["beta"] = best_beta;
    rep.extra["K"] = K;
    return rep;
}

// ---------------------------------------------------------------------------
// Strong maximum principle, L-infinity route: divergence at 0+ of
//   ds / \bar h( \underline H^{-1}_{l|r}( lambda ||a^-||_inf G(s) ) ).
// Divergence is decided from the fitted decay exponent of the integrand.
// ---------------------------------------------------------------------------
inline CheckReport check_strong_max_Linf(const HOperator& h, const GNonlinearity& g, double lambda,
                                         const WeightFn& a, int grid_mult = 1) {
    CheckReport rep;
    rep.id = "strong-max-linf";
    const double Kinf = lambda * a.neg_sup();
    if (!std::isfinite(Kinf)) {
        rep.verdict = Verdict::Inconclusive;
        rep.notes = "||a^-||_inf not finite";
        return rep;
    }
    const double eta = 1.0;
    const double cval = std::min(h_lower_primitive(h, -eta), h_lower_primitive(h, eta));

    double eps = 1e-1;
    for (int k = 0; k < 40 && Kinf * g_primitive(g, eps) > 0.99 * cval; ++k) eps *= 0.5;

    bool any_pass = false, any_inconclusive = false;
    std::ostringstream notes;
    for (int branch = 0; branch < 2; ++branch) {
        const bool left = branch == 0;
        // the eps auto-shrink above already guards the inverse domain, so the
        // fast magnitude solve is used directly
        auto integrand = [&](double s) {
            const double val = Kinf * g_primitive(g, s);
            const double x = (left ? -1.0 : 1.0) *
                             detail::primitive_inverse_magnitude(h, val, eta, left ? -1.0 : 1.0);
            const double denom = std::abs(h.upper(x));
            return denom > 0 ? 1.0 / denom : std::numeric_limits<double>::infinity();
        };
        const auto ss = logspace(1e-8 * eps, eps, 48 * grid_mult + 1);
        std::vector<double> is;
        for (double s : ss) {
            const double w = integrand(s);
            is.push_back(w);
            rep.witness.push_back({left ? -s : s, w});  // sign marks the branch
        }
        const double m = loglog_slope(ss, is);
        rep.extra[left ? "exponent_left" : "exponent_right"] = m;
        // partial integrals int_delta^eps on the probe grid: witness data
        double partial = 0;
        for (std::size_t i = ss.size(); i-- > 1;) {
            partial += 0.5 * (is[i] + is[i - 1]) * (ss[i] - ss[i - 1]);
            if (i == ss.size() / 2)
                rep.extra[left ? "partial_left_mid" : "partial_right_mid"] = partial;
        }
        rep.extra[left ? "partial_left_full" : "partial_right_full"] = partial;
        Verdict v;
        if (!std::isfinite(m)) v = Verdict::Inconclusive;
        else if (m <= -1 + kSlopeTol) v = Verdict::Pass;       // decay exponent >= 1: divergent
        else if (m >= -1 + 2 * kSlopeTol) v = Verdict::Fail;   // clearly integrable
        else v = Verdict::Inconclusive;
        notes << (left ? "left: " : "; right: ") << to_string(v) << " (exponent " << m << ")";
        any_pass = any_pass || v == Verdict::Pass;
        any_inconclusive = any_inconclusive || v == Verdict::Inconclusive;
    }
    rep.notes = notes.str();
    rep.slope = rep.extra.count("exponent_right") ? rep.extra["exponent_right"] : rep.slope;
    rep.verdict = any_pass ? Verdict::Pass
                           : (any_inconclusive ? Verdict::Inconclusive : Verdict::Fail);
    return rep;
}

// ---------------------------------------------------------------------------
// sigma-conditions of phi: upper at zero, lower at infinity. Bounded-ratio
// proxy: the probed ratios must stay below 1e6.
// ---------------------------------------------------------------------------
inline CheckReport check_sigma_conditions(const PhiOperator& phi, int grid_mult = 1) {
    CheckReport rep;
    rep.id = "sigma-conditions";
    const std::vector<double> sigmas{2, 10};
    const double bound = 1e6;

    bool zero_ok = true;
    for (double s : logspace(1e-8, 1e-2, 16 * grid_mult + 1)) {
        for (double sg : sigmas) {
            const double r = std::abs(phi(sg * s)) / phi(s);
            rep.witness.push_back({s, r});
            if (!std::isfinite(r) || r > bound) zero_ok = false;
        }
    }
    bool inf_ok = true;
    for (double s : logspace(1e2, 1e8, 16 * grid_mult + 1)) {
        for (double sg : sigmas) {
            for (double side : {1.0, -1.0}) {
                const double r = phi(sg * side * s) / phi(side * s);
                rep.witness.push_back({side * s, r});
                if (!std::isfinite(r) || r > bound) inf_ok = false;
            }
        }
    }
    rep.extra["zero_pass"] = zero_ok ? 1 : 0;
    rep.extra["infinity_pass"] = inf_ok ? 1 : 0;
    rep.notes = std::string("zero: ") + (zero_ok ? "pass" : "fail") +
                "; infinity: " + (inf_ok ? "pass" : "fail");
    rep.verdict = (zero_ok && inf_ok) ? Verdict::Pass : Verdict::Fail;
    return rep;
}

// ---------------------------------------------------------------------------
// p(t)-Laplacian growth conditions (Theorem for p(t) operators):
//   limsup_{s->0+} g(s)s/s^{pbar} < +inf  and  liminf_{s->+inf} g(s)s/s^{pbar} > 0.
// ---------------------------------------------------------------------------
inline CheckReport check_pt_growth(const GNonlinearity& g, double p_bar, int grid_mult = 1) {
    CheckReport rep;
    rep.id = "pt-growth";
    auto ratio = [&](double s) { return g(s) * s / std::pow(s, p_bar); };

    const auto ss0 = logspace(1e-8, 1e-2, 16 * grid_mult + 1);
    std::vector<double> r0;
    for (double s : ss0) {
        r0.push_back(ratio(s));
        rep.witness.push_back({s, r0.back()});
    }
    const double m0 = loglog_slope(ss0, r0);
    const bool zero_ok = std::isfinite(m0) && m0 >= -kSlopeTol;

    const auto ss1 = logspace(1e2, 1e8, 16 * grid_mult + 1);
    std::vector<double> r1;
    for (double s : ss1) {
        r1.push_back(ratio(s));
        rep.witness.push_back({s, r1.back()});
    }
    const double m1 = loglog_slope(ss1, r1);
    const bool inf_ok = std::isfinite(m1) && m1 >= -kSlopeTol && r1.back() > 0;

    rep.slope = m1;
    rep.extra["slope_zero"] = m0;
    rep.extra["slope_infinity"] = m1;
    rep.notes = std::string("zero: ") + (zero_ok ? "bounded" : "unbounded") +
                "; infinity: " + (inf_ok ? "bounded away from 0" : "vanishing");
    rep.verdict = (zero_ok && inf_ok) ? Verdict::Pass : Verdict::Fail;
    return rep;
}

// ---------------------------------------------------------------------------
// Thresholds of the large-solution theorems
// ---------------------------------------------------------------------------

struct Thresholds {
    double R = 0;
    double eta = 0;
    double lambda1_minus = 0, lambda1_plus = 0;
    double lambda2_minus = 0, lambda2_plus = 0;
    double lambda_star = 0;
    double alpha0 = 0;
    double R_prime = 0;
    double r0_probe = 0;
    std::map<std::string, double> margins;
};

struct ThresholdSystem {
    HOperator h;
    GNonlinearity g;
    WeightFn a;
    double lambda = 1.0;
    std::optional<WeightFn> w;   // perturbation weight; defaults to the
                                 // normalized indicator of the positivity arcs
    double r0_probe = 1e-2;
};

// mu: multiplicative margin applied to every strict inequality so that the
// certified thresholds survive quadrature error.
inline constexpr double kMarginMu = 1e-3;

namespace detail {

// Indicator of the positivity arcs normalized to unit L1 norm.
inline WeightFn default_perturbation_weight(const WeightFn& a) {
    const auto& Js = a.positivity();
    if (Js.empty()) throw NoPositivity("perturbation weight: (a*) fails");
    const double T = a.period();
    double mass = 0;
    for (const auto& J : Js) mass += J.length;
    WeightSpec spec;
    spec.family = "piecewise_constant";
    spec.period = T;
    std::vector<std::pair<double, double>> marks;  // (time, value-after)
    for (const auto& J : Js) {
        marks.emplace_back(J.start, 1.0 / mass);
        marks.emplace_back(wrap_period(J.start + J.length, T), 0.0);
    }
    std::sort(marks.begin(), marks.end());
    bool wraps_in = false;
    for (const auto& J : Js) wraps_in = wraps_in || J.wraps();
    if (marks.empty() || marks.front().first > 0.0)
        marks.insert(marks.begin(), {0.0, wraps_in ? 1.0 / mass : 0.0});
    for (const auto& [t, v] : marks) {
        if (!spec.breaks.empty() && spec.breaks.back() == t) { spec.values.back() = v; continue; }
        spec.breaks.push_back(t);
        spec.values.push_back(v);
    }
    return build_weight(spec);
}

// Smallest eta on a log grid with (gamma/4) \underline h(+-eta) clearing
// (R/2)(1+mu) on both sides.
inline double solve_eta(const HOperator& h, double gamma, double R, double mu, double quarter) {
    const double target = (R / 2) * (1 + mu) / (gamma * quarter);
    const int per_decade = 40;
    for (double eta : logspace(1e-6, 1e9, 15 * per_decade + 1)) {
        if (h.lower(eta) >= target && -h.lower(-eta) >= target) return eta;
    }
    throw EtaInfeasible("no eta satisfies the envelope inequalities: h too weak for this R");
}

}  // namespace detail

inline Thresholds lambda_star(const ThresholdSystem& sys, double R, double mu_margin = kMarginMu) {
    if (!(R > 0)) throw InvalidParameter("lambda_star: R must be positive");
    const WeightFn& a = sys.a;
    const double gamma = a.gamma();
    if (!(gamma > 0)) throw NoPositivity("lambda_star: (a*) fails, no positivity intervals");
    const double mu = mu_margin;

    Thresholds th;
    th.R = R;
    th.r0_probe = sys.r0_probe;

    // eta from the gamma/4 inequalities (strict, with margin mu)
    th.eta = detail::solve_eta(sys.h, gamma, R, mu, 0.25);

    const double g_low_R = sys.g.lower_env(R);
    const double A_star_g8 = a_star(a, gamma / 8);

    // lambda_{1,-}: smallest lambda with -(gamma/8) hbar(-lambda glåw A*(g/8)) > R/2
    auto cond1 = [&](double lam, double sgn) {
        const double arg = sgn * lam * g_low_R * A_star_g8;
        return sgn * (gamma / 8) * sys.h.upper(arg) >= (R / 2) * (1 + mu);
    };
    auto bisect_lambda = [&](double sgn) {
        double hi = 1.0;
        int guard = 0;
        while (!cond1(hi, sgn)) {
            hi *= 2;
            if (++guard > 80) throw EtaInfeasible("lambda1 target unreachable: h too weak");
        }
        double lo = hi / 2;
        if (hi == 1.0) {
            lo = 1.0;
            while (cond1(lo, sgn) && lo > 1e-12) lo /= 2;
        }
        for (int i = 0; i < 80; ++i) {
            const double mid = std::sqrt(lo * hi);
            if (cond1(mid, sgn)) hi = mid; else lo = mid;
            if (hi - lo < 1e-9 * hi) break;
        }
        return hi;
    };
    th.lambda1_minus = bisect_lambda(-1.0);
    th.lambda1_plus = bisect_lambda(+1.0);

    // lambda_{2,+-} = eta / [ g_low(R) A*( R / (2 |hbar(-+eta)|) ) ]
    auto lam2 = [&](double sgn) {
        const double denom_h = std::abs(sys.h.upper(sgn * th.eta));
        double delta = R / (2 * denom_h);
        delta = std::min(delta, gamma);
        return th.eta / (g_low_R * a_star(a, delta));
    };
    th.lambda2_minus = lam2(-1.0);
    th.lambda2_plus = lam2(+1.0);

    th.lambda_star = std::max({th.lambda1_minus, th.lambda1_plus, th.lambda2_minus, th.lambda2_plus});

    // alpha0 and R' for the system's lambda
    const WeightFn w = sys.w ? *sys.w : detail::default_perturbation_weight(a);
    const double w_l1 = w.l1_norm();
    const double g_up_R = sys.g.upper_env(R);
    th.alpha0 = (1 + mu) * sys.lambda * a.l1_norm() * g_up_R / w_l1;
    th.R_prime = (1 + mu) * std::max(sys.r0_probe,
                                     sys.lambda * a.l1_norm() * g_up_R + th.alpha0 * w_l1);
    return th;
}

// Large-solution bound for fixed lambda: scan R over a log grid, solve the
// gamma/8 equalities for eta(R), and return the first R whose contradiction
// inequalities clear the margin.
inline Thresholds R_of_lambda(const ThresholdSystem& sys, double lambda, double mu_margin = kMarginMu) {
    if (!(lambda > 0)) throw InvalidParameter("R_of_lambda: lambda must be positive");
    const WeightFn& a = sys.a;
    const double gamma = a.gamma();
    if (!(gamma > 0)) throw NoPositivity("R_of_lambda: (a*) fails");
    const double mu = mu_margin;
    const double A_star_g8 = a_star(a, gamma / 8);

    std::map<std::string, double> last_margins;
    for (double R : logspace(1.0, 1e6, 121)) {
        // eta from the gamma/8 equalities; take the larger root so both hold
        double eta = 0;
        try {
            const double target = (R / 2) / (gamma / 8);
            const double eta_p = solve_increasing([&](double x) { return sys.h.lower(x); }, target,
                                                  1.0, 1e-10, 1e14);
            const double eta_m = -solve_increasing([&](double x) { return sys.h.lower(x); },
                                                   -target, -1.0, 1e-10, 1e14);
            eta = std::max(eta_p, eta_m);
        } catch (const NoBracket&) {
            last_margins["eta_feasible"] = 0;
            continue;  // h too weak at this R
        }

        const double g_low_R = sys.g.lower_env(R);
        std::map<std::string, double> margins;
        auto margin1 = [&](double sgn) {
            const double arg = sgn * lambda * g_low_R * A_star_g8;
            return sgn * (gamma / 8) * sys.h.upper(arg) / (R / 2) - 1.0;
        };
        auto margin2 = [&](double sgn) {
            const double denom_h = std::abs(sys.h.upper(sgn * eta));
            const double delta = std::min(R / (2 * denom_h), gamma);
            return lambda * g_low_R * a_star(a, delta) / eta - 1.0;
        };
        margins["contr1_minus"] = margin1(-1.0);
        margins["contr1_plus"] = margin1(+1.0);
        margins["contr2_minus"] = margin2(-1.0);
        margins["contr2_plus"] = margin2(+1.0);
        last_margins = margins;

        bool ok = true;
        for (const auto& [k, v] : margins) ok = ok && v >= mu;
        if (ok) {
            Thresholds th;
            th.R = R;
            th.eta = eta;
            // the lambda thresholds belong to the other theorem's route
            th.lambda1_minus = th.lambda1_plus = th.lambda2_minus = th.lambda2_plus =
                th.lambda_star = std::numeric_limits<double>::quiet_NaN();
            th.r0_probe = sys.r0_probe;
            th.margins = margins;
            const WeightFn w = sys.w ? *sys.w : detail::default_perturbation_weight(a);
            const double w_l1 = w.l1_norm();
            const double g_up_R = sys.g.upper_env(R);
            th.alpha0 = (1 + mu) * lambda * a.l1_norm() * g_up_R / w_l1;
            th.R_prime = (1 + mu) * std::max(sys.r0_probe,
                                             lambda * a.l1_norm() * g_up_R + th.alpha0 * w_l1);
            return th;
        }
    }
    std::ostringstream msg;
    msg << "R_of_lambda: scan exhausted; final margins:";
    for (const auto& [k, v] : last_margins) msg << " " << k << "=" << v;
    throw NoRFound(msg.str());
}

}  // namespace persol
