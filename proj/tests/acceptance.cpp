// Acceptance suite: exercises the full pipeline on the cubic fixture
//   h = id, g = u^3, a(t) = sin(2 pi t) - 0.3, T = 1, lambda = 50
// and the operator zoo, printing one PASS/FAIL line per criterion.

#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <random>
#include <sstream>
#include <string>

#include "persol/degree.hpp"
#include "persol/hypotheses.hpp"
#include "persol/run.hpp"
#include "persol/solver.hpp"

using namespace persol;

namespace {

int g_failures = 0;

void criterion(int n, const std::string& label, bool ok, const std::string& detail = "") {
    std::printf("[%s] criterion %d: %s%s\n", ok ? "PASS" : "FAIL", n, label.c_str(),
                detail.empty() ? "" : ("  (" + detail + ")").c_str());
    std::fflush(stdout);
    if (!ok) ++g_failures;
}

WeightFn sine_weight(double offset) {
    WeightSpec s;
    s.family = "sine";
    s.offset = offset;
    s.period = 1.0;
    return build_weight(s);
}

SystemInstance p1_system(double lambda = 50.0) {
    return {HOperator::identity(), GNonlinearity::power(3), sine_weight(-0.3), lambda,
            SystemMode::Extended};
}

ThresholdSystem p1_thresholds(double lambda = 50.0) {
    return {HOperator::identity(), GNonlinearity::power(3), sine_weight(-0.3), lambda,
            std::nullopt, 1e-3};
}

// independent window-mass oracle on a plain Simpson grid
double a_star_oracle(double delta) {
    auto a = [](double t) { return std::sin(2 * kPi * t) - 0.3; };
    auto simpson = [&](double lo, double hi) {
        const int n = 2000;
        const double h = (hi - lo) / n;
        double sum = a(lo) + a(hi);
        for (int i = 1; i < n; ++i) sum += a(lo + i * h) * (i % 2 ? 4.0 : 2.0);
        return sum * h / 3.0;
    };
    const double t1 = std::asin(0.3) / (2 * kPi);
    const double t2 = 0.5 - t1;
    double best = std::numeric_limits<double>::infinity();
    const int m = 10000;
    for (int i = 0; i <= m; ++i) {
        const double w = t1 + (t2 - t1 - delta) * i / m;
        best = std::min(best, simpson(w, w + delta));
    }
    return best;
}

double quartic_period_oracle() {
    auto f = [](double x) {
        const double u = 1.0 - x * x;
        return 2.0 / std::sqrt(1.0 + u + u * u + u * u * u);
    };
    return 4.0 * std::sqrt(2.0) * integrate_adaptive(f, 0.0, 1.0, 1e-13);
}

}  // namespace

int main() {
    // ---- 1. degree ledger ----------------------------------------------
    try {
        const auto t0 = std::chrono::steady_clock::now();
        SystemInstance sys = p1_system();
        DegreeResult small = small_ball_degree(sys, 1e-2);
        Thresholds th = lambda_star(p1_thresholds(), 1.0);
        DegreeResult large =
            poincare_residual_degree(sys, Rectangle{0, 0, th.R, th.R_prime}, 1e-9, 1e6);
        const int ann = annulus_degree(small, large);
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const bool values_ok = (small.degree == -1 && large.degree == 0 && ann == 1) ||
                               (small.degree == 1 && large.degree == 0 && ann == -1);
        std::ostringstream d;
        d << "small=" << small.degree << " large=" << large.degree << " annulus=" << ann
          << " R'=" << th.R_prime << " in " << secs << "s";
        criterion(1, "degree ledger -1/0/+1, certified, < 60 s",
                  values_ok && small.certified && large.certified && secs < 60.0, d.str());
    } catch (const Error& e) {
        criterion(1, "degree ledger -1/0/+1, certified, < 60 s", false, e.what());
    }

    // ---- 2. existence at lambda = 50 ------------------------------------
    OrbitSolution found_orbit;
    bool have_orbit = false;
    try {
        SystemInstance sys = p1_system();
        ProbeReport probe = nonexistence_probe(sys, 1e-3, {0.25, 0.5, 0.75, 1.0}, 36, 1e-9);
        const double r0 = 1e-3;
        Thresholds th = R_of_lambda(p1_thresholds(), 50.0);

        MultistartResult ms = multistart_solve(sys, MultistartGrid{0, 2, -2, 2, 16, 16}, 1e-9);
        bool ok = false;
        std::ostringstream d;
        for (const auto& o : ms.solutions) {
            if (!(o.residual_norm < 1e-9) || !(o.min_u > 0)) continue;
            if (!(o.max_u > r0 && o.max_u < th.R)) continue;
            if (!o.positivity.argmax_in_Jn) continue;
            // the stated arc of positivity
            if (!(o.argmax_t > 0.04849 - 1e-4 && o.argmax_t < 0.45151 + 1e-4)) continue;
            // confirm by re-integration at tol/10
            OrbitSolution confirm = newton_periodic(sys, o.z0, 1e-10);
            if (!(confirm.residual_norm < 1e-9) || !(confirm.min_u > 0)) continue;
            ok = true;
            found_orbit = o;
            have_orbit = true;
            d << "z0=(" << o.z0[0] << "," << o.z0[1] << ") |u|=" << o.max_u
              << " argmax=" << o.argmax_t << " residual=" << o.residual_norm;
            break;
        }
        criterion(2, "existence: positive orbit with r0 < |u| < R, argmax in J1",
                  ok && !probe.any_found, d.str());
    } catch (const Error& e) {
        criterion(2, "existence: positive orbit with r0 < |u| < R, argmax in J1", false, e.what());
    }

    // ---- 3. necessity of mean negativity --------------------------------
    try {
        WeightFn bad = sine_weight(+0.3);
        const bool mean_fails = !mean_negativity(bad).pass;
        SystemInstance sys{HOperator::identity(), GNonlinearity::power(3), bad, 50.0,
                           SystemMode::Extended};
        MultistartResult ms = multistart_solve(sys, MultistartGrid{0, 2, -2, 2, 16, 16}, 1e-9);
        bool none_strong = ms.starts >= 256;
        for (const auto& o : ms.solutions) none_strong = none_strong && !o.positivity.strong_ok;

        json cfg_json = json::parse(R"({
            "system": {"h": {"family": "identity"}, "g": {"family": "power", "beta": 3},
                        "weight": {"family": "sine", "offset": 0.3}, "lambda": 50.0},
            "run": {"tol": 1e-9}})");
        Config cfg = parse_config(cfg_json);
        std::ostringstream sink;
        const int code = run("check", cfg, {"mean-negativity"}, sink).exit_code;
        criterion(3, "necessity: mean fails, no strong orbit in 256 starts, exit 2",
                  mean_fails && none_strong && code == 2,
                  "starts=" + std::to_string(ms.starts) + " exit=" + std::to_string(code));
    } catch (const Error& e) {
        criterion(3, "necessity: mean fails, no strong orbit in 256 starts, exit 2", false,
                  e.what());
    }

    // ---- 4. period map ---------------------------------------------------
    try {
        const double oracle = quartic_period_oracle();
        const double tau = period_map(1, 1, 1, 3, 0.25);
        bool ok = std::abs(tau - 7.41630) <= 1e-3 && std::abs(tau - oracle) <= 1e-6;
        double prev = std::numeric_limits<double>::infinity();
        std::vector<double> taus;
        for (double E : {1e-6, 1e-3, 1.0, 1e3, 1e6}) {
            taus.push_back(period_map(1, 1, 1, 3, E));
            ok = ok && taus.back() < prev;
            prev = taus.back();
        }
        ok = ok && taus.front() / taus.back() > 1e2;
        for (double E : {0.1, 1.0, 10.0})
            ok = ok && std::abs(period_map(1, 1, 1, 1, E) - 2 * kPi) <= 1e-6;
        criterion(4, "period map: lemniscatic value, superlinear limits, isochrony", ok,
                  "tau(0.25)=" + std::to_string(tau));
    } catch (const Error& e) {
        criterion(4, "period map: lemniscatic value, superlinear limits, isochrony", false,
                  e.what());
    }

    // ---- 5. weight functionals ------------------------------------------
    try {
        WeightFn a = sine_weight(-0.3);
        const double gamma = a.gamma();
        const double gamma_oracle = 0.5 - std::asin(0.3) / kPi;
        bool ok = std::abs(gamma - gamma_oracle) <= 1e-6;
        for (double delta : {gamma, gamma / 2, gamma / 8})
            ok = ok && std::abs(a_star(a, delta) - a_star_oracle(delta)) <= 1e-6;
        ok = ok && std::abs(a_star(a, gamma) - 0.1827428) <= 1e-5;
        criterion(5, "gamma and A*(delta) match the window oracle", ok,
                  "A*(gamma)=" + std::to_string(a_star(a, gamma)));
    } catch (const Error& e) {
        criterion(5, "gamma and A*(delta) match the window oracle", false, e.what());
    }

    // ---- 6. applicability table of the operator zoo ----------------------
    try {
        bool ok = true;
        // p = 2 Laplacian is the identity field
        ok = ok && check_superlinear_zero(HOperator::p_laplacian(2), GNonlinearity::power(3))
                       .pass();
        ok = ok && check_superlinear_infinity(HOperator::p_laplacian(2), GNonlinearity::power(3))
                       .pass();
        ok = ok && check_superlinear_zero(HOperator::minkowski(), GNonlinearity::power(2)).pass();
        ok = ok && check_superlinear_infinity(HOperator::minkowski(), GNonlinearity::power(2))
                           .verdict == Verdict::Fail;
        ok = ok && check_pt_growth(GNonlinearity::power(5), 4.0).pass();
        ok = ok && check_superlinear_zero(HOperator::pt_laplacian(3, 1, 1),
                                          GNonlinearity::power(5)).pass();
        ok = ok && check_superlinear_infinity(HOperator::pt_laplacian(3, 1, 1),
                                              GNonlinearity::power(5)).pass();
        // stability under 2x refinement
        ok = ok && check_superlinear_zero(HOperator::minkowski(), GNonlinearity::power(2), {1, -1, 10, -10}, 2).pass();
        ok = ok && check_superlinear_infinity(HOperator::minkowski(), GNonlinearity::power(2),
                                              {1, -1, 10, -10}, 2).verdict == Verdict::Fail;
        ok = ok && check_pt_growth(GNonlinearity::power(5), 4.0, 2).pass();
        ok = ok && check_superlinear_zero(HOperator::p_laplacian(2), GNonlinearity::power(3),
                                          {1, -1, 10, -10}, 2).pass();
        criterion(6, "operator-zoo applicability table, stable under refinement", ok);
    } catch (const Error& e) {
        criterion(6, "operator-zoo applicability table, stable under refinement", false, e.what());
    }

    // ---- 7. threshold consistency ----------------------------------------
    try {
        Thresholds star = lambda_star(p1_thresholds(), 1.0);
        bool ok = std::isfinite(star.lambda_star) && star.lambda_star > 0;

        SystemInstance hot = p1_system(2 * star.lambda_star);
        ProbeReport probe = nonexistence_probe(hot, 1.0, {1.0}, 25, 1e-9);
        bool banded = false;
        for (const auto& t : probe.per_theta)
            banded = banded || (t.found && std::abs(probe.r - 1.0) < 0.05);
        ok = ok && !banded;

        Thresholds rof = R_of_lambda(p1_thresholds(1.0), 1.0);
        ok = ok && std::isfinite(rof.R);
        for (const auto& [k, v] : rof.margins) ok = ok && v >= kMarginMu;
        criterion(7, "lambda*(R) finite, no R-sized orbit at 2 lambda*, R(lambda) margins", ok,
                  "lambda*=" + std::to_string(star.lambda_star) + " R(1)=" + std::to_string(rof.R));
    } catch (const Error& e) {
        criterion(7, "lambda*(R) finite, no R-sized orbit at 2 lambda*, R(lambda) margins", false,
                  e.what());
    }

    // ---- 8. winding engine -----------------------------------------------
    try {
        const Rectangle unit{0, 0, 1, 1};
        bool ok = true;
        for (int n : {1, 2, 3}) {
            auto F = [n](double x, double y) -> Vec2 {
                const std::complex<double> w = std::pow(std::complex<double>{x, y}, n);
                return {w.real(), w.imag()};
            };
            auto d1 = winding_degree(F, unit, 4096, 64);
            auto d2 = winding_degree(F, unit, 8192, 128);
            ok = ok && d1.degree == n && d1.certified && d2.degree == n && d2.certified;
        }
        auto refl = winding_degree([](double x, double y) -> Vec2 { return {x, -y}; }, unit);
        ok = ok && refl.degree == -1 && refl.certified;
        std::mt19937 rng(42);
        std::uniform_real_distribution<double> co(-2.0, 2.0);
        int done = 0;
        while (done < 20) {
            const double m00 = co(rng), m01 = co(rng), m10 = co(rng), m11 = co(rng);
            const double det = m00 * m11 - m01 * m10;
            if (std::abs(det) < 0.1) continue;
            auto d = winding_degree(
                [&](double x, double y) -> Vec2 { return {m00 * x + m01 * y, m10 * x + m11 * y}; },
                unit);
            ok = ok && d.certified && d.degree == (det > 0 ? 1 : -1);
            ++done;
        }
        criterion(8, "winding engine: powers, reflection, 20 random linear maps", ok);
    } catch (const Error& e) {
        criterion(8, "winding engine: powers, reflection, 20 random linear maps", false, e.what());
    }

    // ---- 9. maximum-principle validators ----------------------------------
    try {
        bool ok = true;
        if (have_orbit) {
            SystemInstance sys = p1_system();
            PositivityReport rep = validate_positive(sys, found_orbit, 20000);
            ok = ok && rep.strong_ok && rep.min_u > 0 && rep.weak_ok;
        } else {
            ok = false;
        }
        WeightFn a = sine_weight(-0.3);
        ok = ok && check_strong_max_Linf(HOperator::identity(), GNonlinearity::power(3), 1.0, a)
                       .pass();
        ok = ok && check_strong_max_Linf(HOperator::identity(), GNonlinearity::power(0.5), 1.0, a)
                           .verdict == Verdict::Fail;
        criterion(9, "maximum principles: accepted orbits positive, Linf divergence split", ok);
    } catch (const Error& e) {
        criterion(9, "maximum principles: accepted orbits positive, Linf divergence split", false,
                  e.what());
    }

    std::printf("%s: %d criterion(s) failed\n", g_failures == 0 ? "ACCEPTANCE PASS" : "ACCEPTANCE FAIL",
                g_failures);
    return g_failures == 0 ? 0 : 1;
}
