#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "persol/hypotheses.hpp"

using namespace persol;

namespace {

WeightFn sine_weight(double offset) {
    WeightSpec s;
    s.family = "sine";
    s.offset = offset;
    s.period = 1.0;
    return build_weight(s);
}

GNonlinearity g_sqrt() { return GNonlinearity::power(0.5); }

// g(s) = s^{2 + sin(ln s)}: oscillating exponent, not regularly oscillating
GNonlinearity g_log_osc() {
    return GNonlinearity::custom([](double s) {
        if (s <= 0) return 0.0;
        return std::pow(s, 2.0 + std::sin(std::log(s)));
    });
}

GNonlinearity g_exp_flat() {
    return GNonlinearity::custom([](double s) { return s <= 0 ? 0.0 : std::exp(-1.0 / s); });
}

ThresholdSystem p1_thresholds(double lambda = 50.0) {
    return {HOperator::identity(), GNonlinearity::power(3), sine_weight(-0.3), lambda,
            std::nullopt, 1e-2};
}

}  // namespace

TEST_CASE("superlinear zero condition") {
    auto cube = check_superlinear_zero(HOperator::identity(), GNonlinearity::power(3), {1.0});
    CHECK(cube.verdict == Verdict::Pass);
    CHECK(cube.slope == doctest::Approx(2.0).epsilon(1e-3));

    auto lin = check_superlinear_zero(HOperator::identity(), GNonlinearity::power(1), {1.0});
    CHECK(lin.verdict == Verdict::Fail);
    CHECK(std::abs(lin.slope) < 1e-6);

    auto mink = check_superlinear_zero(HOperator::minkowski(), GNonlinearity::power(2));
    CHECK(mink.verdict == Verdict::Pass);
}

TEST_CASE("superlinear infinity condition") {
    auto cube = check_superlinear_infinity(HOperator::identity(), GNonlinearity::power(3));
    CHECK(cube.verdict == Verdict::Pass);

    auto mink = check_superlinear_infinity(HOperator::minkowski(), GNonlinearity::power(3));
    CHECK(mink.verdict == Verdict::Fail);

    // alpha beta = 3 > 1 via the cubic power operator with linear g
    auto ab = check_superlinear_infinity(HOperator::power(3), GNonlinearity::power(1));
    CHECK(ab.verdict == Verdict::Pass);
    CHECK(ab.slope == doctest::Approx(2.0).epsilon(1e-3));
}

TEST_CASE("regular oscillation at zero") {
    auto cube = check_regular_oscillation(GNonlinearity::power(3));
    CHECK(cube.verdict == Verdict::Pass);
    CHECK(cube.extra.at("C_g") == doctest::Approx(3.0).epsilon(1e-3));

    auto quint = check_regular_oscillation(GNonlinearity::power(5));
    CHECK(quint.verdict == Verdict::Pass);

    CHECK(check_regular_oscillation(g_log_osc()).verdict == Verdict::Fail);
    CHECK(check_regular_oscillation(g_exp_flat()).verdict == Verdict::Fail);
}

TEST_CASE("strong maximum principle, L1 route") {
    WeightFn a = sine_weight(-0.3);
    auto cube = check_strong_max_L1(HOperator::identity(), GNonlinearity::power(3), 50.0, a);
    CHECK(cube.verdict == Verdict::Pass);

    auto root = check_strong_max_L1(HOperator::identity(), g_sqrt(), 50.0, a);
    CHECK(root.verdict == Verdict::Fail);

    auto cbrt = check_strong_max_L1(HOperator::power(1.0 / 3), GNonlinearity::power(3), 50.0, a);
    CHECK(cbrt.verdict == Verdict::Pass);
    const double K = 50.0 * a.neg_l1_norm();
    CHECK(cbrt.extra.at("beta") == doctest::Approx(std::cbrt(K)).epsilon(1e-6));
}

TEST_CASE("strong maximum principle, L-infinity route") {
    WeightFn a = sine_weight(-0.3);
    auto lin = check_strong_max_Linf(HOperator::identity(), GNonlinearity::power(1), 1.0, a);
    CHECK(lin.verdict == Verdict::Pass);  // borderline 1/s integrand diverges

    auto cube = check_strong_max_Linf(HOperator::identity(), GNonlinearity::power(3), 1.0, a);
    CHECK(cube.verdict == Verdict::Pass);
    CHECK(cube.extra.at("exponent_right") == doctest::Approx(-2.0).epsilon(0.02));

    auto root = check_strong_max_Linf(HOperator::identity(), g_sqrt(), 1.0, a);
    CHECK(root.verdict == Verdict::Fail);
    CHECK(root.extra.at("exponent_right") == doctest::Approx(-0.75).epsilon(0.02));
}

TEST_CASE("sigma conditions") {
    auto p3 = check_sigma_conditions(PhiOperator::p_power(3));
    CHECK(p3.verdict == Verdict::Pass);
    CHECK(p3.extra.at("zero_pass") == 1.0);
    CHECK(p3.extra.at("infinity_pass") == 1.0);

    auto pq = check_sigma_conditions(PhiOperator::pq(3, 2));
    CHECK(pq.verdict == Verdict::Pass);

    auto ex = check_sigma_conditions(PhiOperator::exp_odd());
    CHECK(ex.extra.at("zero_pass") == 1.0);
    CHECK(ex.extra.at("infinity_pass") == 0.0);
    CHECK(ex.verdict == Verdict::Fail);
}

TEST_CASE("p(t) growth conditions") {
    CHECK(check_pt_growth(GNonlinearity::power(5), 4.0).verdict == Verdict::Pass);
    CHECK(check_pt_growth(GNonlinearity::power(1), 4.0).verdict == Verdict::Fail);
}

TEST_CASE("verdicts are stable under probe-grid refinement") {
    struct Case {
        HOperator h;
        GNonlinearity g;
    };
    const Case zoo[] = {
        {HOperator::identity(), GNonlinearity::power(3)},
        {HOperator::identity(), GNonlinearity::power(1)},
        {HOperator::minkowski(), GNonlinearity::power(2)},
        {HOperator::p_laplacian(3), GNonlinearity::power(5)},
        {HOperator::pt_laplacian(3, 1, 1), GNonlinearity::power(5)},
        {HOperator::power(3), GNonlinearity::power(1)},
    };
    for (const auto& c : zoo) {
        CHECK(check_superlinear_zero(c.h, c.g, {1, -1, 10, -10}, 1).verdict ==
              check_superlinear_zero(c.h, c.g, {1, -1, 10, -10}, 2).verdict);
        CHECK(check_superlinear_infinity(c.h, c.g, {1, -1, 10, -10}, 1).verdict ==
              check_superlinear_infinity(c.h, c.g, {1, -1, 10, -10}, 2).verdict);
        CHECK(check_regular_oscillation(c.g, 1).verdict ==
              check_regular_oscillation(c.g, 2).verdict);
    }
}

TEST_CASE("zero condition implies the L1 strong maximum principle on the zoo") {
    WeightFn a = sine_weight(-0.3);
    struct Case {
        HOperator h;
        GNonlinearity g;
    };
    const Case zoo[] = {
        {HOperator::identity(), GNonlinearity::power(3)},
        {HOperator::minkowski(), GNonlinearity::power(2)},
        {HOperator::p_laplacian(3), GNonlinearity::power(5)},
        {HOperator::pt_laplacian(3, 1, 1), GNonlinearity::power(5)},
    };
    for (const auto& c : zoo) {
        if (check_superlinear_zero(c.h, c.g).verdict != Verdict::Pass) continue;
        for (double lambda : {1.0, 50.0, 1e3}) {
            CHECK(check_strong_max_L1(c.h, c.g, lambda, a).verdict == Verdict::Pass);
        }
    }
}

TEST_CASE("lambda_star on the cubic fixture") {
    Thresholds th = lambda_star(p1_thresholds(), 1.0);
    CHECK(th.lambda_star > 0);
    CHECK(std::isfinite(th.lambda_star));
    for (double c : {th.lambda1_minus, th.lambda1_plus, th.lambda2_minus, th.lambda2_plus}) {
        CHECK(c > 0);
        CHECK(std::isfinite(c));
    }
    CHECK(th.lambda_star ==
          std::max({th.lambda1_minus, th.lambda1_plus, th.lambda2_minus, th.lambda2_plus}));

    // analytic cross-check: with h = id the lambda1 boundary solves
    // (gamma/8) lambda g_low(R) A*(gamma/8) = (R/2)(1+mu)
    const WeightFn a = sine_weight(-0.3);
    const double gamma = a.gamma();
    const double formula = (0.5 * (1 + kMarginMu)) /
                           ((gamma / 8) * GNonlinearity::power(3).lower_env(1.0) *
                            a_star(a, gamma / 8));
    CHECK(th.lambda1_minus == doctest::Approx(formula).epsilon(1e-6));
    CHECK(th.lambda1_plus == doctest::Approx(formula).epsilon(1e-6));

    // alpha0 and R' dominate their defining quantities
    CHECK(th.alpha0 > 50.0 * a.l1_norm() * 1.0);
    CHECK(th.R_prime > 50.0 * a.l1_norm() + th.alpha0);
}

TEST_CASE("lambda_star boundary is sharp within 1e-6") {
    Thresholds th = lambda_star(p1_thresholds(), 1.0);
    const WeightFn a = sine_weight(-0.3);
    const double gamma = a.gamma();
    const double gl = GNonlinearity::power(3).lower_env(1.0);
    auto cond1m = [&](double lam) {
        return (gamma / 8) * lam * gl * a_star(a, gamma / 8) >= 0.5 * (1 + kMarginMu);
    };
    CHECK(cond1m(th.lambda1_minus * (1 + 1e-5)));
    CHECK_FALSE(cond1m(th.lambda1_minus * (1 - 1e-5)));
}

TEST_CASE("doubling the margin never decreases lambda_star") {
    Thresholds a = lambda_star(p1_thresholds(), 1.0, kMarginMu);
    Thresholds b = lambda_star(p1_thresholds(), 1.0, 2 * kMarginMu);
    CHECK(b.lambda_star >= a.lambda_star);
}

TEST_CASE("bounded h makes eta infeasible for large R") {
    ThresholdSystem sys{HOperator::minkowski(), GNonlinearity::power(3), sine_weight(-0.3), 1.0,
                        std::nullopt, 1e-2};
    CHECK_THROWS_AS(lambda_star(sys, 1.0), EtaInfeasible);
}

TEST_CASE("R_of_lambda on the cubic fixture") {
    Thresholds th = R_of_lambda(p1_thresholds(1.0), 1.0);
    CHECK(std::isfinite(th.R));
    CHECK(th.R > 1.0);
    for (const auto& [k, v] : th.margins) CHECK(v >= kMarginMu);

    Thresholds th_hot = R_of_lambda(p1_thresholds(1e3), 1e3);
    CHECK(th_hot.R <= th.R);
}

TEST_CASE("R_of_lambda reports failure for bounded h") {
    ThresholdSystem sys{HOperator::minkowski(), GNonlinearity::power(3), sine_weight(-0.3), 1.0,
                        std::nullopt, 1e-2};
    CHECK_THROWS_AS(R_of_lambda(sys, 1.0), NoRFound);
}

TEST_CASE("bounded h admits finite thresholds at small R") {
    // minkowski h saturates at 1, so eta exists only when R < gamma/2
    ThresholdSystem sys{HOperator::minkowski(), GNonlinearity::power(2), sine_weight(-0.3), 1.0,
                        std::nullopt, 1e-3};
    Thresholds th = lambda_star(sys, 0.1);
    CHECK(std::isfinite(th.lambda_star));
    CHECK(th.lambda_star > 0);
    CHECK(th.eta > 0);
    // hand-derived boundary: (gamma/8) x / sqrt(1+x^2) = (R/2)(1+mu) at
    // x = lambda g_low(R) A*(gamma/8)
    const WeightFn a = sine_weight(-0.3);
    const double gamma = a.gamma();
    const double target = (0.05 * (1 + kMarginMu)) / (gamma / 8);
    const double x = target / std::sqrt(1 - target * target);
    const double formula = x / (GNonlinearity::power(2).lower_env(0.1) * a_star(a, gamma / 8));
    CHECK(th.lambda1_minus == doctest::Approx(formula).epsilon(1e-4));
}

TEST_CASE("strong-max and sigma verdicts are stable under refinement too") {
    WeightFn a = sine_weight(-0.3);
    for (const auto& g : {GNonlinearity::power(3), GNonlinearity::power(0.5),
                          GNonlinearity::power(1)}) {
        CHECK(check_strong_max_L1(HOperator::identity(), g, 50.0, a, 1).verdict ==
              check_strong_max_L1(HOperator::identity(), g, 50.0, a, 2).verdict);
        CHECK(check_strong_max_Linf(HOperator::identity(), g, 1.0, a, 1).verdict ==
              check_strong_max_Linf(HOperator::identity(), g, 1.0, a, 2).verdict);
    }
    for (const auto& phi : {PhiOperator::p_power(3), PhiOperator::exp_odd()}) {
        CHECK(check_sigma_conditions(phi, 1).verdict == check_sigma_conditions(phi, 2).verdict);
    }
    CHECK(check_pt_growth(GNonlinearity::power(5), 4.0, 1).verdict ==
          check_pt_growth(GNonlinearity::power(5), 4.0, 2).verdict);
}
