#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <sstream>

#include "persol/flow.hpp"
#include "persol/quadrature.hpp"

using namespace persol;

namespace {

WeightFn const_weight(double value, double T = 1.0) {
    WeightSpec s;
    s.family = "constant";
    s.value = value;
    s.period = T;
    return build_weight(s);
}

WeightFn p1_weight() {
    WeightSpec s;
    s.family = "sine";
    s.offset = -0.3;
    s.period = 1.0;
    return build_weight(s);
}

SystemInstance p1_system(double lambda = 50.0) {
    return {HOperator::identity(), GNonlinearity::power(3), p1_weight(), lambda,
            SystemMode::Extended};
}

// Quadrature oracle for the quartic-center period: 4 sqrt(2) int_0^1
// (1-u^4)^{-1/2} du, desingularized via u = 1 - x^2.
double quartic_period_oracle() {
    auto f = [](double x) {
        const double u = 1.0 - x * x;
        return 2.0 / std::sqrt(1.0 + u + u * u + u * u * u);
    };
    return 4.0 * std::sqrt(2.0) * integrate_adaptive(f, 0.0, 1.0, 1e-13);
}

}  // namespace

TEST_CASE("harmonic oscillator returns to its start") {
    // u' = v, v' = -u: raw mode, constant weight 1, g(s) = s
    SystemInstance sys{HOperator::identity(), GNonlinearity::power(1), const_weight(1.0), 1.0,
                       SystemMode::Raw};
    auto tr = integrate(sys, {1.0, 0.0}, 0.0, 2 * kPi, 1e-10);
    const Vec2 z = tr.state_end();
    CHECK(std::abs(z[0] - 1.0) < 1e-8);
    CHECK(std::abs(z[1]) < 1e-8);

    // dense output against the analytic solution
    for (int i = 1; i < 100; ++i) {
        const double t = 2 * kPi * i / 100;
        const Vec2 y = tr.eval(t);
        CHECK(std::abs(y[0] - std::cos(t)) < 1e-7);
        CHECK(std::abs(y[1] + std::sin(t)) < 1e-7);
    }
}

TEST_CASE("extended system rests at the origin") {
    auto tr = integrate(p1_system(), {0.0, 0.0}, 0.0, 1.0, 1e-10);
    const Vec2 z = tr.state_end();
    CHECK(z[0] == 0.0);
    CHECK(z[1] == 0.0);
}

TEST_CASE("quartic center period from a trajectory") {
    SystemInstance sys{HOperator::identity(), GNonlinearity::power(3), const_weight(1.0), 1.0,
                       SystemMode::Raw};
    const double tau = quartic_period_oracle();
    auto tr = integrate(sys, {1.0, 0.0}, 0.0, tau, 1e-11);
    const Vec2 z = tr.state_end();
    CHECK(std::abs(z[0] - 1.0) < 1e-6);
    CHECK(std::abs(z[1]) < 1e-6);
}

TEST_CASE("steps hand off bit-equal across breakpoints") {
    WeightSpec s;
    s.family = "piecewise_constant";
    s.period = 1.0;
    s.breaks = {0.0, 0.4};
    s.values = {1.0, -1.0};
    SystemInstance sys{HOperator::identity(), GNonlinearity::power(3), build_weight(s), 5.0,
                       SystemMode::Extended};
    auto tr = integrate(sys, {0.7, 0.2}, 0.0, 2.0, 1e-10);
    const auto& steps = tr.steps();
    REQUIRE(steps.size() > 2);
    bool saw_breakpoint = false;
    for (std::size_t i = 0; i + 1 < steps.size(); ++i) {
        CHECK(std::memcmp(&steps[i].y1, &steps[i + 1].y0, sizeof(Vec2)) == 0);
        if (steps[i + 1].t0 == 0.4 || steps[i + 1].t0 == 1.0 || steps[i + 1].t0 == 1.4)
            saw_breakpoint = true;
    }
    CHECK(saw_breakpoint);
}

TEST_CASE("autonomous energy is conserved") {
    // raw mode, a = 1, h = id, g = s^3: H = u^4/4 + v^2/2
    SystemInstance sys{HOperator::identity(), GNonlinearity::power(3), const_weight(1.0), 1.0,
                       SystemMode::Raw};
    const double tol = 1e-10;
    auto tr = integrate(sys, {1.0, 0.0}, 0.0, quartic_period_oracle(), tol);
    auto H = [](const Vec2& z) { return 0.25 * std::pow(z[0], 4) + 0.5 * z[1] * z[1]; };
    CHECK(std::abs(H(tr.state_end()) - H(tr.state_begin())) < 10 * tol);
}

TEST_CASE("poincare of the harmonic oscillator is the identity") {
    SystemInstance sys{HOperator::identity(), GNonlinearity::power(1), const_weight(1.0, 2 * kPi),
                       1.0, SystemMode::Raw};
    auto pr = poincare(sys, {0.8, -0.4}, 1e-10);
    CHECK(std::abs(pr.P[0] - 0.8) < 1e-7);
    CHECK(std::abs(pr.P[1] + 0.4) < 1e-7);
    CHECK(std::abs(pr.J[0][0] - 1) < 1e-6);
    CHECK(std::abs(pr.J[0][1]) < 1e-6);
    CHECK(std::abs(pr.J[1][0]) < 1e-6);
    CHECK(std::abs(pr.J[1][1] - 1) < 1e-6);
}

TEST_CASE("halving the tolerance moves the map by less than the coarse error") {
    SystemInstance sys = p1_system();
    const Vec2 z0{0.41251773, 0.53605537};
    const Vec2 a = poincare_point(sys, z0, 1e-9);
    const Vec2 b = poincare_point(sys, z0, 1e-10);
    CHECK(std::hypot(a[0] - b[0], a[1] - b[1]) < 1e-6);
}

TEST_CASE("re-running at a tighter tolerance is self-consistent") {
    SystemInstance sys = p1_system();
    const Vec2 z0{0.5, 0.0};
    const Vec2 a = poincare_point(sys, z0, 1e-10);
    const Vec2 b = poincare_point(sys, z0, 1e-11);
    CHECK(std::hypot(a[0] - b[0], a[1] - b[1]) < 1e-8);
}

TEST_CASE("blow-up trips the guard") {
    SystemInstance sys = p1_system();
    CHECK_THROWS_AS(integrate(sys, {-1.0, 4.23}, 0.0, 1.0, 1e-9), StepUnderflow);
}

TEST_CASE("tolerance domain is validated") {
    SystemInstance sys = p1_system();
    CHECK_THROWS_AS(integrate(sys, {0.1, 0.0}, 0.0, 1.0, 1e-5), InvalidParameter);
    CHECK_THROWS_AS(integrate(sys, {0.1, 0.0}, 0.0, 1.0, 1e-14), InvalidParameter);
    CHECK_THROWS_AS(integrate(sys, {0.1, 0.0}, 1.0, 0.5, 1e-9), InvalidParameter);
}

TEST_CASE("raw mode flags dips below zero") {
    // a = +1 center: starting on the u-axis the orbit swings u negative
    SystemInstance sys{HOperator::identity(), GNonlinearity::power(3), const_weight(1.0), 1.0,
                       SystemMode::Raw};
    auto tr = integrate(sys, {1.0, 0.0}, 0.0, 5.0, 1e-10);
    CHECK(tr.weak_dip_flag());
}

TEST_CASE("capped poincare stops on the cap level") {
    SystemInstance sys = p1_system();
    const Vec2 z = poincare_capped(sys, {-1.0, 4.23}, 1e-9, 1e6);
    CHECK(std::max(std::abs(z[0]), std::abs(z[1])) == doctest::Approx(1e6).epsilon(1e-6));
    // a start that survives the whole period is returned unclamped
    const Vec2 ok = poincare_capped(sys, {0.5, 0.0}, 1e-9, 1e6);
    CHECK(std::max(std::abs(ok[0]), std::abs(ok[1])) < 10.0);
}

TEST_CASE("period map: isochronous harmonic center") {
    for (double E : {0.1, 1.0, 10.0}) {
        CHECK(std::abs(period_map(1, 1, 1, 1, E) - 2 * kPi) < 1e-6);
    }
}

TEST_CASE("period map: quartic center against the quadrature oracle") {
    const double tau = period_map(1, 1, 1, 3, 0.25);
    CHECK(std::abs(tau - quartic_period_oracle()) < 1e-6);
}

TEST_CASE("period map: quasi-homogeneity scaling") {
    const double t1 = period_map(1, 1, 1, 3, 2.0);
    const double t2 = period_map(1, 1, 1, 3, 32.0);  // E x 16 halves the period
    CHECK(t2 / t1 == doctest::Approx(0.5).epsilon(1e-5));
}

TEST_CASE("period map: superlinear limits") {
    double prev = std::numeric_limits<double>::infinity();
    std::vector<double> taus;
    for (double E : {1e-6, 1e-3, 1.0, 1e3, 1e6}) {
        const double t = period_map(1, 1, 1, 3, E);
        taus.push_back(t);
        CHECK(t < prev);
        prev = t;
    }
    CHECK(taus.front() / taus.back() > 1e2);
}

TEST_CASE("period map rejects bad energies") {
    CHECK_THROWS_AS(period_map(1, 1, 1, 3, 0.0), EnergyTooSmall);
    CHECK_THROWS_AS(period_map(1, 1, 1, 3, -1.0), EnergyTooSmall);
}

TEST_CASE("trajectory CSV has the declared shape") {
    SystemInstance sys = p1_system();
    auto tr = integrate(sys, {0.41251773, 0.53605537}, 0.0, 1.0, 1e-9);
    std::ostringstream os;
    trajectory_to_csv(tr, 1.0, os);
    const std::string text = os.str();
    CHECK(text.rfind("t,u,v\n", 0) == 0);
    std::size_t rows = std::count(text.begin(), text.end(), '\n') - 1;
    CHECK(rows >= 200);  // at least the uniform dense rows
}
