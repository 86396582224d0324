#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace persol {

inline constexpr double kPi = 3.141592653589793238462643383279502884;

// ---------------------------------------------------------------------------
// Error types
// ---------------------------------------------------------------------------

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct UnknownFamily : Error { using Error::Error; };
struct InvalidParameter : Error { using Error::Error; };
struct ConfigError : Error { using Error::Error; };

struct NoPositivity : Error { using Error::Error; };
struct DeltaOutOfRange : Error { using Error::Error; };

struct InverseOutOfRange : Error { using Error::Error; };
struct NoBracket : Error { using Error::Error; };

struct StepUnderflow : Error {
    StepUnderflow(const std::string& msg, double t, double u, double v)
        : Error(msg), t_last(t), u_last(u), v_last(v) {}
    double t_last, u_last, v_last;
};
struct NonFiniteState : Error { using Error::Error; };
struct EnergyTooSmall : Error { using Error::Error; };

struct EtaInfeasible : Error { using Error::Error; };
struct NoRFound : Error { using Error::Error; };

struct ZeroOnBoundary : Error { using Error::Error; };
struct Uncertified : Error { using Error::Error; };
struct BoundaryBlowup : Error {
    BoundaryBlowup(const std::string& msg, double s_lo, double s_hi)
        : Error(msg), arc_lo(s_lo), arc_hi(s_hi) {}
    double arc_lo, arc_hi;
};
struct NotNested : Error { using Error::Error; };

struct NoConvergence : Error { using Error::Error; };
struct SingularJacobian : Error {
    SingularJacobian(const std::string& msg, std::array<std::array<double, 2>, 2> jac)
        : Error(msg), jacobian(jac) {}
    std::array<std::array<double, 2>, 2> jacobian;
};
struct SeedInvalid : Error { using Error::Error; };

// ---------------------------------------------------------------------------
// Grids
// ---------------------------------------------------------------------------

inline std::vector<double> linspace(double a, double b, int n) {
    std::vector<double> xs(static_cast<std::size_t>(n));
    if (n == 1) { xs[0] = a; return xs; }
    for (int i = 0; i < n; ++i) xs[static_cast<std::size_t>(i)] = a + (b - a) * i / (n - 1);
    return xs;
}

inline std::vector<double> logspace(double lo, double hi, int n) {
    std::vector<double> xs(static_cast<std::size_t>(n));
    const double la = std::log(lo), lb = std::log(hi);
    if (n == 1) { xs[0] = lo; return xs; }
    for (int i = 0; i < n; ++i) xs[static_cast<std::size_t>(i)] = std::exp(la + (lb - la) * i / (n - 1));
    return xs;
}

// Least-squares slope of log(y) against log(x); non-finite or non-positive
// samples are skipped. Returns NaN when fewer than two usable points remain.
inline double loglog_slope(const std::vector<double>& xs, const std::vector<double>& ys) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int n = 0;
    for (std::size_t i = 0; i < xs.size() && i < ys.size(); ++i) {
        if (!(xs[i] > 0) || !(ys[i] > 0) || !std::isfinite(ys[i])) continue;
        const double lx = std::log(xs[i]), ly = std::log(ys[i]);
        sx += lx; sy += ly; sxx += lx * lx; sxy += lx * ly;
        ++n;
    }
    if (n < 2) return std::numeric_limits<double>::quiet_NaN();
    const double denom = n * sxx - sx * sx;
    if (denom == 0) return std::numeric_limits<double>::quiet_NaN();
    return (n * sxy - sx * sy) / denom;
}

// ---------------------------------------------------------------------------
// Scalar solvers
// ---------------------------------------------------------------------------

// Root of f on [a,b] with f(a), f(b) of opposite (weak) sign, by bisection.
inline double bisect_root(const std::function<double(double)>& f, double a, double b,
                          double xtol, int max_iter = 200) {
    double fa = f(a), fb = f(b);
    if (fa == 0) return a;
    if (fb == 0) return b;
    if ((fa > 0) == (fb > 0))
        throw NoBracket("bisect_root: endpoints do not bracket a sign change");
    for (int i = 0; i < max_iter && (b - a) > xtol; ++i) {
        const double m = 0.5 * (a + b);
        const double fm = f(m);
        if (fm == 0) return m;
        if ((fm > 0) == (fa > 0)) { a = m; fa = fm; } else { b = m; fb = fm; }
    }
    return 0.5 * (a + b);
}

// Solve f(x) = target for increasing f by expanding bracket then bisection.
inline double solve_increasing(const std::function<double(double)>& f, double target,
                               double x_guess, double xtol,
                               double x_limit = 1e12) {
    double lo = x_guess, hi = x_guess;
    double flo = f(lo), fhi = f(hi);
    double step = std::max(1.0, std::abs(x_guess));
    while (flo > target) {
        lo -= step; step *= 2;
        if (std::abs(lo) > x_limit) throw NoBracket("solve_increasing: no lower bracket");
        flo = f(lo);
    }
    step = std::max(1.0, std::abs(x_guess));
    while (fhi < target) {
        hi += step; step *= 2;
        if (std::abs(hi) > x_limit) throw NoBracket("solve_increasing: no upper bracket");
        fhi = f(hi);
    }
    return bisect_root([&](double x) { return f(x) - target; }, lo, hi, xtol);
}

// Golden-section minimizer on [a,b] for unimodal f; tolerance on x.
inline double golden_section_min(const std::function<double(double)>& f, double a, double b,
                                 double xtol, int max_iter = 200) {
    constexpr double invphi = 0.6180339887498949;
    double x1 = b - invphi * (b - a);
    double x2 = a + invphi * (b - a);
    double f1 = f(x1), f2 = f(x2);
    for (int i = 0; i < max_iter && (b - a) > xtol; ++i) {
        if (f1 < f2) {
            b = x2; x2 = x1; f2 = f1;
            x1 = b - invphi * (b - a); f1 = f(x1);
        } else {
            a = x1; x1 = x2; f1 = f2;
            x2 = a + invphi * (b - a); f2 = f(x2);
        }
    }
    return f1 < f2 ? x1 : x2;
}

inline double golden_section_max(const std::function<double(double)>& f, double a, double b,
                                 double xtol, int max_iter = 200) {
    return golden_section_min([&](double x) { return -f(x); }, a, b, xtol, max_iter);
}

// Reduce t into [0, T).
inline double wrap_period(double t, double T) {
    double r = std::fmod(t, T);
    if (r < 0) r += T;
    if (r >= T) r = 0;  // guards fmod returning T due to rounding
    return r;
}

inline double sign(double x) { return x > 0 ? 1.0 : (x < 0 ? -1.0 : 0.0); }

// |s|^p * sign(s), safe at s = 0 for any p > 0.
inline double signed_pow(double s, double p) {
    if (s == 0) return 0.0;
    return std::copysign(std::pow(std::abs(s), p), s);
}

}  // namespace persol
