#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>

#include "persol/common.hpp"

namespace persol {

namespace detail {

inline double adaptive_simpson_rec(const std::function<double(double)>& f, double a, double b,
                                   double fa, double fm, double fb, double whole, double tol,
                                   int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = f(lm), frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4 * frm + fb);
    const double delta = left + right - whole;
    if (depth <= 0 || std::abs(delta) <= 15.0 * tol)
        return left + right + delta / 15.0;
    return adaptive_simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
           adaptive_simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

}  // namespace detail

// Adaptive Simpson quadrature with absolute tolerance. The integrand is
// assumed finite on [a,b]; kinks are handled by subdivision.
inline double integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                                 double abs_tol = 1e-10, int max_depth = 52) {
    if (a == b) return 0.0;
    const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
    const double whole = (b - a) / 6.0 * (fa + 4 * fm + fb);
    return detail::adaptive_simpson_rec(f, a, b, fa, fm, fb, whole, abs_tol, max_depth);
}

// Relative-tolerance variant: a coarse composite pass sets the absolute
// budget, so integrals spanning many orders of magnitude stay cheap.
inline double integrate_adaptive_rel(const std::function<double(double)>& f, double a, double b,
                                     double rel_tol = 1e-12) {
    if (a == b) return 0.0;
    double coarse = 0;
    const int n = 16;
    for (int i = 0; i < n; ++i) {
        const double lo = a + (b - a) * i / n;
        const double hi = a + (b - a) * (i + 1) / n;
        coarse += (hi - lo) / 6.0 * (f(lo) + 4 * f(0.5 * (lo + hi)) + f(hi));
    }
    const double abs_tol = std::max(std::abs(coarse) * rel_tol, 1e-308);
    return integrate_adaptive(f, a, b, abs_tol);
}

}  // namespace persol
