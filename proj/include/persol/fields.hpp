#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "persol/common.hpp"
#include "persol/quadrature.hpp"

namespace persol {

// ---------------------------------------------------------------------------
// h(t, s): T-periodic in t, strictly increasing in s, h(t,0) = 0.
// ---------------------------------------------------------------------------

class HOperator {
 public:
    double operator()(double t, double s) const { return eval_(t, s); }
    bool time_dependent() const { return time_dependent_; }
    double period() const { return T_; }
    const std::string& family() const { return family_; }
    int t_grid_n() const { return t_grid_n_; }
    // true when s -> h(t,s) has unbounded slope at s = 0 (sub-linear powers)
    bool kink_at_zero() const { return kink_at_zero_; }

    // Signed envelopes. For s >= 0, lower/upper are the min/max of h(.,s)
    // over one period; for s < 0 the roles swap, so that
    // lower(s)*s <= h(t,s)*s <= upper(s)*s for all t, s.
    double lower(double s) const {
        if (env_lower_) return env_lower_(s);
        if (!time_dependent_) return eval_(0.0, s);
        return s >= 0 ? extremize(s, /*want_max=*/false) : extremize(s, true);
    }
    double upper(double s) const {
        if (env_upper_) return env_upper_(s);
        if (!time_dependent_) return eval_(0.0, s);
        return s >= 0 ? extremize(s, true) : extremize(s, false);
    }

    static HOperator identity() {
        HOperator h;
        h.family_ = "identity";
        h.eval_ = [](double, double s) { return s; };
        return h;
    }

    // h(s) = |s|^(alpha-1) s, the inverse-free power field of the
    // quasi-homogeneous model system.
    static HOperator power(double alpha) {
        if (!(alpha > 0) || !std::isfinite(alpha)) throw InvalidParameter("h power: alpha must be > 0");
        HOperator h;
        h.family_ = "power";
        h.eval_ = [alpha](double, double s) { return signed_pow(s, alpha); };
        h.kink_at_zero_ = alpha < 1;
        return h;
    }

    // h = phi_p^{-1}: |s|^{1/(p-1)} sign(s).
    static HOperator p_laplacian(double p) {
        if (!(p > 1) || !std::isfinite(p)) throw InvalidParameter("h p_laplacian: need p > 1");
        return power_with_family(1.0 / (p - 1.0), "p_laplacian");
    }

    // h = phi^{-1} for phi(s) = |s|^{p-2}s + |s|^{q-2}s, 1 <= q < p.
    static HOperator pq_laplacian(double p, double q);

    // h(t,v) = |v|^{1/(p(t)-1)} sign(v) with p(t) = p0 + p_amp sin(2 pi t / T + phase).
    static HOperator pt_laplacian(double p0, double p_amp, double T, double phase = 0.0) {
        const double p_lo = p0 - std::abs(p_amp), p_hi = p0 + std::abs(p_amp);
        if (!(p_lo > 1)) throw InvalidParameter("h pt_laplacian: need p(t) > 1 for all t");
        if (!(T > 0)) throw InvalidParameter("h pt_laplacian: need T > 0");
        HOperator h;
        h.family_ = "pt_laplacian";
        h.T_ = T;
        h.time_dependent_ = true;
        h.eval_ = [p0, p_amp, T, phase](double t, double v) {
            const double p = p0 + p_amp * std::sin(2 * kPi * t / T + phase);
            return signed_pow(v, 1.0 / (p - 1.0));
        };
        h.kink_at_zero_ = p_hi > 2.0;
        const double e_min = 1.0 / (p_hi - 1.0), e_max = 1.0 / (p_lo - 1.0);
        // |v|^e is monotone in e at fixed |v|; extremes sit at p_lo / p_hi.
        auto mag_min = [e_min, e_max](double m) { return m <= 1.0 ? std::pow(m, e_max) : std::pow(m, e_min); };
        auto mag_max = [e_min, e_max](double m) { return m <= 1.0 ? std::pow(m, e_min) : std::pow(m, e_max); };
        h.env_lower_ = [mag_min](double s) { return s == 0 ? 0.0 : std::copysign(mag_min(std::abs(s)), s); };
        h.env_upper_ = [mag_max](double s) { return s == 0 ? 0.0 : std::copysign(mag_max(std::abs(s)), s); };
        return h;
    }

    // h(s) = s / sqrt(1 + s^2), inverse of the Minkowski curvature operator.
    static HOperator minkowski() {
        HOperator h;
        h.family_ = "minkowski";
        h.eval_ = [](double, double s) { return s / std::sqrt(1.0 + s * s); };
        return h;
    }

    static HOperator custom(std::function<double(double, double)> f, double T, bool time_dep,
                            int t_grid_n = 1000) {
        HOperator h;
        h.family_ = "custom";
        h.eval_ = std::move(f);
        h.T_ = T;
        h.time_dependent_ = time_dep;
        h.t_grid_n_ = t_grid_n;
        h.kink_at_zero_ = true;
        return h;
    }

 private:
    static HOperator power_with_family(double alpha, std::string family) {
        HOperator h = power(alpha);
        h.family_ = std::move(family);
        return h;
    }

    double extremize(double s, bool want_max) const {
        const int n = t_grid_n_;
        double best_t = 0, best = want_max ? -std::numeric_limits<double>::infinity()
                                           : std::numeric_limits<double>::infinity();
        for (int i = 0; i < n; ++i) {
            const double t = T_ * i / n;
            const double v = eval_(t, s);
            if (want_max ? v > best : v < best) { best = v; best_t = t; }
        }
        // refine x4 around the extremizing cell
        const double cell = T_ / n;
        for (int i = -4; i <= 4; ++i) {
            const double t = best_t + cell * i / 4.0;
            const double v = eval_(t, s);
            if (want_max ? v > best : v < best) best = v;
        }
        return best;
    }

    std::string family_ = "custom";
    double T_ = 1.0;
    bool time_dependent_ = false;
    bool kink_at_zero_ = false;
    int t_grid_n_ = 1000;
    std::function<double(double, double)> eval_;
    std::function<double(double)> env_lower_, env_upper_;
};

struct HEnvelopes {
    double lower = 0, upper = 0;
};

inline HEnvelopes h_envelopes(const HOperator& h, double s) { return {h.lower(s), h.upper(s)}; }

// ---------------------------------------------------------------------------
// g: [0, inf) -> [0, inf), g(0) = 0, g > 0 on (0, inf).
// ---------------------------------------------------------------------------

class GNonlinearity {
 public:
    double operator()(double s) const { return eval_(s); }
    const std::string& family() const { return family_; }
    bool has_derivative() const { return static_cast<bool>(deriv_); }

    double derivative(double s) const {
        if (deriv_) return deriv_(s);
        const double step = 1e-6 * (1.0 + std::abs(s));
        const double lo = std::max(0.0, s - step);
        return (eval_(s + step) - eval_(lo)) / (s + step - lo);
    }

    // \bar g(s) = max of g on [0, s].
    double upper_env(double s, int scan_n = 10000) const {
        double best = 0, t_best = 0;
        for (int i = 0; i <= scan_n; ++i) {
            const double x = s * i / scan_n;
            const double v = eval_(x);
            if (v > best) { best = v; t_best = x; }
        }
        const double cell = s / scan_n;
        const double x = golden_section_max([this](double q) { return eval_(q); },
                                            std::max(0.0, t_best - cell),
                                            std::min(s, t_best + cell), s * 1e-12);
        return std::max(best, eval_(x));
    }

    // \underline g(s) = min of g on [s/2, s].
    double lower_env(double s, int scan_n = 10000) const {
        double best = std::numeric_limits<double>::infinity(), t_best = s;
        for (int i = 0; i <= scan_n; ++i) {
            const double x = 0.5 * s + 0.5 * s * i / scan_n;
            const double v = eval_(x);
            if (v < best) { best = v; t_best = x; }
        }
        const double cell = 0.5 * s / scan_n;
        const double x = golden_section_min([this](double q) { return eval_(q); },
                                            std::max(0.5 * s, t_best - cell),
                                            std::min(s, t_best + cell), s * 1e-12);
        return std::min(best, eval_(x));
    }

    static GNonlinearity power(double beta) {
        if (!(beta > 0) || !std::isfinite(beta)) throw InvalidParameter("g power: beta must be > 0");
        GNonlinearity g;
        g.family_ = "power";
        g.eval_ = [beta](double s) { return std::pow(s, beta); };
        g.deriv_ = [beta](double s) { return s == 0 ? (beta > 1 ? 0.0 : std::numeric_limits<double>::infinity())
                                                    : beta * std::pow(s, beta - 1.0); };
        return g;
    }

    // g(s) = s^beta (c0 + c1 sin s); requires c0 > |c1| so g > 0.
    static GNonlinearity power_mod(double beta, double c0, double c1) {
        if (!(beta > 0) || !(c0 > std::abs(c1)))
            throw InvalidParameter("g power_mod: need beta > 0 and c0 > |c1|");
        GNonlinearity g;
        g.family_ = "power_mod";
        g.eval_ = [beta, c0, c1](double s) { return std::pow(s, beta) * (c0 + c1 * std::sin(s)); };
        g.deriv_ = [beta, c0, c1](double s) {
            if (s == 0) return beta > 1 ? 0.0 : (beta == 1 ? c0 : std::numeric_limits<double>::infinity());
            return beta * std::pow(s, beta - 1.0) * (c0 + c1 * std::sin(s)) + std::pow(s, beta) * c1 * std::cos(s);
        };
        return g;
    }

    static GNonlinearity custom(std::function<double(double)> f,
                                std::function<double(double)> df = nullptr) {
        GNonlinearity g;
        g.family_ = "custom";
        g.eval_ = std::move(f);
        g.deriv_ = std::move(df);
        return g;
    }

 private:
    std::string family_ = "custom";
    std::function<double(double)> eval_;
    std::function<double(double)> deriv_;
};

struct GEnvelopes {
    double upper = 0, lower = 0;
};

inline GEnvelopes g_envelopes(const GNonlinearity& g, double s) {
    if (!(s > 0)) throw InvalidParameter("g_envelopes: s must be positive");
    return {g.upper_env(s), g.lower_env(s)};
}

// ---------------------------------------------------------------------------
// phi: increasing homeomorphism of R with phi(0) = 0.
// ---------------------------------------------------------------------------

class PhiOperator {
 public:
    double operator()(double s) const { return eval_(s); }
    const std::string& family() const { return family_; }
    bool has_analytic_inverse() const { return static_cast<bool>(inverse_); }
    double analytic_inverse(double w) const { return inverse_(w); }

    static PhiOperator p_power(double p) {
        if (!(p > 1)) throw InvalidParameter("phi p_power: need p > 1");
        PhiOperator phi;
        phi.family_ = "p_power";
        phi.eval_ = [p](double s) { return signed_pow(s, p - 1.0); };
        phi.inverse_ = [p](double w) { return signed_pow(w, 1.0 / (p - 1.0)); };
        return phi;
    }

    static PhiOperator pq(double p, double q) {
        if (!(1 <= q) || !(q < p)) throw InvalidParameter("phi pq: need 1 <= q < p");
        PhiOperator phi;
        phi.family_ = "pq";
        phi.eval_ = [p, q](double s) { return signed_pow(s, p - 1.0) + signed_pow(s, q - 1.0); };
        return phi;
    }

    // phi(s) = s / sqrt(1 - s^2) on ]-1, 1[, with global inverse w / sqrt(1 + w^2).
    static PhiOperator minkowski() {
        PhiOperator phi;
        phi.family_ = "minkowski";
        phi.eval_ = [](double s) {
            if (std::abs(s) >= 1.0) return std::copysign(std::numeric_limits<double>::infinity(), s);
            return s / std::sqrt(1.0 - s * s);
        };
        phi.inverse_ = [](double w) { return w / std::sqrt(1.0 + w * w); };
        return phi;
    }

    // Odd extension of e^s - 1; violates the sigma-condition at infinity.
    static PhiOperator exp_odd() {
        PhiOperator phi;
        phi.family_ = "exp_odd";
        phi.eval_ = [](double s) { return std::copysign(std::expm1(std::abs(s)), s); };
        phi.inverse_ = [](double w) { return std::copysign(std::log1p(std::abs(w)), w); };
        return phi;
    }

    static PhiOperator custom(std::function<double(double)> f,
                              std::function<double(double)> inv = nullptr) {
        PhiOperator phi;
        phi.family_ = "custom";
        phi.eval_ = std::move(f);
        phi.inverse_ = std::move(inv);
        return phi;
    }

 private:
    std::string family_ = "custom";
    std::function<double(double)> eval_;
    std::function<double(double)> inverse_;
};

// Solve phi(s) = w. Closed form when available, else bracketing bisection on
// the monotone phi. A phi whose image never reaches w (bounded image: the
// operator was mis-specified) exhausts the expansion and raises NoBracket.
inline double invert_phi(const PhiOperator& phi, double w) {
    if (phi.has_analytic_inverse()) return phi.analytic_inverse(w);
    if (w == 0) return 0.0;
    // expand bracket
    double lo = 0, hi = std::copysign(1.0, w);
    while (true) {
        const double v = phi(hi);
        if ((w > 0 && v >= w) || (w < 0 && v <= w)) break;
        lo = hi;
        hi *= 2;
        if (std::abs(hi) > 1e300)
            throw NoBracket("invert_phi: could not bracket; phi does not reach the target");
    }
    if (lo > hi) std::swap(lo, hi);
    double s = bisect_root([&](double x) { return phi(x) - w; }, lo, hi,
                           1e-15 * (1.0 + std::max(std::abs(lo), std::abs(hi))), 300);
    // Newton polish with secant derivative
    for (int i = 0; i < 3; ++i) {
        const double fs = phi(s) - w;
        const double ds = 1e-7 * (1.0 + std::abs(s));
        const double dphi = (phi(s + ds) - phi(s - ds)) / (2 * ds);
        if (dphi <= 0 || !std::isfinite(dphi)) break;
        const double s_next = s - fs / dphi;
        if (!std::isfinite(s_next)) break;
        if (std::abs(phi(s_next) - w) < std::abs(fs)) s = s_next; else break;
    }
    return s;
}

inline HOperator HOperator::pq_laplacian(double p, double q) {
    PhiOperator phi = PhiOperator::pq(p, q);
    HOperator h;
    h.family_ = "pq_laplacian";
    h.eval_ = [phi](double, double v) { return invert_phi(phi, v); };
    h.kink_at_zero_ = q > 2;
    return h;
}

// ---------------------------------------------------------------------------
// Primitives \underline H(s) = int_0^s \underline h and G(s) = int_0^s g, with
// the left/right inverses of \underline H used by the strong maximum
// principle.
// ---------------------------------------------------------------------------

inline double h_lower_primitive(const HOperator& h, double s, double tol = 1e-10) {
    auto f = [&h](double x) { return h.lower(x); };
    if (s >= 0) return integrate_adaptive(f, 0.0, s, tol);
    return -integrate_adaptive(f, s, 0.0, tol);
}

inline double g_primitive(const GNonlinearity& g, double s, double tol = 1e-10) {
    if (s < 0) throw InvalidParameter("g_primitive: s must be >= 0");
    return integrate_adaptive([&g](double x) { return g(x); }, 0.0, s, tol);
}

namespace detail {

inline void check_inverse_domain(const HOperator& h, double value, double eta) {
    const double cap = std::min(h_lower_primitive(h, -eta), h_lower_primitive(h, eta));
    if (value > cap * (1.0 + 1e-12))
        throw InverseOutOfRange("primitive inverse: value exceeds min{H(-eta), H(eta)}");
}

}  // namespace detail

namespace detail {

// Solve \underline H(sign * m) = value for the magnitude m in [0, eta].
// Roots can sit many orders of magnitude below eta, so the bisection uses a
// relative width criterion and relative-controlled quadrature.
inline double primitive_inverse_magnitude(const HOperator& h, double value, double eta,
                                          double sign_dir) {
    auto H = [&](double m) {
        return integrate_adaptive_rel([&](double x) { return h.lower(sign_dir * x); }, 0.0, m,
                                      1e-11) * sign_dir;
    };
    double lo = 0.0, hi = eta;
    for (int i = 0; i < 400 && (hi - lo) > 1e-12 * hi; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (H(mid) < value) lo = mid; else hi = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace detail

// Right inverse: the s in [0, eta] with \underline H(s) = value.
inline double h_lower_primitive_inv_right(const HOperator& h, double value, double eta) {
    if (value < 0) throw InverseOutOfRange("primitive inverse: negative value");
    detail::check_inverse_domain(h, value, eta);
    if (value == 0) return 0.0;
    return detail::primitive_inverse_magnitude(h, value, eta, +1.0);
}

// Left inverse: the s in [-eta, 0] with \underline H(s) = value.
inline double h_lower_primitive_inv_left(const HOperator& h, double value, double eta) {
    if (value < 0) throw InverseOutOfRange("primitive inverse: negative value");
    detail::check_inverse_domain(h, value, eta);
    if (value == 0) return 0.0;
    return -detail::primitive_inverse_magnitude(h, value, eta, -1.0);
}

}  // namespace persol
