#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <ostream>
#include <vector>

#include "persol/common.hpp"
#include "persol/fields.hpp"
#include "persol/weights.hpp"

namespace persol {

enum class SystemMode { Raw, Extended, ThetaHomotopy, AlphaPerturbed };

inline const char* to_string(SystemMode m) {
    switch (m) {
        case SystemMode::Raw: return "raw";
        case SystemMode::Extended: return "extended";
        case SystemMode::ThetaHomotopy: return "theta";
        case SystemMode::AlphaPerturbed: return "alpha";
    }
    return "?";
}

// One planar system u' = h(t,v), v' = -f(t,u) in one of its homotopy guises.
// In Raw mode g is extended oddly to u < 0; Extended uses the +u branch.
struct SystemInstance {
    HOperator h;
    GNonlinearity g;
    WeightFn a;
    double lambda = 1.0;
    SystemMode mode = SystemMode::Extended;
    double theta = 1.0;                  // ThetaHomotopy
    double alpha = 0.0;                  // AlphaPerturbed
    std::optional<WeightFn> w;           // AlphaPerturbed forcing weight

    double period() const { return a.period(); }

    SystemInstance with_mode(SystemMode m) const {
        SystemInstance s = *this;
        s.mode = m;
        return s;
    }
    SystemInstance with_theta(double th) const {
        if (!(th > 0) || th > 1) throw InvalidParameter("theta must lie in (0, 1]");
        SystemInstance s = *this;
        s.mode = SystemMode::ThetaHomotopy;
        s.theta = th;
        return s;
    }

    std::array<double, 2> rhs(double t, double u, double v) const {
        switch (mode) {
            case SystemMode::Raw: {
                const double gu = u >= 0 ? g(u) : -g(-u);
                return {h(t, v), -lambda * a(t) * gu};
            }
            case SystemMode::Extended:
                return {h(t, v), u >= 0 ? -lambda * a(t) * g(u) : u};
            case SystemMode::ThetaHomotopy:
                return {theta * h(t, v), theta * (u >= 0 ? -lambda * a(t) * g(u) : u)};
            case SystemMode::AlphaPerturbed: {
                const double base = u >= 0 ? -lambda * a(t) * g(u) : u;
                return {h(t, v), base - alpha * (*w)(t)};
            }
        }
        return {0, 0};
    }

    // Times in [0, T) where the right-hand side is non-smooth in t.
    std::vector<double> breakpoints() const {
        std::vector<double> bs = a.breakpoints();
        if (mode == SystemMode::AlphaPerturbed && w) {
            for (double b : w->breakpoints()) bs.push_back(b);
        }
        std::sort(bs.begin(), bs.end());
        bs.erase(std::unique(bs.begin(), bs.end()), bs.end());
        return bs;
    }
};

// ---------------------------------------------------------------------------
// Dormand-Prince 5(4) with dense output
// ---------------------------------------------------------------------------

namespace dopri5 {

inline constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
inline constexpr double a21 = 1.0 / 5;
inline constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
inline constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
inline constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                        a54 = -212.0 / 729;
inline constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                        a64 = 49.0 / 176, a65 = -5103.0 / 18656;
inline constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                        b5 = -2187.0 / 6784, b6 = 11.0 / 84;
inline constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                        e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
inline constexpr double d1 = -12715105075.0 / 11282082432.0;
inline constexpr double d3 = 87487479700.0 / 32700410799.0;
inline constexpr double d4 = -10690763975.0 / 1880347072.0;
inline constexpr double d5 = 701980252875.0 / 199316789632.0;
inline constexpr double d6 = -1453857185.0 / 822651844.0;
inline constexpr double d7 = 69997945.0 / 29380423.0;

}  // namespace dopri5

using Vec2 = std::array<double, 2>;

struct DenseStep {
    double t0 = 0, h = 0;
    Vec2 y0{}, y1{};
    Vec2 rc2{}, rc3{}, rc4{}, rc5{};  // rc1 == y0

    Vec2 eval(double t) const {
        const double th = (t - t0) / h;
        const double th1 = 1.0 - th;
        Vec2 out;
        for (int i = 0; i < 2; ++i)
            out[i] = y0[i] + th * (rc2[i] + th1 * (rc3[i] + th * (rc4[i] + th1 * rc5[i])));
        return out;
    }
    double eval1(double t, int i) const {
        const double th = (t - t0) / h;
        const double th1 = 1.0 - th;
        return y0[i] + th * (rc2[i] + th1 * (rc3[i] + th * (rc4[i] + th1 * rc5[i])));
    }
};

class Trajectory {
 public:
    double t_begin() const { return t_begin_; }
    double t_end() const { return t_end_; }
    const std::vector<DenseStep>& steps() const { return steps_; }
    int accepted() const { return accepted_; }
    int rejected() const { return rejected_; }
    double max_local_error() const { return max_local_error_; }
    bool weak_dip_flag() const { return weak_dip_flag_; }
    const std::vector<double>& event_times() const { return event_times_; }

    Vec2 state_begin() const { return steps_.empty() ? y_single_ : steps_.front().y0; }
    Vec2 state_end() const { return steps_.empty() ? y_single_ : steps_.back().y1; }

    Vec2 eval(double t) const {
        if (steps_.empty()) return y_single_;
        if (t <= steps_.front().t0) return steps_.front().y0;
        if (t >= t_end_) return steps_.back().y1;
        // last step with t0 <= t
        std::size_t lo = 0, hi = steps_.size() - 1;
        while (lo < hi) {
            const std::size_t mid = (lo + hi + 1) / 2;
            if (steps_[mid].t0 <= t) lo = mid; else hi = mid - 1;
        }
        return steps_[lo].eval(t);
    }

    struct Extrema {
        double min_u = 0, max_u = 0, argmin_t = 0, argmax_t = 0;
    };

    // Scan min/max of u over a uniform dense grid plus all step endpoints.
    Extrema u_extrema(int samples = 20000) const {
        Extrema e;
        e.min_u = std::numeric_limits<double>::infinity();
        e.max_u = -std::numeric_limits<double>::infinity();
        auto probe = [&](double t, double u) {
            if (u < e.min_u) { e.min_u = u; e.argmin_t = t; }
            if (u > e.max_u) { e.max_u = u; e.argmax_t = t; }
        };
        if (steps_.empty()) { probe(t_begin_, y_single_[0]); return e; }
        for (int i = 0; i <= samples; ++i) {
            const double t = t_begin_ + (t_end_ - t_begin_) * i / samples;
            probe(t, eval(t)[0]);
        }
        for (const auto& s : steps_) probe(s.t0, s.y0[0]);
        probe(t_end_, steps_.back().y1[0]);
        return e;
    }

 private:
    friend class Integrator;
    std::vector<DenseStep> steps_;
    Vec2 y_single_{};
    double t_begin_ = 0, t_end_ = 0;
    int accepted_ = 0, rejected_ = 0;
    double max_local_error_ = 0;
    bool weak_dip_flag_ = false;
    std::vector<double> event_times_;
};

struct IntegrateOptions {
    double tol = 1e-9;
    std::vector<double> stops;       // absolute times inside (t0, t1) where steps must land
    bool event_u = false;            // split at u sign changes
    bool event_v = false;            // split at v sign changes
    double blowup_norm = 1e12;
    double cap_norm = 0;             // > 0: stop when max(|u|,|v|) crosses this level
    double dip_tol = 0;              // > 0: set weak_dip flag when u < -10*dip_tol
    long max_steps = 2000000;
};

class Integrator {
 public:
    template <class RHS>
    static Trajectory run(RHS&& rhs, Vec2 y0, double t0, double t1, const IntegrateOptions& opt) {
        using namespace dopri5;
        if (!(t1 > t0)) throw InvalidParameter("integrate: t1 must exceed t0");
        if (!(opt.tol >= 1e-13 && opt.tol <= 1e-6))
            throw InvalidParameter("integrate: tol must lie in [1e-13, 1e-6]");

        Trajectory traj;
        traj.t_begin_ = t0;
        traj.t_end_ = t0;
        traj.y_single_ = y0;

        std::vector<double> stops = opt.stops;
        std::sort(stops.begin(), stops.end());
        std::size_t stop_i = 0;
        auto next_stop = [&](double t) {
            while (stop_i < stops.size() && stops[stop_i] <= t + 1e-14 * std::max(1.0, std::abs(t)))
                ++stop_i;
            return stop_i < stops.size() ? std::min(stops[stop_i], t1) : t1;
        };

        double t = t0;
        Vec2 y = y0;
        Vec2 k1 = rhs(t, y);
        check_finite(k1, t, y);

        double hstep = initial_step(t0, t1, y, k1, opt.tol);
        long steps_taken = 0;

        while (t < t1) {
            if (++steps_taken > opt.max_steps)
                throw StepUnderflow("integrate: step budget exhausted", t, y[0], y[1]);
            const double target = next_stop(t);
            bool hit_target = false;
            if (t + hstep >= target) { hstep = target - t; hit_target = true; }
            if (hstep < 1e-14 * std::max(1.0, std::abs(t)))
                throw StepUnderflow("integrate: step size underflow", t, y[0], y[1]);

            // stages
            Vec2 k2, k3, k4, k5, k6, k7, ytmp, ynew, yerr;
            for (int i = 0; i < 2; ++i) ytmp[i] = y[i] + hstep * a21 * k1[i];
            k2 = rhs(t + c2 * hstep, ytmp);
            for (int i = 0; i < 2; ++i) ytmp[i] = y[i] + hstep * (a31 * k1[i] + a32 * k2[i]);
            k3 = rhs(t + c3 * hstep, ytmp);
            for (int i = 0; i < 2; ++i) ytmp[i] = y[i] + hstep * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
            k4 = rhs(t + c4 * hstep, ytmp);
            for (int i = 0; i < 2; ++i)
                ytmp[i] = y[i] + hstep * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
            k5 = rhs(t + c5 * hstep, ytmp);
            for (int i = 0; i < 2; ++i)
                ytmp[i] = y[i] + hstep * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i]);
            // when the step closes on a stop, the end stages must sample the
            // field on this side of the breakpoint
            const double t_end = hit_target ? std::nextafter(t + hstep, t) : t + hstep;
            k6 = rhs(t_end, ytmp);
            for (int i = 0; i < 2; ++i)
                ynew[i] = y[i] + hstep * (b1 * k1[i] + b3 * k3[i] + b4 * k4[i] + b5 * k5[i] + b6 * k6[i]);
            k7 = rhs(t_end, ynew);
            for (int i = 0; i < 2; ++i)
                yerr[i] = hstep * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);

            if (!std::isfinite(ynew[0]) || !std::isfinite(ynew[1])) {
                // treat as a failed step; shrinking usually resolves transient overflow
                hstep *= 0.25;
                ++traj.rejected_;
                if (hstep < 1e-14 * std::max(1.0, std::abs(t)))
                    throw NonFiniteState("integrate: state became non-finite");
                continue;
            }

            double err = 0;
            for (int i = 0; i < 2; ++i) {
                const double sc = opt.tol + opt.tol * std::max(std::abs(y[i]), std::abs(ynew[i]));
                const double q = yerr[i] / sc;
                err += q * q;
            }
            err = std::sqrt(0.5 * err);

            if (err > 1.0) {
                ++traj.rejected_;
                hstep *= std::max(0.2, 0.9 * std::pow(err, -0.2));
                continue;
            }

            // accepted
            DenseStep st;
            st.t0 = t;
            st.h = hstep;
            st.y0 = y;
            st.y1 = ynew;
            for (int i = 0; i < 2; ++i) {
                const double ydiff = ynew[i] - y[i];
                const double bspl = hstep * k1[i] - ydiff;
                st.rc2[i] = ydiff;
                st.rc3[i] = bspl;
                st.rc4[i] = ydiff - hstep * k7[i] - bspl;
                st.rc5[i] = hstep * (d1 * k1[i] + d3 * k3[i] + d4 * k4[i] + d5 * k5[i] +
                                     d6 * k6[i] + d7 * k7[i]);
            }

            traj.max_local_error_ = std::max(traj.max_local_error_,
                                             std::max(std::abs(yerr[0]), std::abs(yerr[1])));

            // locate the earliest monitored sign change inside the step
            double t_event = std::numeric_limits<double>::infinity();
            for (int comp = 0; comp < 2; ++comp) {
                if (comp == 0 && !opt.event_u) continue;
                if (comp == 1 && !opt.event_v) continue;
                const double te = first_crossing(st, comp, t, t + hstep);
                t_event = std::min(t_event, te);
            }

            if (t_event < t + hstep) {
                // truncate at the event and restart there; the dense
                // polynomial stays valid on its full trial step
                st.y1 = st.eval(t_event);
                traj.steps_.push_back(st);
                traj.event_times_.push_back(t_event);
                ++traj.accepted_;
                t = t_event;
                y = st.y1;
                k1 = rhs(t, y);
                traj.t_end_ = t;
            } else {
                traj.steps_.push_back(st);
                ++traj.accepted_;
                t = hit_target ? target : t + hstep;
                y = ynew;
                // FSAL only within a smooth segment; restart on a new piece
                k1 = hit_target ? rhs(t, y) : k7;
                traj.t_end_ = t;
                hstep *= std::min(5.0, std::max(0.2, 0.9 * std::pow(std::max(err, 1e-10), -0.2)));
            }

            if (opt.dip_tol > 0 && y[0] < -10 * opt.dip_tol) traj.weak_dip_flag_ = true;

            const double nrm = std::max(std::abs(y[0]), std::abs(y[1]));
            if (opt.cap_norm > 0 && nrm >= opt.cap_norm) {
                // locate the first crossing of the cap level within this step
                const DenseStep& last = traj.steps_.back();
                auto over = [&](double tt) {
                    const Vec2 z = last.eval(tt);
                    return std::max(std::abs(z[0]), std::abs(z[1])) - opt.cap_norm;
                };
                double tc = last.t0;
                if (over(last.t0) < 0)
                    tc = bisect_root(over, last.t0, t, 1e-12 * std::max(1.0, std::abs(t)));
                traj.steps_.back().y1 = last.eval(tc);
                traj.t_end_ = tc;
                return traj;
            }
            if (nrm > opt.blowup_norm)
                throw StepUnderflow("integrate: blow-up guard tripped", t, y[0], y[1]);
        }
        return traj;
    }

 private:
    static void check_finite(const Vec2& k, double t, const Vec2& y) {
        if (!std::isfinite(k[0]) || !std::isfinite(k[1]))
            throw NonFiniteState("integrate: non-finite right-hand side at t=" + std::to_string(t) +
                                 " u=" + std::to_string(y[0]) + " v=" + std::to_string(y[1]));
    }

    static double initial_step(double t0, double t1, const Vec2& y, const Vec2& f, double tol) {
        const double d0 = std::max(std::abs(y[0]), std::abs(y[1]));
        const double d1 = std::max(std::abs(f[0]), std::abs(f[1]));
        double h = (d1 > 1e-10) ? 0.01 * (d0 + tol) / d1 : (t1 - t0) / 100.0;
        h = std::min(h, 0.1 * (t1 - t0));
        return std::max(h, 1e-10 * (t1 - t0));
    }

    // Earliest sign change of component comp in (t_lo, t_hi) on the dense
    // polynomial; +inf when none. Crossings are scanned on 8 subsamples and
    // refined by bisection to 1e-12 in time.
    static double first_crossing(const DenseStep& st, int comp, double t_lo, double t_hi) {
        constexpr int kScan = 8;
        double prev_t = t_lo;
        double prev_u = st.eval1(t_lo, comp);
        const double tiny = 0.0;
        for (int k = 1; k <= kScan; ++k) {
            const double tk = t_lo + (t_hi - t_lo) * k / kScan;
            const double uk = st.eval1(tk, comp);
            const bool sign_change = (prev_u > tiny && uk < -tiny) || (prev_u < -tiny && uk > tiny);
            if (sign_change) {
                const double te = bisect_root([&](double tt) { return st.eval1(tt, comp); },
                                              prev_t, tk, 1e-12);
                // ignore crossings pinned at the very start (restart point)
                if (te > t_lo + 1e-12) return te;
            }
            if (uk != 0.0 || k == kScan) { prev_t = tk; prev_u = uk; }
        }
        return std::numeric_limits<double>::infinity();
    }
};

// ---------------------------------------------------------------------------
// Flow of a SystemInstance
// ---------------------------------------------------------------------------

namespace detail {

inline std::vector<double> lifted_stops(const SystemInstance& sys, double t0, double t1) {
    std::vector<double> stops;
    const double T = sys.period();
    const auto bs = sys.breakpoints();
    const double k0 = std::floor(t0 / T) - 1;
    for (double k = k0; k * T <= t1 + T; ++k) {
        for (double b : bs) {
            const double t = b + k * T;
            if (t > t0 && t < t1) stops.push_back(t);
        }
    }
    return stops;
}

}  // namespace detail

inline void validate_mode(const SystemInstance& sys) {
    if (sys.mode == SystemMode::ThetaHomotopy && !(sys.theta > 0 && sys.theta <= 1))
        throw InvalidParameter("system: theta must lie in (0, 1]");
    if (sys.mode == SystemMode::AlphaPerturbed) {
        if (!(sys.alpha >= 0)) throw InvalidParameter("system: alpha must be >= 0");
        if (!sys.w) throw InvalidParameter("system: alpha mode needs a perturbation weight");
    }
}

inline Trajectory integrate(const SystemInstance& sys, Vec2 z0, double t0, double t1, double tol) {
    validate_mode(sys);
    IntegrateOptions opt;
    opt.tol = tol;
    opt.stops = detail::lifted_stops(sys, t0, t1);
    opt.event_u = true;
    opt.event_v = sys.h.kink_at_zero();
    if (sys.mode == SystemMode::Raw && z0[0] >= 0) opt.dip_tol = tol;
    return Integrator::run([&sys](double t, const Vec2& y) { return sys.rhs(t, y[0], y[1]); },
                           z0, t0, t1, opt);
}

inline Vec2 poincare_point(const SystemInstance& sys, Vec2 z0, double tol) {
    return integrate(sys, z0, 0.0, sys.period(), tol).state_end();
}

// First-exit Poincare evaluation: the flow is stopped when max(|u|,|v|)
// reaches `cap`, and the stopped state is returned. Points whose stopped
// state sits on the cap level cannot be fixed points of the period map, so
// winding computations built on this map are cap-independent.
inline Vec2 poincare_capped(const SystemInstance& sys, Vec2 z0, double tol, double cap) {
    IntegrateOptions opt;
    opt.tol = tol;
    opt.stops = detail::lifted_stops(sys, 0.0, sys.period());
    opt.event_u = true;
    opt.event_v = sys.h.kink_at_zero();
    opt.cap_norm = cap;
    Trajectory tr = Integrator::run([&sys](double t, const Vec2& y) { return sys.rhs(t, y[0], y[1]); },
                                    z0, 0.0, sys.period(), opt);
    return tr.state_end();
}

struct PoincareResult {
    Vec2 P{};
    std::array<std::array<double, 2>, 2> J{};  // J[i][j] = dP_i / dz_j
};

inline PoincareResult poincare(const SystemInstance& sys, Vec2 z0, double tol) {
    PoincareResult r;
    r.P = poincare_point(sys, z0, tol);
    const double step = 1e-6 * (1.0 + std::hypot(z0[0], z0[1]));
    const double tol_fd = std::max(tol / 10.0, 1e-13);
    for (int j = 0; j < 2; ++j) {
        Vec2 zp = z0, zm = z0;
        zp[j] += step;
        zm[j] -= step;
        const Vec2 Pp = poincare_point(sys, zp, tol_fd);
        const Vec2 Pm = poincare_point(sys, zm, tol_fd);
        for (int i = 0; i < 2; ++i) r.J[i][j] = (Pp[i] - Pm[i]) / (2 * step);
    }
    return r;
}

// ---------------------------------------------------------------------------
// Period map of the autonomous quasi-homogeneous center
//   u' = B |v|^{alpha-1} v,  v' = -A |u|^{beta-1} u
// ---------------------------------------------------------------------------

inline double period_map(double A, double B, double alpha, double beta, double E,
                         double rel_tol = 1e-9) {
    if (!(A > 0) || !(B > 0) || !(alpha > 0) || !(beta > 0))
        throw InvalidParameter("period_map: A, B, alpha, beta must be positive");
    if (!(E > 0)) throw EnergyTooSmall("period_map: energy must be positive");
    const double u0 = std::pow((beta + 1) * E / A, 1.0 / (beta + 1));
    if (!(u0 > 1e-150) || !std::isfinite(u0))
        throw EnergyTooSmall("period_map: starting amplitude underflows");

    auto rhs = [A, B, alpha, beta](double, const Vec2& y) -> Vec2 {
        return {B * signed_pow(y[1], alpha), -A * signed_pow(y[0], beta)};
    };

    IntegrateOptions opt;
    opt.tol = std::max(1e-12, rel_tol * 1e-3);
    opt.event_u = beta < 1;
    opt.event_v = true;  // v = 0 restarts double as return-crossing markers

    double horizon = 1.0;
    for (int attempt = 0; attempt < 40; ++attempt) {
        Trajectory tr = Integrator::run(rhs, {u0, 0.0}, 0.0, horizon, opt);
        for (double te : tr.event_times()) {
            if (te < 1e-12) continue;
            const Vec2 z = tr.eval(te);
            if (std::abs(z[1]) < 1e-6 * std::max(1.0, std::abs(z[0])) && z[0] > 0)
                return te;
        }
        horizon *= 2;
        if (!std::isfinite(horizon)) break;
    }
    throw Error("period_map: no return to the positive u-axis found");
}

// ---------------------------------------------------------------------------
// Trajectory CSV: header t,u,v, 15 significant digits, one row per accepted
// step plus 200 uniform dense-output rows per period.
// ---------------------------------------------------------------------------

inline void trajectory_to_csv(const Trajectory& tr, double period, std::ostream& os) {
    std::vector<double> ts;
    for (const auto& s : tr.steps()) ts.push_back(s.t0);
    ts.push_back(tr.t_end());
    const double span = tr.t_end() - tr.t_begin();
    const int uniform = std::max(1, static_cast<int>(std::lround(200.0 * span / period)));
    for (int i = 0; i <= uniform; ++i) ts.push_back(tr.t_begin() + span * i / uniform);
    std::sort(ts.begin(), ts.end());
    ts.erase(std::unique(ts.begin(), ts.end()), ts.end());

    os << "t,u,v\n";
    char buf[128];
    for (double t : ts) {
        const Vec2 z = tr.eval(t);
        std::snprintf(buf, sizeof(buf), "%.15g,%.15g,%.15g\n", t, z[0], z[1]);
        os << buf;
    }
}

}  // namespace persol
