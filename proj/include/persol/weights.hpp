#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "persol/common.hpp"
#include "persol/quadrature.hpp"

namespace persol {

// Closed arc of the circle R/TZ, stored as [start, start + length] with
// start in [0, T). May wrap past t = T.
struct CircularInterval {
    double start = 0;
    double length = 0;
    double period = 1;

    double end() const { return start + length; }  // may exceed period
    bool wraps() const { return start + length > period; }
    bool contains(double t) const {
        const double d = wrap_period(t - start, period);
        return d <= length;
    }
};

struct WeightSpec {
    std::string family;                 // "sine", "constant", "piecewise_constant", "table"
    double period = 1.0;
    // sine: offset + amplitude * sin(2*pi*t/T + phase)
    double offset = 0.0;
    double amplitude = 1.0;
    double phase = 0.0;
    // constant
    double value = 0.0;
    // piecewise_constant: values[i] on [breaks[i], breaks[i+1]), breaks[0] = 0
    std::vector<double> breaks;
    std::vector<double> values;
    // table: periodic linear interpolation through (ts[i], values[i])
    std::vector<double> ts;
};

// T-periodic piecewise-smooth weight with cached functionals. Immutable once
// built.
class WeightFn {
 public:
    WeightFn() = default;

    double period() const { return T_; }

    double operator()(double t) const {
        const double x = wrap_period(t, T_);
        // pieces are sorted by t_begin; find the piece containing x
        std::size_t i = 0;
        while (i + 1 < piece_begin_.size() && piece_begin_[i + 1] <= x) ++i;
        return piece_eval_[i](x);
    }

    const std::vector<double>& breakpoints() const { return piece_begin_; }

    double mean_integral() const { return mean_integral_; }
    double l1_norm() const { return l1_norm_; }
    double neg_l1_norm() const { return 0.5 * (l1_norm_ - mean_integral_); }  // ||a^-||_L1
    double neg_sup() const { return neg_sup_; }                               // ||a^-||_inf
    const std::vector<CircularInterval>& positivity() const { return intervals_; }
    double gamma() const { return gamma_; }
    const std::vector<double>& sign_change_points() const { return zeros_; }

    // Integral over [x, y] with periodic extension, split at breakpoints so
    // each quadrature panel is smooth. Requires y >= x.
    double integrate(double x, double y, double tol = 1e-10) const {
        if (y < x) throw InvalidParameter("WeightFn::integrate: y < x");
        double total = 0.0;
        const double full = std::floor((y - x) / T_);
        if (full >= 1) {
            total += full * mean_integral_;
            x += full * T_;
        }
        return total + integrate_within(x, y, tol);
    }

    // Same splitting, for integral of |a|.
    double integrate_abs(double x, double y, double tol = 1e-10) const {
        if (y < x) throw InvalidParameter("WeightFn::integrate_abs: y < x");
        double total = 0.0;
        const double full = std::floor((y - x) / T_);
        if (full >= 1) {
            total += full * l1_norm_;
            x += full * T_;
        }
        return total + integrate_abs_within(x, y, tol);
    }

    static WeightFn build(const WeightSpec& spec);

 private:
    double integrate_within(double x, double y, double tol) const {
        const auto cuts = panel_cuts(x, y, false);
        double total = 0.0;
        for (std::size_t i = 0; i + 1 < cuts.size(); ++i)
            total += integrate_adaptive([this](double t) { return (*this)(t); },
                                        cuts[i], cuts[i + 1], tol / cuts.size());
        return total;
    }

    double integrate_abs_within(double x, double y, double tol) const {
        const auto cuts = panel_cuts(x, y, true);
        double total = 0.0;
        for (std::size_t i = 0; i + 1 < cuts.size(); ++i)
            total += integrate_adaptive([this](double t) { return std::abs((*this)(t)); },
                                        cuts[i], cuts[i + 1], tol / cuts.size());
        return total;
    }

    // Panel boundaries within [x, y] (length < 2T): breakpoints lifted by
    // multiples of T, optionally also the cached zeros of a.
    std::vector<double> panel_cuts(double x, double y, bool with_zeros) const {
        std::vector<double> cuts{x};
        const double k0 = std::floor(x / T_) - 1;
        for (double k = k0; k * T_ <= y + T_; ++k) {
            for (double b : piece_begin_) {
                const double t = b + k * T_;
                if (t > x && t < y) cuts.push_back(t);
            }
            if (with_zeros) {
                for (double z : zeros_) {
                    const double t = z + k * T_;
                    if (t > x && t < y) cuts.push_back(t);
                }
            }
        }
        cuts.push_back(y);
        std::sort(cuts.begin(), cuts.end());
        cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
        return cuts;
    }

    void fill_caches(int grid_n);

    double T_ = 1.0;
    std::vector<double> piece_begin_;                       // sorted, first is 0
    std::vector<std::function<double(double)>> piece_eval_;

    double mean_integral_ = 0;
    double l1_norm_ = 0;
    double neg_sup_ = 0;
    double gamma_ = 0;
    std::vector<double> zeros_;  // sign-change locations in [0, T)
    std::vector<CircularInterval> intervals_;

    friend struct WeightAccess;
};

struct PositivityResult {
    std::vector<CircularInterval> intervals;
    double gamma = 0;
};

namespace detail {

// Locate positivity arcs of a on the circle from a sign grid, refining the
// endpoints by bisection. Strict test a > tie_tol.
inline PositivityResult find_positivity(const WeightFn& a, int grid_n, double tie_tol = 1e-12) {
    const double T = a.period();
    const double xtol = T * 1e-10;
    std::vector<double> ts = linspace(0.0, T, grid_n + 1);
    ts.pop_back();  // circle: t = T duplicates t = 0
    std::vector<bool> pos(ts.size());
    bool any = false;
    for (std::size_t i = 0; i < ts.size(); ++i) {
        pos[i] = a(ts[i]) > tie_tol;
        any = any || pos[i];
    }
    if (!any) throw NoPositivity("weight is nonpositive on the whole sampling grid");

    PositivityResult out;
    const std::size_t n = ts.size();
    bool all = true;
    for (bool p : pos) all = all && p;
    if (all) {
        out.intervals.push_back({0.0, T, T});
        out.gamma = T;
        return out;
    }

    auto refine = [&](double lo, double hi) {
        // sign change of (a - tie_tol) between lo and hi
        return bisect_root([&](double t) { return a(t) - tie_tol; }, lo, hi, xtol);
    };

    // walk transitions neg->pos (start) and pos->neg (end)
    std::vector<double> starts, ends;
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t j = (i + 1) % n;
        const double ti = ts[i];
        const double tj = (j == 0) ? T : ts[j];
        if (!pos[i] && pos[j]) starts.push_back(refine(ti, tj));
        if (pos[i] && !pos[j]) ends.push_back(refine(ti, tj));
    }
    // pair each start with the first end after it (circularly)
    for (double s : starts) {
        double best = std::numeric_limits<double>::infinity();
        for (double e : ends) {
            double d = e - s;
            if (d <= 0) d += T;
            best = std::min(best, d);
        }
        out.intervals.push_back({wrap_period(s, T), best, T});
    }
    std::sort(out.intervals.begin(), out.intervals.end(),
              [](const CircularInterval& x, const CircularInterval& y) { return x.start < y.start; });
    out.gamma = std::numeric_limits<double>::infinity();
    for (const auto& J : out.intervals) out.gamma = std::min(out.gamma, J.length);
    return out;
}

}  // namespace detail

inline void WeightFn::fill_caches(int grid_n) {
    mean_integral_ = integrate_within(0.0, T_, 1e-10);

    // zeros of a (sign changes), used to split |a| panels exactly
    const auto ts = linspace(0.0, T_, grid_n + 1);
    zeros_.clear();
    for (std::size_t i = 0; i + 1 < ts.size(); ++i) {
        const double fa = (*this)(ts[i]);
        const double fb = (*this)(ts[i + 1]);
        if (fa == 0.0) { zeros_.push_back(ts[i]); continue; }
        if ((fa > 0) != (fb > 0) && fb != 0.0)
            zeros_.push_back(bisect_root([this](double t) { return (*this)(t); },
                                         ts[i], ts[i + 1], T_ * 1e-12));
    }

    l1_norm_ = integrate_abs_within(0.0, T_, 1e-10);

    neg_sup_ = 0.0;
    for (double t : ts) neg_sup_ = std::max(neg_sup_, -(*this)(t));

    try {
        auto pr = detail::find_positivity(*this, grid_n);
        intervals_ = std::move(pr.intervals);
        gamma_ = pr.gamma;
    } catch (const NoPositivity&) {
        intervals_.clear();
        gamma_ = 0.0;
    }
}

inline WeightFn WeightFn::build(const WeightSpec& spec) {
    WeightFn a;
    if (!(spec.period > 0) || !std::isfinite(spec.period))
        throw InvalidParameter("weight: period must be positive and finite");
    a.T_ = spec.period;
    const double T = spec.period;

    if (spec.family == "sine") {
        if (!std::isfinite(spec.offset) || !std::isfinite(spec.amplitude) || !std::isfinite(spec.phase))
            throw InvalidParameter("weight sine: non-finite parameter");
        const double off = spec.offset, amp = spec.amplitude, ph = spec.phase;
        a.piece_begin_ = {0.0};
        a.piece_eval_ = {[off, amp, ph, T](double t) { return amp * std::sin(2 * kPi * t / T + ph) + off; }};
    } else if (spec.family == "constant") {
        if (!std::isfinite(spec.value)) throw InvalidParameter("weight constant: non-finite value");
        const double c = spec.value;
        a.piece_begin_ = {0.0};
        a.piece_eval_ = {[c](double) { return c; }};
    } else if (spec.family == "piecewise_constant") {
        if (spec.values.empty()) throw InvalidParameter("weight piecewise_constant: empty piece list");
        if (spec.breaks.size() != spec.values.size())
            throw InvalidParameter("weight piecewise_constant: breaks/values size mismatch");
        double prev = -1.0;
        for (double b : spec.breaks) {
            if (!std::isfinite(b) || b < 0 || b >= T || b <= prev)
                throw InvalidParameter("weight piecewise_constant: breakpoints must be strictly increasing in [0,T)");
            prev = b;
        }
        if (spec.breaks.front() != 0.0)
            throw InvalidParameter("weight piecewise_constant: first breakpoint must be 0");
        for (double v : spec.values)
            if (!std::isfinite(v)) throw InvalidParameter("weight piecewise_constant: non-finite value");
        a.piece_begin_ = spec.breaks;
        for (double v : spec.values) a.piece_eval_.push_back([v](double) { return v; });
    } else if (spec.family == "table") {
        if (spec.ts.size() < 2 || spec.ts.size() != spec.values.size())
            throw InvalidParameter("weight table: need matching ts/values with >= 2 samples");
        auto ts = spec.ts;
        auto vs = spec.values;
        double prev = -1.0;
        for (std::size_t i = 0; i < ts.size(); ++i) {
            if (!std::isfinite(ts[i]) || !std::isfinite(vs[i]) || ts[i] < 0 || ts[i] >= T || ts[i] <= prev)
                throw InvalidParameter("weight table: ts must be strictly increasing in [0,T), all finite");
            prev = ts[i];
        }
        for (std::size_t i = 0; i < ts.size(); ++i) {
            const double t0 = ts[i];
            const double t1 = (i + 1 < ts.size()) ? ts[i + 1] : ts[0] + T;
            const double v0 = vs[i];
            const double v1 = (i + 1 < vs.size()) ? vs[i + 1] : vs[0];
            a.piece_begin_.push_back(t0);
            a.piece_eval_.push_back([t0, t1, v0, v1](double t) {
                return v0 + (v1 - v0) * (t - t0) / (t1 - t0);
            });
        }
        if (a.piece_begin_.front() != 0.0) {
            // extend the wrap-around segment back to t = 0
            const double t0 = ts.back() - T;
            const double t1 = ts.front();
            const double v0 = vs.back();
            const double v1 = vs.front();
            a.piece_begin_.insert(a.piece_begin_.begin(), 0.0);
            a.piece_eval_.insert(a.piece_eval_.begin(), [t0, t1, v0, v1](double t) {
                return v0 + (v1 - v0) * (t - t0) / (t1 - t0);
            });
        }
    } else {
        throw UnknownFamily("unknown weight family: " + spec.family);
    }

    a.fill_caches(10000);
    return a;
}

inline WeightFn build_weight(const WeightSpec& spec) { return WeightFn::build(spec); }

struct MeanNegativity {
    double integral = 0;
    bool pass = false;
};

inline MeanNegativity mean_negativity(const WeightFn& a, double tol_mean = 1e-12) {
    MeanNegativity r;
    r.integral = a.mean_integral();
    r.pass = r.integral < -tol_mean;
    return r;
}

inline PositivityResult positivity_intervals(const WeightFn& a, int grid_n = 10000) {
    if (grid_n < 1000) throw InvalidParameter("positivity_intervals: grid_n must be >= 1000");
    return detail::find_positivity(a, grid_n);
}

// A*(delta): worst-case mass of a over any length-delta window inside the
// positivity arcs. Scan each arc then polish with golden section.
inline double a_star(const WeightFn& a, double delta, int scan_n = 2000) {
    const auto& Js = a.positivity();
    const double gamma = a.gamma();
    if (Js.empty()) throw NoPositivity("a_star: weight has no positivity intervals");
    if (!(delta > 0) || delta > gamma)
        throw DeltaOutOfRange("a_star: delta must lie in (0, gamma]");

    double best = std::numeric_limits<double>::infinity();
    for (const auto& J : Js) {
        if (J.length < delta) continue;
        const double lo = J.start, hi = J.start + J.length - delta;
        auto mass = [&](double w) { return a.integrate(w, w + delta, 1e-11); };
        if (hi <= lo) { best = std::min(best, mass(lo)); continue; }
        // coarse scan
        int n = scan_n;
        double w_best = lo, m_best = std::numeric_limits<double>::infinity();
        for (int i = 0; i <= n; ++i) {
            const double w = lo + (hi - lo) * i / n;
            const double m = mass(w);
            if (m < m_best) { m_best = m; w_best = w; }
        }
        // golden-section refinement around the best cell
        const double cell = (hi - lo) / n;
        const double wa = std::max(lo, w_best - cell);
        const double wb = std::min(hi, w_best + cell);
        const double w_ref = golden_section_min(mass, wa, wb, (hi - lo) * 1e-10);
        best = std::min(best, std::min(m_best, mass(w_ref)));
    }
    if (!std::isfinite(best)) throw DeltaOutOfRange("a_star: no interval admits a window of this length");
    return best;
}

}  // namespace persol
