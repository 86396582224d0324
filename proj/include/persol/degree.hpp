#pragma once

#include <cmath>
#include <functional>
#include <list>
#include <map>
#include <memory>
#include <ostream>
#include <utility>
#include <vector>

#include "persol/common.hpp"
#include "persol/flow.hpp"
#include "persol/quadrature.hpp"

namespace persol {

// Axis-aligned box; the boundary is parameterized counterclockwise by arc
// length starting at the right edge midpoint.
struct Rectangle {
    double cu = 0, cv = 0;  // center
    double ru = 0, rv = 0;  // half-widths

    double perimeter() const { return 4 * (ru + rv); }

    Vec2 boundary_point(double s) const {
        const double L = perimeter();
        s = std::fmod(s, L);
        if (s < 0) s += L;
        // legs: right-up rv, top 2ru, left 2rv, bottom 2ru, right-up rv
        if (s < rv) return {cu + ru, cv + s};
        s -= rv;
        if (s < 2 * ru) return {cu + ru - s, cv + rv};
        s -= 2 * ru;
        if (s < 2 * rv) return {cu - ru, cv + rv - s};
        s -= 2 * rv;
        if (s < 2 * ru) return {cu - ru + s, cv - rv};
        s -= 2 * ru;
        return {cu + ru, cv - rv + s};
    }

    bool strictly_inside(const Rectangle& outer) const {
        return cu - ru > outer.cu - outer.ru && cu + ru < outer.cu + outer.ru &&
               cv - rv > outer.cv - outer.rv && cv + rv < outer.cv + outer.rv;
    }
};

struct BoundarySample {
    double s = 0;       // arc-length parameter
    double u = 0, v = 0;
    double Fu = 0, Fv = 0;
};

struct DegreeResult {
    int degree = 0;
    double min_boundary_norm = 0;
    int points_used = 0;
    bool certified = false;
    double total_angle = 0;
    Rectangle box;
    std::vector<BoundarySample> samples;  // ordered by s
};

using PlanarMap = std::function<Vec2(double, double)>;

// Brouwer degree of F on the rectangle boundary by accumulating argument
// increments, bisecting any segment whose increment reaches pi/2 or whose
// endpoint norms fall far below the boundary median.
inline DegreeResult winding_degree(const PlanarMap& F, const Rectangle& box, int max_points = 4096,
                                   int initial_points = 64) {
    if (max_points < 64) throw InvalidParameter("winding_degree: max_points must be >= 64");
    if (!(box.ru > 0) || !(box.rv > 0))
        throw InvalidParameter("winding_degree: half-widths must be positive");

    struct Node {
        double s;
        double u, v, Fu, Fv;
        double norm, angle;
    };
    const double L = box.perimeter();

    auto make_node = [&](double s) {
        const Vec2 z = box.boundary_point(s);
        const Vec2 f = F(z[0], z[1]);
        if (!std::isfinite(f[0]) || !std::isfinite(f[1]))
            throw NonFiniteState("winding_degree: non-finite field value on boundary");
        Node n{s, z[0], z[1], f[0], f[1], std::hypot(f[0], f[1]), std::atan2(f[1], f[0])};
        if (n.norm < 1e-12)
            throw ZeroOnBoundary("winding_degree: field vanishes on the boundary at s=" +
                                 std::to_string(s));
        return n;
    };

    std::list<Node> nodes;
    for (int i = 0; i < initial_points; ++i) nodes.push_back(make_node(L * i / initial_points));
    int used = initial_points;

    auto delta = [](const Node& a, const Node& b) {
        double d = b.angle - a.angle;
        while (d > kPi) d -= 2 * kPi;
        while (d < -kPi) d += 2 * kPi;
        return d;
    };

    auto median_norm = [&]() {
        std::vector<double> ns;
        ns.reserve(nodes.size());
        for (const auto& n : nodes) ns.push_back(n.norm);
        std::nth_element(ns.begin(), ns.begin() + ns.size() / 2, ns.end());
        return ns[ns.size() / 2];
    };

    bool refined = true;
    while (refined) {
        refined = false;
        const double low_norm = 1e-3 * median_norm();
        for (auto it = nodes.begin(); it != nodes.end();) {
            auto jt = std::next(it);
            const Node& a = *it;
            const Node& b = (jt == nodes.end()) ? nodes.front() : *jt;
            const double s_b = (jt == nodes.end()) ? b.s + L : b.s;
            const bool wide = std::abs(delta(a, b)) >= 0.5 * kPi;
            const bool weak = std::min(a.norm, b.norm) < low_norm;
            const double gap = s_b - a.s;
            if ((wide || (weak && gap > L / max_points)) && gap > 1e-13 * L) {
                if (used >= max_points)
                    throw Uncertified("winding_degree: max_points exhausted before certification");
                nodes.insert(jt == nodes.end() ? nodes.end() : jt,
                             make_node(std::fmod(a.s + 0.5 * gap, L)));
                ++used;
                refined = true;
            } else {
                ++it;
            }
        }
    }

    DegreeResult out;
    out.box = box;
    out.points_used = used;
    out.min_boundary_norm = std::numeric_limits<double>::infinity();
    double total = 0;
    double max_inc = 0;
    for (auto it = nodes.begin(); it != nodes.end(); ++it) {
        auto jt = std::next(it);
        const Node& a = *it;
        const Node& b = (jt == nodes.end()) ? nodes.front() : *jt;
        const double d = delta(a, b);
        total += d;
        max_inc = std::max(max_inc, std::abs(d));
        out.min_boundary_norm = std::min(out.min_boundary_norm, a.norm);
        out.samples.push_back({a.s, a.u, a.v, a.Fu, a.Fv});
    }
    out.total_angle = total;
    out.degree = static_cast<int>(std::lround(total / (2 * kPi)));
    out.certified = max_inc < 0.5 * kPi && out.min_boundary_norm > 0 &&
                    std::abs(total / (2 * kPi) - out.degree) < 1e-6;
    return out;
}

// Mean of the extended vector field over one period: the reduced map on the
// kernel of the period operator,
//   (U, V) |-> ( -h#(V), f#(U) ),
// with h#(V) the t-average of h(t,V) and f#(U) the t-average of f(t,U),
// i.e. f#(U) = lambda * mean(a) * g(U) for U >= 0 and -U for U < 0.
inline PlanarMap averaged_field(const SystemInstance& sys) {
    if (sys.mode != SystemMode::Extended)
        throw InvalidParameter("averaged_field: system must be in extended mode");
    const double T = sys.period();
    const double a_mean = sys.a.mean_integral() / T;
    const HOperator& h = sys.h;
    const GNonlinearity& g = sys.g;
    const double lambda = sys.lambda;
    const bool tdep = h.time_dependent();
    return [=, &h, &g](double U, double V) -> Vec2 {
        const double h_sharp =
            tdep ? integrate_adaptive([&h, V](double t) { return h(t, V); }, 0.0, T, 1e-10) / T
                 : h(0.0, V);
        const double f_sharp = U >= 0 ? lambda * a_mean * g(U) : -U;
        return {-h_sharp, f_sharp};
    };
}

inline DegreeResult small_ball_degree(const SystemInstance& sys, double r0, int max_points = 4096) {
    if (!(r0 > 0)) throw InvalidParameter("small_ball_degree: r0 must be positive");
    return winding_degree(averaged_field(sys), Rectangle{0, 0, r0, r0}, max_points);
}

// Degree of the period-map residual z - P(z). Poincare evaluations are run
// through the first-exit cap (see poincare_capped) so that boundary arcs
// whose trajectories escape still produce a continuous, certifiable field;
// capped points cannot be fixed points, so the result is cap-independent.
// Pass cap = 0 to integrate without the cap, in which case escaping
// trajectories surface as BoundaryBlowup.
inline DegreeResult poincare_residual_degree(const SystemInstance& sys, const Rectangle& box,
                                             double tol, double cap = 1e6,
                                             int max_points = 4096) {
    if (sys.mode != SystemMode::Extended)
        throw InvalidParameter("poincare_residual_degree: system must be in extended mode");
    // boundary evaluations are cached and shared across refinements
    auto cache = std::make_shared<std::map<std::pair<double, double>, Vec2>>();
    PlanarMap F = [&sys, tol, cap, cache](double u, double v) -> Vec2 {
        const auto key = std::make_pair(u, v);
        auto it = cache->find(key);
        Vec2 P;
        if (it != cache->end()) {
            P = it->second;
        } else {
            try {
                P = cap > 0 ? poincare_capped(sys, {u, v}, tol, cap)
                            : poincare_point(sys, {u, v}, tol);
            } catch (const StepUnderflow& e) {
                throw BoundaryBlowup(
                    "poincare_residual_degree: trajectory escaped from boundary point (" +
                        std::to_string(u) + ", " + std::to_string(v) + "): " + e.what(),
                    e.t_last, e.t_last);
            }
            (*cache)[key] = P;
        }
        return {u - P[0], v - P[1]};
    };
    return winding_degree(F, box, max_points);
}

inline int annulus_degree(const DegreeResult& inner, const DegreeResult& outer) {
    if (!inner.certified || !outer.certified)
        throw NotNested("annulus_degree: both degrees must be certified");
    if (!inner.box.strictly_inside(outer.box))
        throw NotNested("annulus_degree: inner box must lie strictly inside the outer box");
    return outer.degree - inner.degree;
}

// Optional CSV of boundary samples: s,u,v,Fu,Fv.
inline void degree_samples_to_csv(const DegreeResult& r, std::ostream& os) {
    os << "s,u,v,Fu,Fv\n";
    char buf[160];
    for (const auto& p : r.samples) {
        std::snprintf(buf, sizeof(buf), "%.15g,%.15g,%.15g,%.15g,%.15g\n", p.s, p.u, p.v, p.Fu,
                      p.Fv);
        os << buf;
    }
}

}  // namespace persol
