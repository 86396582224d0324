#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "persol/common.hpp"
#include "persol/flow.hpp"

namespace persol {

struct PositivityReport {
    bool weak_ok = false;
    bool strong_ok = false;
    bool argmax_in_Jn = false;
    bool borderline = false;       // min_u in (0, 1e-8]: rerun at tighter tol
    double min_u = 0, max_u = 0;
    double argmax_t = 0;
    double v_at_argmax = 0;
    bool stationarity_ok = false;  // |v(argmax)| small (first-order condition)
    // periodicity identity: int_0^T a g(u) dt must vanish at the orbit's own
    // scale; flat near-rest points that merely pass the residual tolerance
    // violate it by an O(1) relative amount and are excluded as ghosts
    double periodicity_defect = 0;
    bool periodicity_ok = true;
};

struct OrbitSolution {
    Vec2 z0{0, 0};
    double residual_norm = std::numeric_limits<double>::infinity();
    Trajectory trajectory;
    double min_u = 0, max_u = 0;
    double argmax_t = 0;
    PositivityReport positivity;
    int newton_iters = 0;
    double tol = 0;

    bool valid() const { return std::isfinite(residual_norm); }
    bool trivial() const { return std::max(std::abs(z0[0]), std::abs(z0[1])) <= 1e-8; }
};

inline PositivityReport validate_positive(const SystemInstance& sys, const OrbitSolution& orbit,
                                          int samples = 20000) {
    PositivityReport rep;
    const auto ex = orbit.trajectory.u_extrema(samples);
    rep.min_u = ex.min_u;
    rep.max_u = ex.max_u;
    rep.argmax_t = wrap_period(ex.argmax_t, sys.period());
    rep.weak_ok = ex.min_u >= -10 * orbit.tol;
    rep.borderline = ex.min_u > 0 && ex.min_u <= 1e-8;
    rep.strong_ok = ex.min_u > 0 && !rep.borderline;
    rep.argmax_in_Jn = false;
    for (const auto& J : sys.a.positivity())
        if (J.contains(rep.argmax_t)) rep.argmax_in_Jn = true;
    rep.v_at_argmax = orbit.trajectory.eval(ex.argmax_t)[1];
    double v_scale = 0;
    for (const auto& st : orbit.trajectory.steps()) v_scale = std::max(v_scale, std::abs(st.y1[1]));
    rep.stationarity_ok = std::abs(rep.v_at_argmax) <= 1e-6 * (1 + v_scale);

    const double T = sys.period();
    const int n = 4000;
    double integral = 0, mag = 0;
    double prev = sys.a(0.0) * sys.g(std::max(0.0, orbit.trajectory.eval(0.0)[0]));
    for (int i = 1; i <= n; ++i) {
        const double t = T * i / n;
        const double cur = sys.a(t) * sys.g(std::max(0.0, orbit.trajectory.eval(t)[0]));
        integral += 0.5 * (prev + cur) * (T / n);
        mag = std::max(mag, std::abs(cur));
        prev = cur;
    }
    rep.periodicity_defect = mag * T > 1e-300 ? std::abs(integral) / (mag * T) : 0.0;
    rep.periodicity_ok = rep.periodicity_defect <= 1e-3;
    return rep;
}

// Damped Newton on F(z) = P_T(z) - z with the finite-difference flow
// Jacobian. The accepted point is re-integrated at tol/10; when the confirmed
// residual still exceeds tol (global error above the working tolerance), the
// working tolerance tightens and Newton polishes again.
inline OrbitSolution newton_periodic(const SystemInstance& sys, Vec2 z0, double tol) {
    if (!(tol >= 1e-12 && tol <= 1e-6))
        throw InvalidParameter("newton_periodic: tol must lie in [1e-12, 1e-6]");
    auto norm2 = [](const Vec2& f) { return std::hypot(f[0], f[1]); };

    Vec2 z = z0;
    int iters = 0;
    double integ_tol = std::max(tol * 1e-1, 1e-13);

    for (int round = 0; round < 3; ++round) {
        auto residual = [&](const Vec2& x) -> Vec2 {
            const Vec2 P = poincare_point(sys, x, integ_tol);
            return {P[0] - x[0], P[1] - x[1]};
        };
        Vec2 F = residual(z);
        double nF = norm2(F);
        for (; iters < 40 && nF > tol; ++iters) {
            const PoincareResult pr = poincare(sys, z, integ_tol);
            std::array<std::array<double, 2>, 2> A = pr.J;
            A[0][0] -= 1.0;
            A[1][1] -= 1.0;
            const double det = A[0][0] * A[1][1] - A[0][1] * A[1][0];
            if (std::abs(det) < 1e-14)
                throw SingularJacobian("newton_periodic: |det(J - I)| < 1e-14", pr.J);
            const Vec2 d{(-F[0] * A[1][1] + F[1] * A[0][1]) / det,
                         (-F[1] * A[0][0] + F[0] * A[1][0]) / det};
            double lam = 1.0;
            bool moved = false;
            for (int back = 0; back < 25; ++back) {
                const Vec2 zt{z[0] + lam * d[0], z[1] + lam * d[1]};
                try {
                    const Vec2 Ft = residual(zt);
                    const double nFt = norm2(Ft);
                    if (nFt <= (1 - 0.5 * lam) * nF + 1e-16) {
                        z = zt;
                        F = Ft;
                        nF = nFt;
                        moved = true;
                        break;
                    }
                } catch (const StepUnderflow&) {
                    // trial point escapes; shorten the step
                }
                lam *= 0.5;
            }
            if (!moved) throw NoConvergence("newton_periodic: line search stagnated");
        }
        if (nF > tol) throw NoConvergence("newton_periodic: iteration cap reached");

        // confirmation pass at a tighter tolerance
        const double confirm_tol = std::max(integ_tol * 0.1, 1e-13);
        Trajectory confirm = integrate(sys, z, 0.0, sys.period(), confirm_tol);
        const Vec2 Pc = confirm.state_end();
        const double confirmed = std::hypot(Pc[0] - z[0], Pc[1] - z[1]);
        if (confirmed <= tol || integ_tol <= 1.001e-13) {
            if (confirmed > 10 * tol)
                throw NoConvergence("newton_periodic: confirmed residual far above tolerance");
            OrbitSolution orbit;
            orbit.z0 = z;
            orbit.newton_iters = iters;
            orbit.tol = tol;
            orbit.trajectory = std::move(confirm);
            orbit.residual_norm = confirmed;
            orbit.positivity = validate_positive(sys, orbit);
            orbit.min_u = orbit.positivity.min_u;
            orbit.max_u = orbit.positivity.max_u;
            orbit.argmax_t = orbit.positivity.argmax_t;
            return orbit;
        }
        integ_tol = std::max(integ_tol * 1e-2, 1e-13);
    }
    throw NoConvergence("newton_periodic: residual confirmation kept failing");
}

struct MultistartGrid {
    double u_lo = 0, u_hi = 2;
    double v_lo = -2, v_hi = 2;
    int nu = 16, nv = 16;
};

struct MultistartResult {
    std::vector<OrbitSolution> solutions;  // nontrivial, sorted by ||u||_inf
    std::optional<OrbitSolution> trivial;
    int starts = 0, converged = 0, blowups = 0, failures = 0, ghosts = 0;
};

inline MultistartResult multistart_solve(const SystemInstance& sys, const MultistartGrid& grid,
                                         double tol) {
    if (grid.nu < 4 || grid.nv < 4)
        throw InvalidParameter("multistart_solve: grid must be at least 4x4");
    MultistartResult out;
    for (int i = 0; i < grid.nu; ++i) {
        for (int j = 0; j < grid.nv; ++j) {
            const double u0 = grid.u_lo + (grid.u_hi - grid.u_lo) * i / std::max(1, grid.nu - 1);
            const double v0 = grid.v_lo + (grid.v_hi - grid.v_lo) * j / std::max(1, grid.nv - 1);
            ++out.starts;
            OrbitSolution orbit;
            try {
                orbit = newton_periodic(sys, {u0, v0}, tol);
            } catch (const StepUnderflow&) {
                ++out.blowups;
                continue;
            } catch (const NonFiniteState&) {
                ++out.blowups;
                continue;
            } catch (const NoConvergence&) {
                ++out.failures;
                continue;
            } catch (const SingularJacobian&) {
                ++out.failures;
                continue;
            }
            ++out.converged;
            if (orbit.positivity.borderline) {
                // rerun once at a tighter tolerance before accepting
                try {
                    orbit = newton_periodic(sys, orbit.z0, std::max(tol * 0.1, 1e-12));
                } catch (const Error&) {
                    continue;
                }
            }
            if (orbit.trivial()) {
                if (!out.trivial) out.trivial = orbit;
                continue;
            }
            if (!orbit.positivity.periodicity_ok) {
                ++out.ghosts;
                continue;
            }
            bool dup = false;
            for (const auto& s : out.solutions)
                dup = dup || std::hypot(s.z0[0] - orbit.z0[0], s.z0[1] - orbit.z0[1]) < 1e-6;
            if (!dup) out.solutions.push_back(std::move(orbit));
        }
    }
    if (!out.trivial) {
        // the rest state is reported whenever it is actually periodic (it is
        // not under alpha forcing)
        try {
            out.trivial = newton_periodic(sys, {0.0, 0.0}, tol);
        } catch (const Error&) {
        }
    }
    std::sort(out.solutions.begin(), out.solutions.end(),
              [](const OrbitSolution& x, const OrbitSolution& y) { return x.max_u < y.max_u; });
    return out;
}

struct BranchPoint {
    double lambda = 0;
    OrbitSolution orbit;
};

struct Branch {
    std::vector<BranchPoint> points;
    std::string termination;
};

// Natural-parameter continuation in lambda. Step halves on Newton failure,
// grows x1.5 on success, and the branch ends at the range end, at a fold
// (singular Jacobian), or when the step underflows.
inline Branch continue_lambda(const SystemInstance& sys, double lambda_from, double lambda_to,
                              const OrbitSolution& seed, double tol) {
    if (!seed.valid() || seed.residual_norm > 100 * tol)
        throw SeedInvalid("continue_lambda: seed orbit residual too large");
    Branch br;
    const double range = std::abs(lambda_to - lambda_from);
    if (range == 0) throw InvalidParameter("continue_lambda: empty lambda range");
    const double dir = lambda_to > lambda_from ? 1.0 : -1.0;
    const double d_min = 1e-4, d_max = 0.5 * range;

    SystemInstance cur = sys;
    cur.lambda = lambda_from;
    Vec2 z = seed.z0;
    double dl = std::min(d_max, range / 20);

    try {
        OrbitSolution first = newton_periodic(cur, z, tol);
        first.positivity = validate_positive(cur, first);
        br.points.push_back({cur.lambda, first});
        z = first.z0;
    } catch (const Error& e) {
        throw SeedInvalid(std::string("continue_lambda: seed does not converge: ") + e.what());
    }

    while (true) {
        const double remaining = (lambda_to - cur.lambda) * dir;
        if (remaining <= 1e-12) { br.termination = "range-end"; break; }
        const double step = std::min(dl, remaining);
        SystemInstance next = cur;
        next.lambda = cur.lambda + dir * step;
        try {
            OrbitSolution orbit = newton_periodic(next, z, tol);
            orbit.positivity = validate_positive(next, orbit);
            br.points.push_back({next.lambda, orbit});
            z = orbit.z0;
            cur = next;
            dl = std::min(d_max, dl * 1.5);
        } catch (const SingularJacobian&) {
            br.termination = "fold";
            break;
        } catch (const Error&) {
            dl *= 0.5;
            if (dl < d_min) { br.termination = "step-underflow"; break; }
        }
    }
    if (br.termination.empty()) br.termination = "range-end";
    return br;
}

struct ProbeThetaResult {
    double theta = 0;
    bool found = false;
    int starts = 0, converged = 0;
    double nearest_max_u = std::numeric_limits<double>::quiet_NaN();
    Vec2 found_z0{0, 0};
};

struct ProbeReport {
    double r = 0;
    std::vector<ProbeThetaResult> per_theta;
    bool any_found = false;
};

// Sampling probe for small positive orbits of the theta-homotopy with
// ||u||_inf near r. A negative outcome is a probe result, not a certificate.
inline ProbeReport nonexistence_probe(const SystemInstance& sys, double r,
                                      std::vector<double> theta_grid = {0.25, 0.5, 0.75, 1.0},
                                      int start_count = 36, double tol = 1e-9) {
    if (!(r > 0)) throw InvalidParameter("nonexistence_probe: r must be positive");
    ProbeReport rep;
    rep.r = r;
    const double T = sys.period();
    const int k = std::max(3, static_cast<int>(std::lround(std::sqrt(double(start_count)))));

    for (double th : theta_grid) {
        if (!(th > 0) || th > 1)
            throw InvalidParameter("nonexistence_probe: theta values must lie in (0, 1]");
        const SystemInstance sys_th = sys.with_theta(th);
        ProbeThetaResult res;
        res.theta = th;

        // v scale from the speed needed to swing u by r within a quarter period
        double v_scale;
        try {
            v_scale = solve_increasing([&](double v) { return sys.h.upper(v); },
                                       4 * r / (th * T), 1.0, 1e-9, 1e9);
        } catch (const NoBracket&) {
            v_scale = 4 * r / (th * T);
        }

        double nearest = std::numeric_limits<double>::infinity();
        for (int i = 0; i < k && !res.found; ++i) {
            for (int j = 0; j < k && !res.found; ++j) {
                const double u0 = r * (0.3 + 1.4 * i / std::max(1, k - 1));
                const double v0 = v_scale * (-1.0 + 2.0 * j / std::max(1, k - 1));
                ++res.starts;
                OrbitSolution orbit;
                try {
                    orbit = newton_periodic(sys_th, {u0, v0}, tol);
                } catch (const Error&) {
                    continue;
                }
                ++res.converged;
                if (orbit.trivial() || !(orbit.min_u > 0) || !orbit.positivity.periodicity_ok)
                    continue;
                // steer ||u||_inf toward r by rescaling the start
                for (int steer = 0; steer < 6; ++steer) {
                    if (orbit.max_u >= 0.9 * r && orbit.max_u <= 1.1 * r) break;
                    const double f = r / orbit.max_u;
                    try {
                        OrbitSolution next =
                            newton_periodic(sys_th, {orbit.z0[0] * f, orbit.z0[1] * f}, tol);
                        if (next.trivial() || !(next.min_u > 0)) break;
                        orbit = std::move(next);
                    } catch (const Error&) {
                        break;
                    }
                }
                if (std::abs(orbit.max_u - r) < std::abs(nearest - r)) nearest = orbit.max_u;
                if (orbit.max_u >= 0.9 * r && orbit.max_u <= 1.1 * r && orbit.min_u > 0) {
                    res.found = true;
                    res.found_z0 = orbit.z0;
                }
            }
        }
        res.nearest_max_u = nearest;
        rep.any_found = rep.any_found || res.found;
        rep.per_theta.push_back(res);
    }
    return rep;
}

}  // namespace persol
