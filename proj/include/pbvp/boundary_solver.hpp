#pragma once

#include "pbvp/coefficients.hpp"
#include "pbvp/errors.hpp"
#include "pbvp/fixed_point.hpp"
#include "pbvp/flow.hpp"
#include "pbvp/jump_path.hpp"
#include "pbvp/trajectory.hpp"

#include <cmath>
#include <limits>
#include <string>
#include <vector>

namespace pbvp {

struct SolverOptions {
    double tol = 1e-10;
    double ode_step = default_ode_step;
    double quad_step = 1e-3;
    double bracket_cap = 1e12;
    double degenerate_width = 1e3;

    FixedPointOptions fixed_point() const { return {tol, bracket_cap, degenerate_width}; }
};

namespace detail {

template <class Jump>
inline Trajectory solve_bvp_with_jump(const CoefficientField& f, const Jump& jump, const BoundaryMap& psi,
                                      const JumpPath& path, const SolverOptions& opt, bool backward) {
    const double x0 = with_field(f, [&](const auto& drift) {
        auto residual = [&](double x) { return x - psi(walk_flow(drift, jump, path, 0.0, 1.0, x, opt.ode_step)); };
        return solve_fixed_point(residual, opt.fixed_point());
    });
    return flow_trajectory(f, jump, path, x0, opt.ode_step, backward);
}

} // namespace detail

/// Solves X_t = X_0 + int f(r, X_r) dr + sum F(s_i, X_{s_i-}) with X_0 = psi(X_1).
///
/// Hypotheses are not enforced; violations surface as NoFixedPoint or
/// MultipleSolutions from the fixed-point search.
inline Trajectory solve_forward_bvp(const CoefficientField& f, const CoefficientField& F, const BoundaryMap& psi,
                                    const JumpPath& path, const SolverOptions& opt = {}) {
    return detail::with_field(F, [&](const auto& jc) {
        auto jump = [&jc](double r, double y) { return y + jc(r, y); };
        return detail::solve_bvp_with_jump(f, jump, psi, path, opt, false);
    });
}

/// A_r^{-1}(y): the z with z - F(r, z) = y.
///
/// The slope envelope bounds the bracket: with alpha(r) < 1, A_r has slope
/// at least 1 - alpha(r); with beta(r) > 1, slope at most 1 - beta(r).
inline double invert_jump_map(const CoefficientField& F, double r, double y, double tol = 1e-15) {
    if (!F.has_envelope()) throw CapabilityError(F.label() + ": inverting y - F(r, y) needs a slope envelope");
    const double fy = F(r, y);
    if (fy == 0.0) return y;
    const double a = F.alpha(r);
    const double b = F.beta ? F.beta(r) : -std::numeric_limits<double>::infinity();
    double gap = 0.0;
    if (a < 1.0) {
        gap = 1.0 - a;
    } else if (b > 1.0) {
        gap = b - 1.0;
    } else {
        throw PreconditionError("y - F(r, y) is not strictly monotone under the declared envelope at r = " +
                                std::to_string(r));
    }
    const double reach = std::abs(fy) / gap;
    const double pad = 1e-12 * (1.0 + reach + std::abs(y));
    double lo = y - reach - pad;
    double hi = y + reach + pad;
    auto h = [&](double z) { return z - F(r, z) - y; };
    double hlo = h(lo);
    const double width = tol * std::max(1.0, std::abs(y));
    for (int it = 0; it < 200 && hi - lo > width; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        const double hm = h(mid);
        if (hm == 0.0) return mid;
        if ((hm > 0.0) == (hlo > 0.0)) {
            lo = mid;
            hlo = hm;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

/// Forward jump coefficient of a backward equation: F~(t, x) = F(t, A_t^{-1}(x)).
inline CoefficientField backward_to_forward(const CoefficientField& F) {
    CoefficientField G;
    G.value = [F](double t, double x) { return F(t, invert_jump_map(F, t, x)); };
    if (F.has_d2()) {
        G.d2 = [F](double t, double x) {
            const double d = F.dx(t, invert_jump_map(F, t, x));
            return d / (1.0 - d);
        };
    }
    G.name = "converted " + F.label();
    return G;
}

struct GridSpec {
    int t_points = 11;
    double x_lo = -5.0;
    double x_hi = 5.0;
    int x_points = 41;
    double margin = 0.0;

    double t(int i) const { return t_points == 1 ? 0.0 : static_cast<double>(i) / (t_points - 1); }
    double x(int k) const { return x_points == 1 ? x_lo : x_lo + (x_hi - x_lo) * k / (x_points - 1); }
};

struct BackwardExistenceReport {
    bool ok = true;
    /// "Con1" when A_r is increasing everywhere, "Con2" when decreasing.
    std::string condition;
    double r = 0.0, x = 0.0, y = 0.0;
    std::string message;
};

/// Scans whether A_r(x) = x - F(r, x) is strictly monotone on the grid, in one
/// direction throughout, and consistent with the declared envelope.
inline BackwardExistenceReport check_backward_existence(const CoefficientField& F, const GridSpec& grid = {}) {
    BackwardExistenceReport rep;
    int direction = 0;
    for (int i = 0; i < grid.t_points; ++i) {
        const double r = grid.t(i);
        for (int a = 1; a < grid.x_points; ++a) {
            for (int b = 0; b < a; ++b) {
                const double x = grid.x(a);
                const double y = grid.x(b);
                const double dF = F(r, x) - F(r, y);
                const double slope = 1.0 - dF / (x - y);
                const int sign = slope > 1e-12 ? 1 : (slope < -1e-12 ? -1 : 0);
                auto fail = [&](std::string why) {
                    rep.ok = false;
                    rep.condition.clear();
                    rep.r = r;
                    rep.x = x;
                    rep.y = y;
                    rep.message = std::move(why);
                    return rep;
                };
                if (sign == 0) return fail("A_r has zero slope");
                if (direction == 0) direction = sign;
                if (sign != direction) return fail("A_r changes monotonicity");
                if (F.has_envelope()) {
                    const double slack = 1e-12 * (1.0 + std::abs(dF));
                    if (dF > F.alpha(r) * (x - y) + slack) return fail("above the alpha envelope");
                    if (F.beta && dF < F.beta(r) * (x - y) - slack) return fail("below the beta envelope");
                }
            }
        }
    }
    rep.condition = direction >= 0 ? "Con1" : "Con2";
    return rep;
}

/// Checks alpha - 1 <= beta <= alpha < 1 on a time grid plus the given jump times.
inline void check_backward_envelope(const CoefficientField& F, const JumpPath& path, int t_points = 101) {
    if (!F.has_envelope() || !F.beta) {
        throw CapabilityError(F.label() + ": backward solver needs alpha and beta envelopes");
    }
    auto check = [&](double r) {
        const double a = F.alpha(r);
        const double b = F.beta(r);
        if (!(a - 1.0 <= b && b <= a && a < 1.0)) {
            throw PreconditionError("envelope alpha - 1 <= beta <= alpha < 1 violated at t = " + std::to_string(r));
        }
    };
    for (int i = 0; i < t_points; ++i) check(static_cast<double>(i) / (t_points - 1));
    for (double r : path) check(r);
}

/// Solves X_t = X_0 + int f(r, X_r) dr + sum F(s_i, X_{s_i}) with X_0 = psi(X_1),
/// through the converted forward equation. At each jump the post-jump value
/// is A^{-1}(left limit).
inline Trajectory solve_backward_bvp(const CoefficientField& f, const CoefficientField& F, const BoundaryMap& psi,
                                     const JumpPath& path, const SolverOptions& opt = {}) {
    check_backward_envelope(F, path);
    auto jump = [&F](double r, double y) { return invert_jump_map(F, r, y); };
    return detail::solve_bvp_with_jump(f, jump, psi, path, opt, true);
}

enum class EquationKind { forward, backward, skorohod };

inline std::string to_string(EquationKind k) {
    switch (k) {
    case EquationKind::forward: return "forward";
    case EquationKind::backward: return "backward";
    case EquationKind::skorohod: return "skorohod";
    }
    return "?";
}

/// Coefficients, boundary map and solver settings of one boundary problem.
struct BvpProblem {
    EquationKind kind = EquationKind::forward;
    CoefficientField f;
    CoefficientField F;
    BoundaryMap psi;
    SolverOptions options;
};

/// Forward or backward solve of a problem on one path.
inline Trajectory solve_bvp(const BvpProblem& p, const JumpPath& path) {
    switch (p.kind) {
    case EquationKind::forward: return solve_forward_bvp(p.f, p.F, p.psi, path, p.options);
    case EquationKind::backward: return solve_backward_bvp(p.f, p.F, p.psi, path, p.options);
    case EquationKind::skorohod: break;
    }
    throw CapabilityError("solve_bvp handles forward and backward equations; use solve_skorohod_bvp");
}

} // namespace pbvp
