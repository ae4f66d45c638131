#pragma once

#include "pbvp/coefficients.hpp"
#include "pbvp/errors.hpp"
#include "pbvp/jump_path.hpp"
#include "pbvp/rk4.hpp"
#include "pbvp/trajectory.hpp"

#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <vector>

namespace pbvp {

inline constexpr double default_ode_step = 1e-3;

/// Value right after a jump at r, given the left limit.
using JumpMap = std::function<double(double r, double left)>;

/// Forward jump map y -> y + F(r, y).
inline JumpMap forward_jump_map(const CoefficientField& F) {
    return [F = F.value](double r, double y) { return y + F(r, y); };
}

namespace detail {

inline void check_interval(double s, double t) {
    if (!(s >= 0.0 && s <= t && t <= 1.0)) {
        throw ArgumentError("flow interval must satisfy 0 <= s <= t <= 1");
    }
}

inline auto drift_of(const CoefficientField& f) {
    return [&v = f.value](double r, double y) { return v(r, y); };
}

/// Calls fn with a callable for g: a plain closure when g is a constant
/// affine map, otherwise a wrapper around the type-erased value.
template <class Fn>
inline decltype(auto) with_field(const CoefficientField& g, Fn&& fn) {
    if (g.affine_form) {
        const auto [a, b] = *g.affine_form;
        return fn([a, b](double, double y) { return a + b * y; });
    }
    return fn(drift_of(g));
}

} // namespace detail

/// Phi(s, t; x): solution of y' = f(t, y) from (s, x), by fixed-step RK4.
inline double det_flow(const CoefficientField& f, double s, double t, double x,
                       double ode_step = default_ode_step) {
    detail::check_interval(s, t);
    return detail::with_field(f, [&](const auto& drift) { return rk4_integrate(drift, s, t, x, ode_step); });
}

struct DetFlowPartials {
    double d_s = 0.0;
    double d_t = 0.0;
    double d_x = 0.0;
};

/// Partials of Phi(s, t; x) in s, t and x.
inline DetFlowPartials det_flow_partials(const CoefficientField& f, double s, double t, double x,
                                         double ode_step = default_ode_step) {
    detail::check_interval(s, t);
    if (!f.has_d2()) throw CapabilityError(f.label() + ": det_flow_partials needs the x-partial");
    auto [y, q] = rk4_integrate_augmented(detail::drift_of(f), f.d2, s, t, x, ode_step);
    const double growth = std::exp(q);
    return {-f(s, x) * growth, f(t, y), growth};
}

/// phi_st(x) together with its inputs.
struct FlowResult {
    double value = 0.0;
    JumpPath path;
    double s = 0.0;
    double t = 0.0;
    double x = 0.0;
};

/// Walks the flow from (s, x) to t: ODE between jumps in (s, t], jump map at each.
///
/// `on_jump(i, left, right)` sees every applied jump (i = index in the path).
template <class Drift, class Jump, class OnJump>
inline double walk_flow(const Drift& drift, const Jump& jump, const JumpPath& path, double s, double t,
                        double x, double ode_step, const OnJump& on_jump) {
    double y = x;
    double from = s;
    const auto times = path.times();
    for (std::size_t i = 0; i < times.size(); ++i) {
        const double r = times[i];
        if (r <= s) continue;
        if (r > t) break;
        y = rk4_integrate(drift, from, r, y, ode_step);
        const double right = jump(r, y);
        check_finite(right, "jump map");
        on_jump(i, y, right);
        y = right;
        from = r;
    }
    return rk4_integrate(drift, from, t, y, ode_step);
}

template <class Drift, class Jump>
inline double walk_flow(const Drift& drift, const Jump& jump, const JumpPath& path, double s, double t,
                        double x, double ode_step) {
    return walk_flow(drift, jump, path, s, t, x, ode_step, [](std::size_t, double, double) {});
}

/// phi_st(x) over the given path (forward jump map).
inline FlowResult forward_flow(const CoefficientField& f, const CoefficientField& F, const JumpPath& path,
                               double s, double t, double x, double ode_step = default_ode_step) {
    detail::check_interval(s, t);
    const double value = detail::with_field(f, [&](const auto& drift) {
        return detail::with_field(F, [&](const auto& jc) {
            auto jump = [&jc](double r, double y) { return y + jc(r, y); };
            return walk_flow(drift, jump, path, s, t, x, ode_step);
        });
    });
    return {value, path, s, t, x};
}

/// d phi_st(x) / dx.
inline double flow_x_derivative(const CoefficientField& f, const CoefficientField& F, const JumpPath& path,
                                double s, double t, double x, double ode_step = default_ode_step) {
    detail::check_interval(s, t);
    if (!f.has_d2() || !F.has_d2()) {
        throw CapabilityError("flow_x_derivative needs x-partials of f and F");
    }
    auto drift = detail::drift_of(f);
    double y = x;
    double from = s;
    double exponent = 0.0;
    double product = 1.0;
    for (double r : path) {
        if (r <= s) continue;
        if (r > t) break;
        auto [left, q] = rk4_integrate_augmented(drift, f.d2, from, r, y, ode_step);
        exponent += q;
        product *= 1.0 + F.dx(r, left);
        y = left + F(r, left);
        from = r;
    }
    exponent += rk4_integrate_augmented(drift, f.d2, from, t, y, ode_step).second;
    return std::exp(exponent) * product;
}

/// d phi_st(x) / d s_j (j zero-based); 0 unless s < s_j <= t.
inline double flow_jump_derivative(const CoefficientField& f, const CoefficientField& F, const JumpPath& path,
                                   double s, double t, double x, std::size_t j,
                                   double ode_step = default_ode_step) {
    detail::check_interval(s, t);
    if (j >= path.size()) throw ArgumentError("flow_jump_derivative: jump index out of range");
    if (!f.has_d2() || !F.has_d1() || !F.has_d2()) {
        throw CapabilityError("flow_jump_derivative needs f_x, F_t and F_x");
    }
    const double sj = path[j];
    if (sj <= s || sj > t) return 0.0;

    auto drift = detail::drift_of(f);
    auto jump = [&v = F.value](double r, double y) { return y + v(r, y); };
    double left = 0.0;
    double right = 0.0;
    walk_flow(drift, jump, path, s, sj, x, ode_step, [&](std::size_t i, double l, double r) {
        if (i == j) {
            left = l;
            right = r;
        }
    });
    const double bracket = -f(sj, right) + F.dt(sj, left) + f(sj, left) * (1.0 + F.dx(sj, left));

    double y = right;
    double from = sj;
    double exponent = 0.0;
    double product = 1.0;
    for (std::size_t i = j + 1; i < path.size() && path[i] <= t; ++i) {
        const double r = path[i];
        auto [l, q] = rk4_integrate_augmented(drift, f.d2, from, r, y, ode_step);
        exponent += q;
        product *= 1.0 + F.dx(r, l);
        y = l + F(r, l);
        from = r;
    }
    exponent += rk4_integrate_augmented(drift, f.d2, from, t, y, ode_step).second;
    return std::exp(exponent) * product * bracket;
}

/// Residual of the change-of-variables formula for G along phi_s.(x).
///
/// G supplies its value and both partials (d1, d2).
inline double verify_change_of_variables(const CoefficientField& G, const CoefficientField& f,
                                         const CoefficientField& F, const JumpPath& path, double s, double t,
                                         double x, double ode_step = default_ode_step) {
    detail::check_interval(s, t);
    if (!G.has_d1() || !G.has_d2()) throw CapabilityError("change of variables needs G_t and G_x");
    auto drift = detail::drift_of(f);
    auto integrand = [&](double r, double y) { return G.dt(r, y) + G.dx(r, y) * f(r, y); };
    double y = x;
    double from = s;
    double integral = 0.0;
    double jumps = 0.0;
    for (double r : path) {
        if (r <= s) continue;
        if (r > t) break;
        auto [left, q] = rk4_integrate_augmented(drift, integrand, from, r, y, ode_step);
        integral += q;
        const double right = left + F(r, left);
        jumps += G(r, right) - G(r, left);
        y = right;
        from = r;
    }
    auto [end, q] = rk4_integrate_augmented(drift, integrand, from, t, y, ode_step);
    integral += q;
    return std::abs(G(t, end) - G(s, x) - integral - jumps);
}

/// Dense trajectory of y' = f between jumps and `jump` at each jump, from X_0 = x0.
inline Trajectory flow_trajectory(const CoefficientField& f, const JumpMap& jump, const JumpPath& path, double x0,
                                  double ode_step = default_ode_step, bool backward = false) {
    auto segments = std::make_shared<std::vector<SegmentSolution>>();
    segments->reserve(path.size() + 1);
    std::vector<double> left(path.size());
    std::vector<double> right(path.size());
    double y = x0;
    double from = 0.0;
    for (std::size_t i = 0; i <= path.size(); ++i) {
        const double to = i < path.size() ? path[i] : 1.0;
        segments->push_back(detail::with_field(
            f, [&](const auto& drift) { return rk4_segment(drift, from, to, y, ode_step); }));
        if (i == path.size()) break;
        left[i] = segments->back().end();
        right[i] = jump(to, left[i]);
        check_finite(right[i], "jump map");
        y = right[i];
        from = to;
    }
    auto eval = [segments, v = f.value](std::size_t k, double t) {
        return (*segments)[k].at(v, t);
    };
    return Trajectory(path, std::move(left), std::move(right), std::move(eval), backward);
}

/// Dense forward trajectory t -> phi_0t(x0).
inline Trajectory forward_trajectory(const CoefficientField& f, const CoefficientField& F, const JumpPath& path,
                                     double x0, double ode_step = default_ode_step) {
    return flow_trajectory(f, forward_jump_map(F), path, x0, ode_step);
}

} // namespace pbvp
