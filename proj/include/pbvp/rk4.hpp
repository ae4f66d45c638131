#pragma once

#include "pbvp/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

namespace pbvp {

/// Fixed-step grid on [t0, t1]: nodes t0 + k h, last step shortened to land on t1.
struct StepGrid {
    double t0 = 0.0;
    double t1 = 0.0;
    double step = 1e-3;
    std::size_t steps = 0;

    StepGrid() = default;
    StepGrid(double a, double b, double h) : t0(a), t1(b), step(h) {
        if (!(h > 0.0)) throw ArgumentError("ode step must be positive");
        if (b < a) throw ArgumentError("integration interval reversed");
        const double len = b - a;
        if (len == 0.0) {
            steps = 0;
            return;
        }
        // Ratios within 1e-9 of an integer do not spawn a sliver step.
        steps = static_cast<std::size_t>(std::ceil(len / h - 1e-9));
        if (steps == 0) steps = 1;
    }

    double node(std::size_t k) const { return k >= steps ? t1 : t0 + static_cast<double>(k) * step; }

    /// Largest node index k < steps with node(k) <= t (0 for t <= t0).
    std::size_t locate(double t) const {
        if (steps == 0 || t <= t0) return 0;
        auto k = static_cast<std::size_t>(std::floor((t - t0) / step));
        if (k >= steps) k = steps - 1;
        while (k > 0 && node(k) > t) --k;
        return k;
    }
};

inline void check_finite(double v, const char* where) {
    if (!std::isfinite(v)) throw NumericalOverflow(std::string("non-finite value in ") + where);
}

/// One classical RK4 step of y' = f(t, y).
template <class Fn>
inline double rk4_step(const Fn& f, double t, double y, double h) {
    const double k1 = f(t, y);
    const double k2 = f(t + 0.5 * h, y + 0.5 * h * k1);
    const double k3 = f(t + 0.5 * h, y + 0.5 * h * k2);
    const double k4 = f(t + h, y + h * k3);
    return y + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

/// RK4 step of the augmented system y' = f(t, y), q' = g(t, y).
///
/// The q-increment uses the RK4 stage states, which reduces to Simpson's
/// rule for the quadrature of g along the trajectory.
template <class Fn, class Gn>
inline void rk4_step_augmented(const Fn& f, const Gn& g, double t, double& y, double& q, double h) {
    const double th = t + 0.5 * h;
    const double k1 = f(t, y);
    const double l1 = g(t, y);
    const double y2 = y + 0.5 * h * k1;
    const double k2 = f(th, y2);
    const double l2 = g(th, y2);
    const double y3 = y + 0.5 * h * k2;
    const double k3 = f(th, y3);
    const double l3 = g(th, y3);
    const double y4 = y + h * k3;
    const double k4 = f(t + h, y4);
    const double l4 = g(t + h, y4);
    y += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    q += h / 6.0 * (l1 + 2.0 * l2 + 2.0 * l3 + l4);
}

/// Integrates y' = f(t, y) from (t0, y0) to t1 on the fixed-step grid.
template <class Fn>
inline double rk4_integrate(const Fn& f, double t0, double t1, double y0, double step) {
    const StepGrid grid(t0, t1, step);
    double y = y0;
    for (std::size_t k = 0; k < grid.steps; ++k) {
        const double t = grid.node(k);
        y = rk4_step(f, t, y, grid.node(k + 1) - t);
    }
    check_finite(y, "rk4_integrate");
    return y;
}

/// Integrates y and the quadrature q = int g(r, y_r) dr together.
template <class Fn, class Gn>
inline std::pair<double, double> rk4_integrate_augmented(const Fn& f, const Gn& g, double t0,
                                                         double t1, double y0, double step) {
    const StepGrid grid(t0, t1, step);
    double y = y0;
    double q = 0.0;
    for (std::size_t k = 0; k < grid.steps; ++k) {
        const double t = grid.node(k);
        rk4_step_augmented(f, g, t, y, q, grid.node(k + 1) - t);
    }
    check_finite(y, "rk4_integrate_augmented");
    check_finite(q, "rk4_integrate_augmented");
    return {y, q};
}

/// Dense RK4 solution of one segment: values at every grid node.
struct SegmentSolution {
    StepGrid grid;
    std::vector<double> values; ///< values[k] at grid.node(k), k = 0..steps

    double start() const { return values.front(); }
    double end() const { return values.back(); }

    /// Value at t in [t0, t1]: one partial RK4 step from the preceding node.
    template <class Fn>
    double at(const Fn& f, double t) const {
        if (grid.steps == 0) return values.front();
        if (t >= grid.t1) return values.back();
        const std::size_t k = grid.locate(t);
        const double tk = grid.node(k);
        if (t == tk) return values[k];
        return rk4_step(f, tk, values[k], t - tk);
    }
};

template <class Fn>
inline SegmentSolution rk4_segment(const Fn& f, double t0, double t1, double y0, double step) {
    SegmentSolution seg;
    seg.grid = StepGrid(t0, t1, step);
    seg.values.resize(seg.grid.steps + 1);
    double y = y0;
    seg.values[0] = y;
    for (std::size_t k = 0; k < seg.grid.steps; ++k) {
        const double t = seg.grid.node(k);
        y = rk4_step(f, t, y, seg.grid.node(k + 1) - t);
        seg.values[k + 1] = y;
    }
    check_finite(y, "rk4_segment");
    return seg;
}

/// Composite Simpson rule on [a, b] with at most `step` spacing (even panel count).
template <class Fn>
inline double simpson(const Fn& g, double a, double b, double step) {
    if (b == a) return 0.0;
    std::size_t n = static_cast<std::size_t>(std::ceil(std::abs(b - a) / step - 1e-9));
    n = std::max<std::size_t>(2, n + (n % 2));
    const double h = (b - a) / static_cast<double>(n);
    double sum = g(a) + g(b);
    for (std::size_t i = 1; i < n; ++i) {
        sum += (i % 2 ? 4.0 : 2.0) * g(a + static_cast<double>(i) * h);
    }
    return sum * h / 3.0;
}

} // namespace pbvp
