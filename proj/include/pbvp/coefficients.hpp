#pragma once

#include "pbvp/errors.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <utility>

namespace pbvp {

/// A function of time with an optional analytic derivative.
struct TimeFunction {
    std::function<double(double)> value;
    std::function<double(double)> derivative;
    /// Set when the function is a known constant.
    std::optional<double> fixed;

    double operator()(double t) const { return value(t); }
    bool has_derivative() const { return static_cast<bool>(derivative); }
    bool is_constant() const { return fixed.has_value(); }

    static TimeFunction constant(double c) {
        return {[c](double) { return c; }, [](double) { return 0.0; }, c};
    }
    /// c0 + c1 t
    static TimeFunction affine(double c0, double c1) {
        if (c1 == 0.0) return constant(c0);
        return {[c0, c1](double t) { return c0 + c1 * t; }, [c1](double) { return c1; }, std::nullopt};
    }
};

using ScalarField = std::function<double(double, double)>;

/// A coefficient (t, x) -> R with optional analytic partials and declared
/// regularity constants.
///
/// Declared constants are trusted by the bounds checks and preconditions;
/// `spot_check` verifies them on a grid.
struct CoefficientField {
    ScalarField value;
    ScalarField d1;  ///< partial in t
    ScalarField d2;  ///< partial in x
    ScalarField d22; ///< second partial in x (Carlen-Pardoux check)

    std::optional<double> lipschitz;   ///< K: |g(t,x)-g(t,y)| <= K|x-y|
    std::optional<double> sup_at_zero; ///< M: sup_t |g(t,0)|
    std::optional<double> slope_lower; ///< k: g(t,x)-g(t,y) >= k(x-y), x > y
    std::optional<double> slope_upper; ///< g(t,x)-g(t,y) <= K'(x-y), x > y

    /// Per-t slope envelopes beta(t)(x-y) <= g(t,x)-g(t,y) <= alpha(t)(x-y).
    std::function<double(double)> alpha;
    std::function<double(double)> beta;

    /// (a, b) when g(t, x) = a + b x with constant a, b; lets hot loops skip
    /// the type-erased call. Must be cleared if `value` is replaced.
    std::optional<std::pair<double, double>> affine_form;

    /// True when g does not depend on t.
    bool autonomous = false;
    /// True when g does not depend on x.
    bool state_free = false;

    std::string name;

    double operator()(double t, double x) const { return value(t, x); }

    double dt(double t, double x) const {
        if (!d1) throw CapabilityError(label() + ": analytic partial in t not declared");
        return d1(t, x);
    }
    double dx(double t, double x) const {
        if (!d2) throw CapabilityError(label() + ": analytic partial in x not declared");
        return d2(t, x);
    }
    double dxx(double t, double x) const {
        if (!d22) throw CapabilityError(label() + ": second partial in x not declared");
        return d22(t, x);
    }

    bool has_d1() const { return static_cast<bool>(d1); }
    bool has_d2() const { return static_cast<bool>(d2); }
    bool has_envelope() const { return static_cast<bool>(alpha); }

    std::string label() const { return name.empty() ? std::string("coefficient") : name; }

    /// Same field with every analytic partial removed.
    CoefficientField without_partials() const {
        CoefficientField g = *this;
        g.d1 = nullptr;
        g.d2 = nullptr;
        g.d22 = nullptr;
        return g;
    }

    static CoefficientField zero() { return constant(0.0); }

    static CoefficientField constant(double c) {
        CoefficientField g;
        g.value = [c](double, double) { return c; };
        g.d1 = [](double, double) { return 0.0; };
        g.d2 = [](double, double) { return 0.0; };
        g.d22 = [](double, double) { return 0.0; };
        g.lipschitz = 0.0;
        g.sup_at_zero = std::abs(c);
        g.slope_lower = 0.0;
        g.slope_upper = 0.0;
        g.alpha = [](double) { return 0.0; };
        g.beta = [](double) { return 0.0; };
        g.autonomous = true;
        g.state_free = true;
        g.affine_form = std::pair{c, 0.0};
        g.name = "constant";
        return g;
    }

    /// g(t, x) = a(t) + b(t) x.
    ///
    /// `b_bounds` are (inf b, sup b) over [0, 1]; `a_sup` is sup |a|.
    static CoefficientField affine(TimeFunction a, TimeFunction b, std::pair<double, double> b_bounds,
                                   double a_sup, bool autonomous = false) {
        CoefficientField g;
        g.value = [a = a.value, b = b.value](double t, double x) { return a(t) + b(t) * x; };
        if (a.has_derivative() && b.has_derivative()) {
            g.d1 = [da = a.derivative, db = b.derivative](double t, double x) {
                return da(t) + db(t) * x;
            };
        }
        g.d2 = [b = b.value](double t, double) { return b(t); };
        g.d22 = [](double, double) { return 0.0; };
        g.lipschitz = std::max(std::abs(b_bounds.first), std::abs(b_bounds.second));
        g.sup_at_zero = a_sup;
        g.slope_lower = b_bounds.first;
        g.slope_upper = b_bounds.second;
        g.alpha = b.value;
        g.beta = b.value;
        g.autonomous = autonomous;
        g.state_free = b_bounds.first == 0.0 && b_bounds.second == 0.0;
        g.name = "affine";
        return g;
    }

    /// g(t, x) = a + b x with constant a, b.
    static CoefficientField affine(double a, double b) {
        auto g = affine(TimeFunction::constant(a), TimeFunction::constant(b), {b, b}, std::abs(a), true);
        // Direct closures: these sit in the innermost RK4 loop.
        g.value = [a, b](double, double x) { return a + b * x; };
        g.d1 = [](double, double) { return 0.0; };
        g.d2 = [b](double, double) { return b; };
        g.alpha = [b](double) { return b; };
        g.beta = [b](double) { return b; };
        g.affine_form = std::pair{a, b};
        return g;
    }

    /// g(t, x) = a0 + a1 sin(w t) + b x + c tanh(x), with all partials and constants.
    static CoefficientField sine_tanh(double a0, double a1, double w, double b, double c) {
        CoefficientField g;
        g.value = [=](double t, double x) { return a0 + a1 * std::sin(w * t) + b * x + c * std::tanh(x); };
        g.d1 = [=](double t, double) { return a1 * w * std::cos(w * t); };
        g.d2 = [=](double, double x) {
            const double s = 1.0 / std::cosh(x);
            return b + c * s * s;
        };
        g.d22 = [=](double, double x) {
            const double s = 1.0 / std::cosh(x);
            return -2.0 * c * std::tanh(x) * s * s;
        };
        g.lipschitz = std::abs(b) + std::abs(c);
        g.sup_at_zero = std::abs(a0) + std::abs(a1);
        g.slope_lower = b + std::min(c, 0.0);
        g.slope_upper = b + std::max(c, 0.0);
        const double lo = *g.slope_lower, hi = *g.slope_upper;
        g.alpha = [hi](double) { return hi; };
        g.beta = [lo](double) { return lo; };
        g.autonomous = a1 == 0.0;
        g.name = "sine_tanh";
        return g;
    }

    /// g(t, x) = a(t), independent of x.
    static CoefficientField time_only(TimeFunction a, double a_sup) {
        auto g = affine(std::move(a), TimeFunction::constant(0.0), {0.0, 0.0}, a_sup);
        g.name = "time_only";
        return g;
    }
};

/// (f - F)(t, x), keeping partials and constants both sides declare.
inline CoefficientField difference(const CoefficientField& f, const CoefficientField& F) {
    CoefficientField g;
    g.value = [a = f.value, b = F.value](double t, double x) { return a(t, x) - b(t, x); };
    if (f.d1 && F.d1) g.d1 = [a = f.d1, b = F.d1](double t, double x) { return a(t, x) - b(t, x); };
    if (f.d2 && F.d2) g.d2 = [a = f.d2, b = F.d2](double t, double x) { return a(t, x) - b(t, x); };
    if (f.d22 && F.d22) g.d22 = [a = f.d22, b = F.d22](double t, double x) { return a(t, x) - b(t, x); };
    if (f.lipschitz && F.lipschitz) g.lipschitz = *f.lipschitz + *F.lipschitz;
    if (f.sup_at_zero && F.sup_at_zero) g.sup_at_zero = *f.sup_at_zero + *F.sup_at_zero;
    if (f.slope_lower && F.slope_upper) g.slope_lower = *f.slope_lower - *F.slope_upper;
    if (f.slope_upper && F.slope_lower) g.slope_upper = *f.slope_upper - *F.slope_lower;
    if (f.affine_form && F.affine_form) {
        g.affine_form = std::pair{f.affine_form->first - F.affine_form->first,
                                  f.affine_form->second - F.affine_form->second};
    }
    g.autonomous = f.autonomous && F.autonomous;
    g.state_free = f.state_free && F.state_free;
    g.name = f.label() + " - " + F.label();
    return g;
}

/// Result of a grid spot-check of declared constants.
struct SpotCheck {
    bool ok = true;
    double t = 0.0, x = 0.0, y = 0.0;
    std::string what;
};

/// Checks the declared Lipschitz constant and lower/upper slopes on a grid.
inline SpotCheck spot_check(const CoefficientField& g, double x_lo = -5.0, double x_hi = 5.0,
                            int nt = 11, int nx = 41) {
    SpotCheck r;
    for (int i = 0; i < nt; ++i) {
        const double t = nt == 1 ? 0.0 : static_cast<double>(i) / (nt - 1);
        for (int a = 0; a < nx; ++a) {
            for (int b = 0; b < a; ++b) {
                const double x = x_lo + (x_hi - x_lo) * a / (nx - 1);
                const double y = x_lo + (x_hi - x_lo) * b / (nx - 1);
                const double diff = g(t, x) - g(t, y);
                const double slack = 1e-12 * (1.0 + std::abs(diff));
                auto fail = [&](const char* what) {
                    r.ok = false;
                    r.t = t;
                    r.x = x;
                    r.y = y;
                    r.what = what;
                };
                if (g.lipschitz && std::abs(diff) > *g.lipschitz * (x - y) + slack) {
                    fail("lipschitz");
                    return r;
                }
                if (g.slope_lower && diff < *g.slope_lower * (x - y) - slack) {
                    fail("slope_lower");
                    return r;
                }
                if (g.slope_upper && diff > *g.slope_upper * (x - y) + slack) {
                    fail("slope_upper");
                    return r;
                }
            }
        }
    }
    return r;
}

/// The boundary function psi in X_0 = psi(X_1).
struct BoundaryMap {
    std::function<double(double)> value;
    std::function<double(double)> derivative;
    bool nonincreasing = false;
    std::optional<double> bound;           ///< sup |psi|
    std::optional<double> slope_upper;     ///< psi(x)-psi(y) <= eta (x-y), x > y
    std::optional<double> slope_lower;     ///< psi(x)-psi(y) >= eta (x-y), x > y
    bool is_constant = false;

    double operator()(double x) const { return value(x); }

    double dpsi(double x) const {
        if (!derivative) throw CapabilityError("boundary map: derivative not declared");
        return derivative(x);
    }
    bool has_derivative() const { return static_cast<bool>(derivative); }

    static BoundaryMap constant(double c) {
        BoundaryMap p;
        p.value = [c](double) { return c; };
        p.derivative = [](double) { return 0.0; };
        p.nonincreasing = true;
        p.bound = std::abs(c);
        p.slope_upper = 0.0;
        p.slope_lower = 0.0;
        p.is_constant = true;
        return p;
    }

    /// psi(x) = slope x + intercept.
    static BoundaryMap affine(double slope, double intercept) {
        if (slope == 0.0) return constant(intercept);
        BoundaryMap p;
        p.value = [slope, intercept](double x) { return slope * x + intercept; };
        p.derivative = [slope](double) { return slope; };
        p.nonincreasing = slope <= 0.0;
        p.slope_upper = slope;
        p.slope_lower = slope;
        return p;
    }

    /// psi(x) = clamp(slope x + intercept, lo, hi); bounded, Lipschitz.
    static BoundaryMap clamped(double slope, double intercept, double lo, double hi) {
        BoundaryMap p;
        p.value = [=](double x) { return std::clamp(slope * x + intercept, lo, hi); };
        p.derivative = [=](double x) {
            const double y = slope * x + intercept;
            return (y > lo && y < hi) ? slope : 0.0;
        };
        p.nonincreasing = slope <= 0.0;
        p.bound = std::max(std::abs(lo), std::abs(hi));
        p.slope_upper = std::max(slope, 0.0);
        p.slope_lower = std::min(slope, 0.0);
        return p;
    }

    /// psi(x) = center - amplitude * tanh(x / scale); smooth and bounded.
    static BoundaryMap tanh(double center, double amplitude, double scale) {
        BoundaryMap p;
        p.value = [=](double x) { return center - amplitude * std::tanh(x / scale); };
        p.derivative = [=](double x) {
            const double c = std::cosh(x / scale);
            return -amplitude / (scale * c * c);
        };
        p.nonincreasing = amplitude >= 0.0;
        p.bound = std::abs(center) + std::abs(amplitude);
        const double slope = -amplitude / scale;
        p.slope_upper = std::max(slope, 0.0);
        p.slope_lower = std::min(slope, 0.0);
        return p;
    }
};

} // namespace pbvp
