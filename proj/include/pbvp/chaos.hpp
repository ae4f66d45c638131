#pragma once

#include "pbvp/coefficients.hpp"
#include "pbvp/errors.hpp"
#include "pbvp/jump_path.hpp"
#include "pbvp/linear.hpp"
#include "pbvp/rk4.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <string>
#include <vector>

namespace pbvp {

/// A random variable on canonical Poisson space: omega -> value.
using CanonicalFunctional = std::function<double(const JumpPath& omega)>;
/// A process on canonical Poisson space: (t, omega) -> u_t(omega).
using CanonicalProcess = std::function<double(double t, const JumpPath& omega)>;

namespace detail {

/// int_a^b h using one-sided values at the ends.
template <class H>
inline double open_simpson(const H& h, double a, double b, double step) {
    const double lo = std::nextafter(a, b), hi = std::nextafter(b, a);
    return simpson([&](double r) { return h(std::clamp(r, lo, hi)); }, a, b, step);
}

/// int_0^1 h, with Simpson pieces split at `breaks` (sorted, inside (0, 1)).
template <class H>
inline double piecewise_integral(const H& h, const std::vector<double>& breaks, double step) {
    double total = 0.0;
    double from = 0.0;
    for (double b : breaks) {
        if (b <= from || b >= 1.0) continue;
        total += open_simpson(h, from, b, step);
        from = b;
    }
    return total + open_simpson(h, from, 1.0, step);
}

} // namespace detail

/// phi(u)(omega) = sum_j u_{s_j}(omega minus s_j) - int_0^1 u_t(omega) dt.
///
/// The integral is split at the jumps of omega and at `breaks`, the other
/// times where t -> u_t may be discontinuous.
inline double phi_operator(const CanonicalProcess& u, const JumpPath& omega, double quad_step = 1e-3,
                           const std::vector<double>& extra_breaks = {}) {
    double sum = 0.0;
    for (std::size_t j = 0; j < omega.size(); ++j) sum += u(omega[j], omega.without(j));
    std::vector<double> breaks(omega.begin(), omega.end());
    breaks.insert(breaks.end(), extra_breaks.begin(), extra_breaks.end());
    std::sort(breaks.begin(), breaks.end());
    return sum - detail::piecewise_integral([&](double t) { return u(t, omega); }, breaks, quad_step);
}

/// (Psi_t H)(omega) = H(omega with t added) - H(omega).
inline double psi_operator(const CanonicalFunctional& H, double t, const JumpPath& omega) {
    return H(omega.with(t)) - H(omega);
}

/// Kernel families with closed-form multiple integrals.
struct ChaosKernel {
    enum class Kind { constant_one, indicator, function };

    Kind kind = Kind::constant_one;
    /// Right end of the indicator [0, t].
    double t = 1.0;
    /// Order-1 kernel r -> g(r), with the points where g may jump.
    std::function<double(double)> g;
    std::vector<double> breaks;

    static ChaosKernel constant_one() { return {}; }
    static ChaosKernel indicator(double t) {
        if (!(t >= 0.0 && t <= 1.0)) throw ArgumentError("indicator kernel end must lie in [0, 1]");
        ChaosKernel k;
        k.kind = Kind::indicator;
        k.t = t;
        return k;
    }
    static ChaosKernel function(std::function<double(double)> g, std::vector<double> breaks = {}) {
        ChaosKernel k;
        k.kind = Kind::function;
        k.g = std::move(g);
        std::sort(breaks.begin(), breaks.end());
        k.breaks = std::move(breaks);
        return k;
    }

    /// End of the tensor-power support [0, s]^n.
    double support_end() const { return kind == Kind::indicator ? t : 1.0; }
};

/// c * I_n(kernel).
struct ChaosTerm {
    std::size_t n = 0;
    double c = 0.0;
    ChaosKernel kernel;
};

struct ChaosSeries {
    std::vector<ChaosTerm> terms;
    std::size_t truncation_order = 0;
    /// Bound on the dropped terms for omega with at most `tail_jumps` jumps.
    double tail_bound = 0.0;
    std::size_t tail_jumps = 0;
};

/// I_n(1_{[0,s]}^{tensor n}) / n! for a path with `count` jumps in [0, s]:
/// the coefficient of w^n in e^{-ws} (1 + w)^count.
inline double charlier_normalized(std::size_t n, std::size_t count, double s) {
    double total = 0.0;
    double binom = 1.0; // C(count, k)
    for (std::size_t k = 0; k <= std::min(n, count); ++k) {
        if (k > 0) binom *= static_cast<double>(count - k + 1) / static_cast<double>(k);
        const std::size_t m = n - k;
        total += binom * std::pow(-s, static_cast<double>(m)) / std::tgamma(static_cast<double>(m) + 1.0);
    }
    return total;
}

/// I_n(kernel)(omega).
inline double multiple_integral(const ChaosKernel& kernel, std::size_t n, const JumpPath& omega,
                                double quad_step = 1e-3) {
    if (kernel.kind == ChaosKernel::Kind::function) {
        if (n != 1) throw CapabilityError("function kernels are supported for order 1 only");
        double sum = 0.0;
        for (double s : omega) sum += kernel.g(s);
        return sum - detail::piecewise_integral(kernel.g, kernel.breaks, quad_step);
    }
    if (n > 170) throw CapabilityError("chaos order above 170 overflows the factorial");
    const double s = kernel.support_end();
    return std::tgamma(static_cast<double>(n) + 1.0) * charlier_normalized(n, omega.count(s), s);
}

/// Sum of c * I_n(kernel)(omega) over the series.
inline double eval_chaos(const ChaosSeries& series, const JumpPath& omega, double quad_step = 1e-3) {
    double total = 0.0;
    for (const auto& term : series.terms) total += term.c * multiple_integral(term.kernel, term.n, omega, quad_step);
    return total;
}

/// sum_{n > order} sup over paths with at most `jumps` jumps of |I_n(1_{[0,s]}^{tensor n})| / n!.
inline double charlier_tail(std::size_t order, std::size_t jumps, double s) {
    double total = 0.0;
    for (std::size_t n = order + 1; n <= order + 200; ++n) {
        double bound = 0.0;
        double binom = 1.0;
        for (std::size_t k = 0; k <= std::min(n, jumps); ++k) {
            if (k > 0) binom *= static_cast<double>(jumps - k + 1) / static_cast<double>(k);
            const std::size_t m = n - k;
            bound += binom * std::pow(s, static_cast<double>(m)) / std::tgamma(static_cast<double>(m) + 1.0);
        }
        total += bound;
        if (bound < 1e-300) break;
    }
    return total;
}

/// weight * 1{N_s = 0} as weight e^{-s} sum_{n <= order} (-1)^n / n! I_n(1_{[0,s]}^{tensor n}).
inline ChaosSeries no_jump_series(double weight, double s, std::size_t order, std::size_t tail_jumps = 8) {
    ChaosSeries series;
    series.truncation_order = order;
    series.tail_jumps = tail_jumps;
    const double scale = weight * std::exp(-s);
    for (std::size_t n = 0; n <= order; ++n) {
        const double sign = n % 2 ? -1.0 : 1.0;
        series.terms.push_back({n, scale * sign / std::tgamma(static_cast<double>(n) + 1.0),
                                s == 1.0 ? ChaosKernel::constant_one() : ChaosKernel::indicator(s)});
    }
    series.tail_bound = std::abs(scale) * charlier_tail(order, tail_jumps, s);
    return series;
}

inline ChaosSeries operator+(ChaosSeries a, const ChaosSeries& b) {
    a.terms.insert(a.terms.end(), b.terms.begin(), b.terms.end());
    a.truncation_order = std::max(a.truncation_order, b.truncation_order);
    a.tail_bound += b.tail_bound;
    a.tail_jumps = std::max(a.tail_jumps, b.tail_jumps);
    return a;
}

/// Chaos series of X_t for X_t = X_0 + int f2 X dr - int X dN, X_0 = psi(X_1):
///   X_t = A(t) [(x* - psi(0)) 1{omega = a} + psi(0) 1{N_t = 0}],  A(t) = exp int_0^t f2.
inline ChaosSeries build_case5_chaos(const TimeFunction& f2, double psi0, double xstar, double t,
                                     std::size_t order = 30, double quad_step = 1e-3, std::size_t tail_jumps = 8) {
    if (!(t >= 0.0 && t <= 1.0)) throw ArgumentError("chaos time must lie in [0, 1]");
    const double A = GrowthFactor(f2, quad_step)(t);
    auto series = no_jump_series(A * (xstar - psi0), 1.0, order, tail_jumps);
    if (t == 0.0) {
        series.terms.push_back({0, A * psi0, ChaosKernel::constant_one()});
        return series;
    }
    return series + no_jump_series(A * psi0, t, order, tail_jumps);
}

/// Chaos series of X_t for the affine-boundary problem with state-free jumps
///   X_t = X_0 + int (f1 + f2 X) dr + int F1 delta(N - r),  X_0 = a X_1 + b:
/// a constant plus a first-order term.
inline ChaosSeries build_first_order_chaos(const TimeFunction& f1, const TimeFunction& f2, const TimeFunction& F1,
                                           double a, double b, double t, double quad_step = 1e-3) {
    if (!(t >= 0.0 && t <= 1.0)) throw ArgumentError("chaos time must lie in [0, 1]");
    const GrowthFactor A(f2, quad_step);
    const double denom = 1.0 - a * A(1.0);
    if (std::abs(denom) < 1e-12) throw PreconditionError("boundary slope a equals exp(int f2): no unique solution");
    const double kappa = a * A(1.0) / denom;
    const double At = A(t);
    auto weight = [A, At, kappa, t](double r) { return At * ((r <= t ? 1.0 : 0.0) + kappa) / A(r); };
    const std::vector<double> breaks{t};
    const double drift = detail::piecewise_integral([&](double r) { return weight(r) * f1(r); }, breaks, quad_step);
    ChaosSeries series;
    series.truncation_order = 1;
    series.terms.push_back({0, b * At / denom + drift, ChaosKernel::constant_one()});
    series.terms.push_back(
        {1, 1.0, ChaosKernel::function([weight, F1](double r) { return weight(r) * F1(r); }, breaks)});
    return series;
}

} // namespace pbvp
