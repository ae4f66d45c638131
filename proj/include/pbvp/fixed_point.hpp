#pragma once

#include "pbvp/errors.hpp"

#include <boost/math/tools/toms748_solve.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <utility>

namespace pbvp {

struct FixedPointOptions {
    double tol = 1e-10;
    /// Bracket expansion gives up once |x| would exceed this.
    double bracket_cap = 1e12;
    /// Degeneracy probes span a bracket of width factor * tol.
    double degenerate_width = 1e3;
};

namespace detail {

inline bool opposite(double a, double b) { return (a <= 0.0 && b >= 0.0) || (a >= 0.0 && b <= 0.0); }

/// Throws MultipleSolutions when |g| < tol at both ends and the middle of a
/// bracket of width degenerate_width * tol that contains x (centred on x, or
/// with x as an end, so a root at the edge of a zero interval is caught).
template <class G>
inline void probe_degenerate(const G& g, double x, const FixedPointOptions& opt) {
    const double half = 0.5 * opt.degenerate_width * opt.tol;
    auto small = [&](double y) { return std::abs(g(y)) < opt.tol; };
    const bool left = small(x - half);
    const bool right = small(x + half);
    if (!left && !right) return;
    if (!small(x)) return;
    const bool flat = (left && right) || (left && small(x - 2.0 * half)) || (right && small(x + 2.0 * half));
    if (flat) {
        throw MultipleSolutions("fixed-point residual vanishes on an interval around x = " + std::to_string(x));
    }
}

struct Bracket {
    double lo, hi, glo, ghi;
};

/// Doubles [-1, 1] until g changes sign between two evaluated points.
template <class G>
inline Bracket expand_bracket(const G& g, const FixedPointOptions& opt) {
    double lo = -1.0;
    double hi = 1.0;
    double glo = g(lo);
    double ghi = g(hi);
    if (std::abs(glo) < opt.tol && std::abs(ghi) < opt.tol) probe_degenerate(g, 0.0, opt);
    while (!opposite(glo, ghi)) {
        if (2.0 * hi > opt.bracket_cap) {
            throw NoFixedPoint("no sign change of the fixed-point residual within |x| <= " +
                               std::to_string(opt.bracket_cap));
        }
        const double nlo = 2.0 * lo;
        const double nhi = 2.0 * hi;
        const double gnlo = g(nlo);
        const double gnhi = g(nhi);
        if (opposite(gnlo, glo)) return {nlo, lo, gnlo, glo};
        if (opposite(ghi, gnhi)) return {hi, nhi, ghi, gnhi};
        lo = nlo;
        hi = nhi;
        glo = gnlo;
        ghi = gnhi;
    }
    return {lo, hi, glo, ghi};
}

} // namespace detail

/// Root of g by bracket expansion from [-1, 1] and bisection to width tol.
///
/// Either monotone direction is accepted.
template <class G>
inline double find_fixed_point(const G& g, const FixedPointOptions& opt = {}) {
    if (!(opt.tol > 0.0)) throw ArgumentError("fixed-point tolerance must be positive");
    auto b = detail::expand_bracket(g, opt);
    double lo = b.lo, hi = b.hi, glo = b.glo;
    if (b.glo == 0.0) hi = lo;
    if (b.ghi == 0.0) lo = hi;
    while (hi - lo > opt.tol) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        const double gm = g(mid);
        if (gm == 0.0) {
            lo = hi = mid;
            break;
        }
        if (detail::opposite(glo, gm)) {
            hi = mid;
        } else {
            lo = mid;
            glo = gm;
        }
    }
    const double root = 0.5 * (lo + hi);
    detail::probe_degenerate(g, root, opt);
    return root;
}

/// Same contract as find_fixed_point, refined with TOMS 748 instead of plain
/// bisection (fewer residual evaluations on smooth monotone g). The final
/// bracket is narrowed to tol / 1000 so the residual stays below tol for
/// slopes up to 1000.
template <class G>
inline double solve_fixed_point(const G& g, const FixedPointOptions& opt = {}) {
    if (!(opt.tol > 0.0)) throw ArgumentError("fixed-point tolerance must be positive");
    auto b = detail::expand_bracket(g, opt);
    double root = b.glo == 0.0 ? b.lo : b.hi;
    if (b.glo == 0.0 || b.ghi == 0.0) {
        detail::probe_degenerate(g, root, opt);
        return root;
    }
    auto done = [tol = 1e-3 * opt.tol](double a, double c) {
        const double scale = std::max(std::abs(a), std::abs(c));
        return std::abs(c - a) <= std::max(tol, 4.0 * std::numeric_limits<double>::epsilon() * scale);
    };
    std::uintmax_t iters = 200;
    auto [lo, hi] = boost::math::tools::toms748_solve(g, b.lo, b.hi, b.glo, b.ghi, done, iters);
    root = 0.5 * (lo + hi);
    detail::probe_degenerate(g, root, opt);
    return root;
}

} // namespace pbvp
