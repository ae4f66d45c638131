#pragma once

// Random problem generators and finite-difference helpers shared by the tests.

#include "pbvp/coefficients.hpp"
#include "pbvp/jump_path.hpp"
#include "pbvp/linear.hpp"
#include "pbvp/rng.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace pbvp::testkit {

inline CoefficientField smooth_field(double a0, double a1, double w, double b, double c) {
    auto g = CoefficientField::sine_tanh(a0, a1, w, b, c);
    g.name = "smooth";
    return g;
}

/// Random smooth field with slopes in [b_lo, b_hi] + [-c_max, c_max].
inline CoefficientField random_smooth_field(Rng& rng, double b_lo, double b_hi, double c_max) {
    return smooth_field(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0), rng.uniform(0.5, 4.0),
                        rng.uniform(b_lo, b_hi), rng.uniform(-c_max, c_max));
}

/// Path with 0..max_jumps uniform jumps, at least `gap` apart.
inline JumpPath random_path(Rng& rng, std::size_t max_jumps, double gap = 0.02) {
    const auto n = static_cast<std::size_t>(rng.uniform() * static_cast<double>(max_jumps + 1));
    for (;;) {
        auto times = sorted_uniforms(rng, std::min(n, max_jumps), gap, 1.0 - gap);
        bool ok = true;
        for (std::size_t i = 1; i < times.size(); ++i) ok = ok && times[i] - times[i - 1] > gap;
        if (ok) return JumpPath(times);
    }
}

/// Random time function: constant or affine in t, coefficients in [-scale, scale].
inline TimeFunction random_time_function(Rng& rng, double scale) {
    const double c0 = rng.uniform(-scale, scale);
    if (rng.uniform() < 0.5) return TimeFunction::constant(c0);
    return TimeFunction::affine(c0, rng.uniform(-scale, scale));
}

/// Random linear coefficients with |parameters| <= scale and F2 in [F2_lo, F2_hi] on [0, 1].
inline LinearCoefficients random_linear(Rng& rng, double scale, double F2_lo, double F2_hi) {
    LinearCoefficients lc;
    lc.f1 = random_time_function(rng, scale);
    lc.f2 = random_time_function(rng, scale);
    lc.F1 = random_time_function(rng, scale);
    const double a = rng.uniform(F2_lo, F2_hi);
    const double b = rng.uniform(F2_lo, F2_hi);
    lc.F2 = rng.uniform() < 0.5 ? TimeFunction::constant(a) : TimeFunction::affine(a, b - a);
    return lc;
}

inline double rel_err(double a, double b, double floor = 1e-6) {
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

} // namespace pbvp::testkit
