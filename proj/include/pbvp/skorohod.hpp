#pragma once

#include "pbvp/boundary_solver.hpp"
#include "pbvp/coefficients.hpp"
#include "pbvp/errors.hpp"
#include "pbvp/fixed_point.hpp"
#include "pbvp/flow.hpp"
#include "pbvp/jump_path.hpp"
#include "pbvp/linear.hpp"
#include "pbvp/trajectory.hpp"

#include <cmath>
#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace pbvp {

struct SkorohodOptions {
    SolverOptions solver;
    std::size_t max_level = 8;
    bool check_hypotheses = true;
};

/// Bounded psi, one-sided Lipschitz with slope below e^{-K} or above e^{K},
/// K = Lipschitz(f) + Lipschitz(F).
inline void check_skorohod_hypotheses(const CoefficientField& f, const CoefficientField& F, const BoundaryMap& psi) {
    if (!f.lipschitz || !F.lipschitz) throw CapabilityError("Skorohod problem needs declared Lipschitz constants");
    if (!psi.bound) throw PreconditionError("Skorohod problem needs a bounded boundary map");
    const double K = *f.lipschitz + *F.lipschitz;
    const bool below = psi.slope_upper && *psi.slope_upper < std::exp(-K);
    const bool above = psi.slope_lower && *psi.slope_lower > std::exp(K);
    if (!below && !above) {
        throw PreconditionError("boundary slope must lie below e^{-K} or above e^{K}, K = " + std::to_string(K));
    }
}

/// Solutions already computed, keyed by jump times. Safe for concurrent use.
class SkorohodMemo {
public:
    std::optional<Trajectory> find(const JumpPath& omega) const {
        std::lock_guard lock(mutex_);
        const auto it = table_.find(key(omega));
        if (it == table_.end()) return std::nullopt;
        return it->second;
    }

    /// Keeps the first value stored under a key.
    Trajectory insert(const JumpPath& omega, Trajectory traj) {
        std::lock_guard lock(mutex_);
        return table_.try_emplace(key(omega), std::move(traj)).first->second;
    }

    std::size_t size() const {
        std::lock_guard lock(mutex_);
        return table_.size();
    }

    void clear() {
        std::lock_guard lock(mutex_);
        table_.clear();
    }

private:
    static std::vector<double> key(const JumpPath& omega) { return {omega.begin(), omega.end()}; }

    mutable std::mutex mutex_;
    std::map<std::vector<double>, Trajectory> table_;
};

namespace detail {

inline auto injection_map(const JumpPath& omega, const std::vector<double>& injections) {
    if (injections.size() != omega.size()) throw ArgumentError("one injection per jump required");
    return [&omega, &injections](double r, double y) { return y + injections[omega.index_of(r)]; };
}

} // namespace detail

/// Level flow X_t^n(omega, x): y' = drift between jumps, y += injections[j] at s_j.
inline double skorohod_level_flow(const CoefficientField& drift, const JumpPath& omega,
                                  const std::vector<double>& injections, double x, double t,
                                  double ode_step = default_ode_step) {
    detail::check_interval(0.0, t);
    const auto jump = detail::injection_map(omega, injections);
    return detail::with_field(drift, [&](const auto& g) { return walk_flow(g, jump, omega, 0.0, t, x, ode_step); });
}

/// Level solution with X_0 = psi(X_1), given the injections.
inline Trajectory solve_skorohod_level(const CoefficientField& drift, const BoundaryMap& psi, const JumpPath& omega,
                                       const std::vector<double>& injections, const SolverOptions& opt = {}) {
    const auto jump = detail::injection_map(omega, injections);
    return detail::solve_bvp_with_jump(drift, jump, psi, omega, opt, false);
}

namespace detail {

inline Trajectory skorohod_recurse(const CoefficientField& drift, const CoefficientField& F, const BoundaryMap& psi,
                                   const JumpPath& omega, const SkorohodOptions& opt, SkorohodMemo& memo) {
    if (auto hit = memo.find(omega)) return *hit;
    std::vector<double> injections(omega.size());
    for (std::size_t j = 0; j < omega.size(); ++j) {
        const auto lower = skorohod_recurse(drift, F, psi, omega.without(j), opt, memo);
        injections[j] = F(omega[j], lower(omega[j]));
    }
    return memo.insert(omega, solve_skorohod_level(drift, psi, omega, injections, opt.solver));
}

} // namespace detail

/// Skorohod boundary problem
///   X_t = X_0 + int_0^t f(r, X_r) dr + int_0^t F(r, X_r) delta N~_r,  X_0 = psi(X_1),
/// on canonical Poisson space, level by level from the empty path.
///
/// The memo must only be shared between calls with the same (f, F, psi).
inline Trajectory solve_skorohod_bvp(const CoefficientField& f, const CoefficientField& F, const BoundaryMap& psi,
                                     const JumpPath& omega, const SkorohodOptions& opt, SkorohodMemo& memo) {
    if (omega.size() > opt.max_level) {
        throw ArgumentError("path has " + std::to_string(omega.size()) + " jumps, above max_level " +
                            std::to_string(opt.max_level));
    }
    if (opt.check_hypotheses) check_skorohod_hypotheses(f, F, psi);
    return detail::skorohod_recurse(difference(f, F), F, psi, omega, opt, memo);
}

inline Trajectory solve_skorohod_bvp(const CoefficientField& f, const CoefficientField& F, const BoundaryMap& psi,
                                     const JumpPath& omega, const SkorohodOptions& opt = {}) {
    SkorohodMemo memo;
    return solve_skorohod_bvp(f, F, psi, omega, opt, memo);
}

namespace detail {

inline TimeFunction time_difference(const TimeFunction& a, const TimeFunction& b) {
    if (a.is_constant() && b.is_constant()) return TimeFunction::constant(*a.fixed - *b.fixed);
    TimeFunction d;
    d.value = [a, b](double t) { return a(t) - b(t); };
    if (a.has_derivative() && b.has_derivative()) {
        d.derivative = [a, b](double t) { return a.derivative(t) - b.derivative(t); };
    }
    return d;
}

} // namespace detail

/// Closed form for linear coefficients: X = Y + Z, where Y is the forward
/// solution from 0 with drift (f1 - F1) + (f2 - F2) x and jumps F1 + F2 x, and
///   Z_t = A(t) [Z_0(omega) + sum over nonempty J of jumps <= t of prod_{j in J} F2(s_j) Z_0(omega minus J)],
/// A(t) = exp int_0^t (f2 - F2). Each Z_0(S) solves x = psi(A(1) [x + inner sum over S] + Y_1(S)).
/// Cost is 3^n in the number of jumps.
inline Trajectory solve_linear_skorohod(const LinearCoefficients& lc, const BoundaryMap& psi, const JumpPath& omega,
                                        const SolverOptions& opt = {}) {
    const std::size_t n = omega.size();
    if (n > 12) throw CapabilityError("linear Skorohod closed form is limited to 12 jumps");
    const LinearCoefficients shifted{detail::time_difference(lc.f1, lc.F1), detail::time_difference(lc.f2, lc.F2),
                                     lc.F1, lc.F2};
    const GrowthFactor A(shifted.f2, opt.quad_step);
    const double A1 = A(1.0);
    const std::size_t full = (std::size_t{1} << n) - 1;

    std::vector<double> weight(n);
    for (std::size_t j = 0; j < n; ++j) weight[j] = lc.F2(omega[j]);
    auto product = [&weight](std::size_t mask) {
        double p = 1.0;
        for (std::size_t j = 0; mask; ++j, mask >>= 1) {
            if (mask & 1) p *= weight[j];
        }
        return p;
    };
    /// sum over nonempty J within `pool` of prod F2 * Z_0(kept minus J)
    std::vector<double> z0(full + 1, 0.0);
    auto subset_sum = [&](std::size_t kept, std::size_t pool) {
        double total = 0.0;
        for (std::size_t J = pool; J; J = (J - 1) & pool) total += product(J) * z0[kept & ~J];
        return total;
    };

    // Masks are kept-jump sets; every proper subset has a smaller value.
    for (std::size_t kept = 0; kept <= full; ++kept) {
        const JumpPath sub = omega.without_mask(full & ~kept);
        const double y1 = linear_endpoint(shifted, sub, opt.quad_step).second;
        const double inner = subset_sum(kept, kept);
        z0[kept] = detail::affine_fixed_point(psi, {A1, A1 * inner + y1}, opt);
    }

    const auto y = std::make_shared<Trajectory>(solve_linear_forward(shifted, omega, 0.0, opt.quad_step));
    // Bracket of segment k: jumps 0..k-1 are eligible.
    std::vector<double> bracket(n + 1);
    for (std::size_t k = 0; k <= n; ++k) bracket[k] = z0[full] + subset_sum(full, (std::size_t{1} << k) - 1);

    auto eval = [y, A, bracket](std::size_t k, double t) { return y->segment_value(k, t) + A(t) * bracket[k]; };
    std::vector<double> left(n), right(n);
    for (std::size_t i = 0; i < n; ++i) {
        left[i] = eval(i, omega[i]);
        right[i] = eval(i + 1, omega[i]);
    }
    return Trajectory(omega, std::move(left), std::move(right), std::move(eval));
}

} // namespace pbvp
