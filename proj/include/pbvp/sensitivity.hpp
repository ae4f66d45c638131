#pragma once

#include "pbvp/boundary_solver.hpp"
#include "pbvp/coefficients.hpp"
#include "pbvp/errors.hpp"
#include "pbvp/jump_path.hpp"
#include "pbvp/rk4.hpp"
#include "pbvp/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

namespace pbvp {

/// Jump-time weights of a forward solution X.
///
/// B(t) = exp{int_0^t f_x(r, X_r) dr} prod_{s_i <= t} [1 + F_x(s_i, X_{s_i-})]
/// A(j, t) = exp{int_{s_j}^t f_x} prod_{s_j < s_i <= t} [1 + F_x(s_i, X_{s_i-})] * bracket_j
/// bracket_j = -f(s_j, X_{s_j}) + f(s_j, X_{s_j-}) (1 + F_x(s_j, X_{s_j-})) + F_t(s_j, X_{s_j-})
///
/// Both one-sided values at s_j come from the stored trajectory.
class SensitivityWeights {
public:
    SensitivityWeights(const Trajectory& traj, const CoefficientField& f, const CoefficientField& F,
                       double quad_step = 1e-3)
        : traj_(traj), f_(f), F_(F), quad_step_(quad_step) {
        if (traj.backward()) throw CapabilityError("jump-time weights are defined for forward equations");
        if (!f.has_d2() || !F.has_d2()) throw CapabilityError("jump-time weights need f_x and F_x");
        if (!(quad_step > 0.0)) throw ArgumentError("quadrature step must be positive");
    }

    double B(double t) const {
        check_time(t);
        return std::exp(exponent(0.0, t)) * jump_product(0.0, t);
    }

    double A(std::size_t j, double t) const {
        check_time(t);
        const auto& path = traj_.path();
        if (j >= path.size()) throw ArgumentError("weight_A: jump index out of range");
        const double sj = path[j];
        if (sj > t) throw ArgumentError("weight_A: jump time after t");
        if (!F_.has_d1()) throw CapabilityError("weight_A needs F_t");
        const double left = traj_.left_at_jump(j);
        const double right = traj_.right_at_jump(j);
        const double bracket = -f_(sj, right) + f_(sj, left) * (1.0 + F_.dx(sj, left)) + F_.dt(sj, left);
        return std::exp(exponent(sj, t)) * jump_product(sj, t) * bracket;
    }

private:
    static void check_time(double t) {
        if (!(t >= 0.0 && t <= 1.0)) throw ArgumentError("weight time outside [0, 1]");
    }

    /// int_a^b f_x(r, X_r) dr, segment by segment.
    double exponent(double a, double b) const {
        const auto& path = traj_.path();
        double total = 0.0;
        for (std::size_t k = 0; k <= path.size(); ++k) {
            const double lo = std::max(a, k == 0 ? 0.0 : path[k - 1]);
            const double hi = std::min(b, k < path.size() ? path[k] : 1.0);
            if (hi <= lo) continue;
            total += simpson([&](double r) { return f_.dx(r, traj_.segment_value(k, r)); }, lo, hi, quad_step_);
        }
        return total;
    }

    /// prod over a < s_i <= b of 1 + F_x(s_i, X_{s_i-}).
    double jump_product(double a, double b) const {
        const auto& path = traj_.path();
        double p = 1.0;
        for (std::size_t i = 0; i < path.size(); ++i) {
            if (path[i] <= a || path[i] > b) continue;
            p *= 1.0 + F_.dx(path[i], traj_.left_at_jump(i));
        }
        return p;
    }

    const Trajectory& traj_;
    const CoefficientField& f_;
    const CoefficientField& F_;
    double quad_step_;
};

inline double weight_B(const Trajectory& traj, double t, const CoefficientField& f, const CoefficientField& F,
                       double quad_step = 1e-3) {
    return SensitivityWeights(traj, f, F, quad_step).B(t);
}

inline double weight_A(const Trajectory& traj, std::size_t j, double t, const CoefficientField& f,
                       const CoefficientField& F, double quad_step = 1e-3) {
    return SensitivityWeights(traj, f, F, quad_step).A(j, t);
}

/// dX_0 / ds_j = psi'(X_1) A(j, 1) / (1 - psi'(X_1) B(1)).
inline double dX0_dsj(const Trajectory& traj, std::size_t j, const CoefficientField& f, const CoefficientField& F,
                      const BoundaryMap& psi, double quad_step = 1e-3) {
    const double slope = psi.dpsi(traj.x1());
    const SensitivityWeights w(traj, f, F, quad_step);
    if (j >= traj.path().size()) throw ArgumentError("dX0_dsj: jump index out of range");
    if (slope == 0.0) return 0.0;
    return slope * w.A(j, 1.0) / (1.0 - slope * w.B(1.0));
}

/// dX_t / ds_j = B(t) dX_0/ds_j + A(j, t) 1{s_j <= t}.
inline double dXt_dsj(const Trajectory& traj, std::size_t j, double t, const CoefficientField& f,
                      const CoefficientField& F, const BoundaryMap& psi, double quad_step = 1e-3) {
    const SensitivityWeights w(traj, f, F, quad_step);
    const double d0 = dX0_dsj(traj, j, f, F, psi, quad_step);
    const double direct = traj.path()[j] <= t ? w.A(j, t) : 0.0;
    return w.B(t) * d0 + direct;
}

/// 1e-6, clipped to a quarter of the room around s_j (neighbours, 0, 1 and t).
inline double default_fd_step(const JumpPath& path, std::size_t j, double t) {
    if (j >= path.size()) throw ArgumentError("default_fd_step: jump index out of range");
    const double sj = path[j];
    double room = std::min(sj, 1.0 - sj);
    if (j > 0) room = std::min(room, sj - path[j - 1]);
    if (j + 1 < path.size()) room = std::min(room, path[j + 1] - sj);
    if (t != sj) room = std::min(room, std::abs(t - sj));
    return std::min(1e-6, room / 4.0);
}

/// Central difference of the re-solved X_t in s_j with step h.
inline double fd_oracle(const BvpProblem& p, const JumpPath& path, std::size_t j, double t, double h) {
    if (j >= path.size()) throw ArgumentError("fd_oracle: jump index out of range");
    if (!(h > 0.0)) throw ArgumentError("fd_oracle: step must be positive");
    const double sj = path[j];
    const double lo = j > 0 ? path[j - 1] : 0.0;
    const bool last = j + 1 == path.size();
    const double hi = last ? 1.0 : path[j + 1];
    if (!(sj - h > lo && (last ? sj + h <= hi : sj + h < hi))) {
        throw ArgumentError("fd_oracle: step moves s_j across a neighbour or out of (0, 1]");
    }
    if (t >= sj - h && t < sj + h) throw ArgumentError("fd_oracle: step moves s_j across t");
    const double up = solve_bvp(p, path.moved(j, sj + h))(t);
    const double down = solve_bvp(p, path.moved(j, sj - h))(t);
    return (up - down) / (2.0 * h);
}

inline double fd_oracle(const BvpProblem& p, const JumpPath& path, std::size_t j, double t) {
    return fd_oracle(p, path, j, t, default_fd_step(path, j, t));
}

struct SensitivityRow {
    std::size_t path_id = 0;
    std::size_t j = 0;
    double t = 0.0;
    double analytic = 0.0;
    double fd = 0.0;
    double rel_err = 0.0;
};

/// Relative error with a floor on the scale, so near-zero derivatives are
/// compared absolutely.
inline double sensitivity_rel_err(double analytic, double fd, double floor = 1e-3) {
    return std::abs(analytic - fd) / std::max({std::abs(analytic), std::abs(fd), floor});
}

/// Analytic vs finite-difference derivatives of X_t for every jump and time.
/// Times sitting exactly on s_j are skipped.
inline std::vector<SensitivityRow> sensitivity_rows(const BvpProblem& p, const JumpPath& path, std::size_t path_id,
                                                    const std::vector<double>& times) {
    if (p.kind != EquationKind::forward) throw CapabilityError("sensitivities are defined for forward equations");
    std::vector<SensitivityRow> rows;
    if (path.empty()) return rows;
    const Trajectory traj = solve_bvp(p, path);
    for (std::size_t j = 0; j < path.size(); ++j) {
        for (double t : times) {
            if (std::abs(t - path[j]) < 1e-9) continue;
            const double a = dXt_dsj(traj, j, t, p.f, p.F, p.psi, p.options.quad_step);
            const double d = fd_oracle(p, path, j, t);
            rows.push_back({path_id, j, t, a, d, sensitivity_rel_err(a, d)});
        }
    }
    return rows;
}

} // namespace pbvp
