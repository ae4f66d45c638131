#pragma once

#include "pbvp/boundary_solver.hpp"
#include "pbvp/coefficients.hpp"
#include "pbvp/errors.hpp"
#include "pbvp/fixed_point.hpp"
#include "pbvp/flow.hpp"
#include "pbvp/jump_path.hpp"
#include "pbvp/rk4.hpp"
#include "pbvp/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace pbvp {

/// Extremes of a time function sampled on `points` equispaced nodes of [0, 1].
inline std::pair<double, double> sampled_range(const TimeFunction& g, int points = 1001) {
    if (g.is_constant()) return {*g.fixed, *g.fixed};
    double lo = g(0.0), hi = lo;
    for (int i = 1; i < points; ++i) {
        const double v = g(static_cast<double>(i) / (points - 1));
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    return {lo, hi};
}

/// f(t, x) = f1(t) + f2(t) x and F(t, x) = F1(t) + F2(t) x.
struct LinearCoefficients {
    TimeFunction f1 = TimeFunction::constant(0.0);
    TimeFunction f2 = TimeFunction::constant(0.0);
    TimeFunction F1 = TimeFunction::constant(0.0);
    TimeFunction F2 = TimeFunction::constant(0.0);

    static LinearCoefficients constant(double f1, double f2, double F1, double F2) {
        return {TimeFunction::constant(f1), TimeFunction::constant(f2), TimeFunction::constant(F1),
                TimeFunction::constant(F2)};
    }

    CoefficientField drift() const { return field(f1, f2, "linear drift"); }
    CoefficientField jump() const { return field(F1, F2, "linear jump"); }

private:
    static CoefficientField field(const TimeFunction& a, const TimeFunction& b, const char* name) {
        CoefficientField g;
        if (a.is_constant() && b.is_constant()) {
            g = CoefficientField::affine(*a.fixed, *b.fixed);
        } else {
            const auto [alo, ahi] = sampled_range(a);
            g = CoefficientField::affine(a, b, sampled_range(b), std::max(std::abs(alo), std::abs(ahi)));
        }
        g.name = name;
        return g;
    }
};

/// A(t) = exp(int_0^t rate), from cumulative Simpson sums on a fixed grid.
class GrowthFactor {
public:
    GrowthFactor() = default;
    GrowthFactor(TimeFunction rate, double step) : rate_(std::move(rate)) {
        if (!(step > 0.0)) throw ArgumentError("quadrature step must be positive");
        if (rate_.is_constant()) return;
        cells_ = static_cast<std::size_t>(std::ceil(1.0 / step - 1e-9));
        h_ = 1.0 / static_cast<double>(cells_);
        cum_.assign(cells_ + 1, 0.0);
        for (std::size_t k = 0; k < cells_; ++k) {
            const double a = static_cast<double>(k) * h_;
            cum_[k + 1] = cum_[k] + panel(a, a + h_);
        }
    }

    double log(double t) const {
        if (rate_.is_constant()) return *rate_.fixed * t;
        if (t <= 0.0) return 0.0;
        auto k = static_cast<std::size_t>(std::floor(t / h_));
        if (k >= cells_) k = cells_ - 1;
        const double a = static_cast<double>(k) * h_;
        return cum_[k] + panel(a, t);
    }

    double operator()(double t) const { return std::exp(log(t)); }

private:
    double panel(double a, double b) const {
        if (b <= a) return 0.0;
        return (b - a) / 6.0 * (rate_(a) + 4.0 * rate_(0.5 * (a + b)) + rate_(b));
    }

    TimeFunction rate_ = TimeFunction::constant(0.0);
    std::size_t cells_ = 0;
    double h_ = 0.0;
    std::vector<double> cum_;
};

/// A(t) and eta_t = A(t) prod_{S_i <= t} (1 + F2(S_i)).
struct LinearFactors {
    GrowthFactor A;
    TimeFunction F2;

    LinearFactors(const LinearCoefficients& lc, double quad_step) : A(lc.f2, quad_step), F2(lc.F2) {}

    double eta(double t, const JumpPath& path) const {
        double p = A(t);
        for (double s : path) {
            if (s > t) break;
            p *= 1.0 + F2(s);
        }
        return p;
    }
};

enum class LinearForm { automatic, eta, telescoped };

namespace detail {

/// Pathwise affine model: X' = f1 + f2 X between jumps, X -> factor_j X + shift_j at jump j.
///
/// Bounds b_0 = 0, b_m = s_m, b_{n+1} = 1; segment m is [b_m, b_{m+1}).
struct AffineJumpModel {
    std::shared_ptr<const GrowthFactor> A;
    TimeFunction f1;
    double quad_step = 1e-3;
    std::vector<double> bounds;
    std::vector<double> factor;
    std::vector<double> shift;
    std::vector<double> block;   ///< int over segment m of f1 / A
    std::vector<double> product; ///< product[m] = prod_{j<m} factor_j
    LinearForm form = LinearForm::eta;

    double integral(double a, double b) const {
        if (f1.is_constant() && *f1.fixed == 0.0) return 0.0;
        return simpson([this](double r) { return f1(r) / (*A)(r); }, a, b, quad_step);
    }

    /// eta form: A(t) P_k [x0 + sum_{m<k} I_m / P_m + I(b_k, t) / P_k + sum_{j<k} shift_j / (A(b_{j+1}) P_{j+1})].
    double eval_eta(double x0, std::size_t k, double t) const {
        double acc = x0;
        for (std::size_t m = 0; m < k; ++m) acc += block[m] / product[m];
        acc += integral(bounds[k], t) / product[k];
        for (std::size_t j = 0; j < k; ++j) acc += shift[j] / ((*A)(bounds[j + 1]) * product[j + 1]);
        return (*A)(t) * product[k] * acc;
    }

    /// Telescoped form: A(t) sum_l c_l prod_{j=l}^{k-1} factor_j.
    double eval_telescoped(double x0, std::size_t k, double t) const {
        double y = 0.0;
        for (std::size_t l = 0; l <= k; ++l) {
            double c = l == 0 ? x0 : shift[l - 1] / (*A)(bounds[l]);
            c += l == k ? integral(bounds[l], t) : block[l];
            for (std::size_t j = l; j < k; ++j) c *= factor[j];
            y += c;
        }
        return (*A)(t) * y;
    }

    double eval(double x0, std::size_t k, double t) const {
        return form == LinearForm::telescoped ? eval_telescoped(x0, k, t) : eval_eta(x0, k, t);
    }

    /// X_1 = slope x0 + intercept.
    std::pair<double, double> endpoint_affine() const {
        const std::size_t n = factor.size();
        return {(*A)(1.0) * product[n], eval(0.0, n, 1.0)};
    }

    Trajectory trajectory(double x0, const JumpPath& path, bool backward) const {
        const std::size_t n = factor.size();
        std::vector<double> left(n), right(n);
        for (std::size_t j = 0; j < n; ++j) {
            left[j] = eval(x0, j, bounds[j + 1]);
            right[j] = eval(x0, j + 1, bounds[j + 1]);
        }
        auto self = std::make_shared<AffineJumpModel>(*this);
        auto fn = [self, x0](std::size_t k, double t) { return self->eval(x0, k, t); };
        return Trajectory(path, std::move(left), std::move(right), std::move(fn), backward);
    }
};

inline AffineJumpModel make_model(const LinearCoefficients& lc, const JumpPath& path, double quad_step,
                                  std::vector<double> factor, std::vector<double> shift, LinearForm form) {
    AffineJumpModel m;
    m.A = std::make_shared<GrowthFactor>(lc.f2, quad_step);
    m.f1 = lc.f1;
    m.quad_step = quad_step;
    m.bounds.push_back(0.0);
    m.bounds.insert(m.bounds.end(), path.begin(), path.end());
    m.bounds.push_back(1.0);
    m.factor = std::move(factor);
    m.shift = std::move(shift);
    const std::size_t n = path.size();
    m.product.assign(n + 1, 1.0);
    for (std::size_t j = 0; j < n; ++j) m.product[j + 1] = m.product[j] * m.factor[j];
    m.block.resize(n + 1);
    for (std::size_t s = 0; s <= n; ++s) m.block[s] = m.integral(m.bounds[s], m.bounds[s + 1]);
    const bool absorbing = std::any_of(m.factor.begin(), m.factor.end(), [](double v) { return v == 0.0; });
    if (form == LinearForm::automatic) form = absorbing ? LinearForm::telescoped : LinearForm::eta;
    if (form == LinearForm::eta && absorbing) {
        throw ArgumentError("eta form undefined when a jump factor vanishes (F2 = -1)");
    }
    m.form = form;
    return m;
}

inline AffineJumpModel forward_model(const LinearCoefficients& lc, const JumpPath& path, double quad_step,
                                     LinearForm form) {
    std::vector<double> factor, shift;
    for (double s : path) {
        factor.push_back(1.0 + lc.F2(s));
        shift.push_back(lc.F1(s));
    }
    return make_model(lc, path, quad_step, std::move(factor), std::move(shift), form);
}

/// eta~ form of the backward equation: factor 1 / (1 - F2), shift F1 / (1 - F2).
inline AffineJumpModel backward_model(const LinearCoefficients& lc, const JumpPath& path, double quad_step) {
    std::vector<double> factor, shift;
    auto check = [&](double r) {
        if (!(lc.F2(r) < 1.0)) {
            throw PreconditionError("linear backward equation needs F2 < 1; F2(" + std::to_string(r) +
                                    ") = " + std::to_string(lc.F2(r)));
        }
    };
    for (int i = 0; i <= 100; ++i) check(i / 100.0);
    for (double s : path) {
        check(s);
        const double q = 1.0 - lc.F2(s);
        factor.push_back(1.0 / q);
        shift.push_back(lc.F1(s) / q);
    }
    return make_model(lc, path, quad_step, std::move(factor), std::move(shift), LinearForm::eta);
}

inline double affine_fixed_point(const BoundaryMap& psi, std::pair<double, double> line, const SolverOptions& opt) {
    const auto [slope, intercept] = line;
    auto g = [&](double x) { return x - psi(slope * x + intercept); };
    return solve_fixed_point(g, opt.fixed_point());
}

} // namespace detail

/// Closed-form forward solution from X_0 = x0.
inline Trajectory solve_linear_forward(const LinearCoefficients& lc, const JumpPath& path, double x0,
                                       double quad_step = 1e-3, LinearForm form = LinearForm::automatic) {
    return detail::forward_model(lc, path, quad_step, form).trajectory(x0, path, false);
}

/// X_1 as an affine function of X_0: (slope, intercept).
inline std::pair<double, double> linear_endpoint(const LinearCoefficients& lc, const JumpPath& path,
                                                 double quad_step = 1e-3) {
    return detail::forward_model(lc, path, quad_step, LinearForm::automatic).endpoint_affine();
}

/// Closed-form boundary problem: X_0 solves x = psi(slope x + intercept).
inline Trajectory solve_linear_bvp(const LinearCoefficients& lc, const BoundaryMap& psi, const JumpPath& path,
                                   const SolverOptions& opt = {}) {
    auto model = detail::forward_model(lc, path, opt.quad_step, LinearForm::automatic);
    const double x0 = detail::affine_fixed_point(psi, model.endpoint_affine(), opt);
    return model.trajectory(x0, path, false);
}

/// Closed-form backward boundary problem (eta~ representation).
inline Trajectory solve_linear_backward(const LinearCoefficients& lc, const BoundaryMap& psi, const JumpPath& path,
                                        const SolverOptions& opt = {}) {
    auto model = detail::backward_model(lc, path, opt.quad_step);
    const double x0 = detail::affine_fixed_point(psi, model.endpoint_affine(), opt);
    return model.trajectory(x0, path, true);
}

/// x* with x* = psi(Phi(0, 1; x*)): the solution on the no-jump path.
inline double deterministic_fixed_point(const CoefficientField& f, const BoundaryMap& psi,
                                        const SolverOptions& opt = {}) {
    auto g = [&](double x) { return x - psi(det_flow(f, 0.0, 1.0, x, opt.ode_step)); };
    return solve_fixed_point(g, opt.fixed_point());
}

} // namespace pbvp
