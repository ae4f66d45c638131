#pragma once

#include "pbvp/boundary_solver.hpp"
#include "pbvp/coefficients.hpp"
#include "pbvp/errors.hpp"
#include "pbvp/flow.hpp"
#include "pbvp/jump_path.hpp"
#include "pbvp/linear.hpp"
#include "pbvp/parallel.hpp"
#include "pbvp/rng.hpp"
#include "pbvp/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstdint>
#include <functional>
#include <map>
#include <numbers>
#include <string>
#include <vector>

namespace pbvp {

struct MonteCarloOptions {
    std::size_t n_paths = 100000;
    std::uint64_t seed = 1;
    unsigned workers = 1;
    /// Samples within this distance of the atom location count as atom.
    double atom_tol = 1e-7;
    /// Jump counts above this are pooled into one stratum.
    std::size_t pool_above = 8;
    /// Multiplier on Silverman's bandwidth.
    double bandwidth_scale = 1.0;
};

/// Gaussian kernel density estimate; degenerate samples carry no density.
struct Kde {
    std::vector<double> samples;
    double bandwidth = 0.0;
    bool degenerate = true;

    double operator()(double y) const {
        if (degenerate) return 0.0;
        double acc = 0.0;
        for (double s : samples) {
            const double z = (y - s) / bandwidth;
            acc += std::exp(-0.5 * z * z);
        }
        return acc / (static_cast<double>(samples.size()) * bandwidth * std::sqrt(2.0 * std::numbers::pi));
    }
};

inline double sample_mean(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

inline double sample_sd(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    const double m = sample_mean(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(v.size() - 1));
}

/// Empirical quantile of sorted data (linear interpolation).
inline double sorted_quantile(const std::vector<double>& sorted, double q) {
    if (sorted.empty()) return NAN;
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

/// Silverman's rule: 0.9 min(sd, IQR / 1.34) n^{-1/5}.
inline double silverman_bandwidth(std::vector<double> v) {
    if (v.size() < 2) return 0.0;
    std::sort(v.begin(), v.end());
    const double sd = sample_sd(v);
    const double iqr = sorted_quantile(v, 0.75) - sorted_quantile(v, 0.25);
    double spread = iqr > 0.0 ? std::min(sd, iqr / 1.34) : sd;
    return 0.9 * spread * std::pow(static_cast<double>(v.size()), -0.2);
}

inline Kde make_kde(std::vector<double> samples, double scale = 1.0) {
    Kde k;
    const double sd = sample_sd(samples);
    const double m = std::abs(sample_mean(samples));
    k.bandwidth = scale * silverman_bandwidth(samples);
    k.degenerate = samples.size() < 2 || !(sd > 1e-9 * (1.0 + m)) || !(k.bandwidth > 0.0);
    k.samples = std::move(samples);
    return k;
}

/// (N_t, N_1 - N_t), each pooled above MonteCarloOptions::pool_above.
struct StratumKey {
    std::size_t before = 0;
    std::size_t after = 0;
    auto operator<=>(const StratumKey&) const = default;
};

struct Stratum {
    StratumKey key;
    std::vector<double> values;
    Kde kde;
    bool atom = false;
};

struct LawSample {
    std::size_t path_id = 0;
    std::size_t n_t = 0;
    std::size_t n_1 = 0;
    double value = 0.0;
    bool is_atom = false;
};

struct LawEstimate {
    double t = 0.0;
    std::size_t n_paths = 0;
    double atom_location = 0.0;
    double atom_mass_hat = 0.0;
    double continuous_fraction = 0.0;
    /// True for the law of phi_t(x) (strata by N_t only).
    bool flow_law = false;
    std::vector<double> ecdf; ///< sorted sample values
    std::map<StratumKey, Stratum> strata;
    std::vector<LawSample> samples; ///< in path order

    double cdf(double y) const {
        if (ecdf.empty()) return 0.0;
        const auto it = std::upper_bound(ecdf.begin(), ecdf.end(), y);
        return static_cast<double>(it - ecdf.begin()) / static_cast<double>(ecdf.size());
    }
};

/// Solves one path (any equation kind); used by the Monte Carlo drivers.
using PathSolver = std::function<Trajectory(const JumpPath&)>;

namespace detail {

inline LawEstimate assemble_law(std::vector<LawSample> samples, double t, double atom_location,
                                const MonteCarloOptions& opt, bool flow_law) {
    LawEstimate est;
    est.t = t;
    est.n_paths = samples.size();
    est.atom_location = atom_location;
    est.flow_law = flow_law;
    std::size_t atoms = 0;
    auto pool = [&](std::size_t n) { return std::min(n, opt.pool_above + 1); };
    for (const auto& s : samples) {
        atoms += s.is_atom;
        est.ecdf.push_back(s.value);
        const StratumKey key{pool(s.n_t), flow_law ? 0 : pool(s.n_1 - s.n_t)};
        auto& st = est.strata[key];
        st.key = key;
        st.values.push_back(s.value);
    }
    std::sort(est.ecdf.begin(), est.ecdf.end());
    const double n = static_cast<double>(samples.size());
    est.atom_mass_hat = samples.empty() ? 0.0 : static_cast<double>(atoms) / n;
    est.continuous_fraction = samples.empty() ? 0.0 : static_cast<double>(samples.size() - atoms) / n;
    for (auto& [key, st] : est.strata) {
        st.atom = key.before == 0 && key.after == 0;
        st.kde = make_kde(st.values, opt.bandwidth_scale);
    }
    est.samples = std::move(samples);
    return est;
}

inline void check_law_time(double t) {
    if (!(t >= 0.0 && t <= 1.0)) throw ArgumentError("law time must lie in [0, 1]");
}

} // namespace detail

/// Monte Carlo law of X_t for a path solver; path i uses Rng(seed, i).
inline LawEstimate estimate_law(const PathSolver& solve, double atom_location, double t,
                                const MonteCarloOptions& opt) {
    detail::check_law_time(t);
    std::vector<LawSample> samples(opt.n_paths);
    parallel_for(opt.n_paths, opt.workers, [&](std::size_t i) {
        Rng rng(opt.seed, i);
        const JumpPath path = sample_path(rng);
        const double x = solve(path)(t);
        samples[i] = {i, path.count(t), path.size(), x, std::abs(x - atom_location) <= opt.atom_tol};
    });
    return detail::assemble_law(std::move(samples), t, atom_location, opt, false);
}

/// Atom location Phi(0, t; x*) of the boundary problem, x* = psi(Phi(0, 1; x*)).
inline double law_atom_location(const BvpProblem& p, double t) {
    const double xstar = deterministic_fixed_point(p.f, p.psi, p.options);
    return det_flow(p.f, 0.0, t, xstar, p.options.ode_step);
}

/// Law of X_t for a forward or backward boundary problem.
inline LawEstimate estimate_law(const BvpProblem& p, double t, const MonteCarloOptions& opt) {
    return estimate_law([&p](const JumpPath& path) { return solve_bvp(p, path); }, law_atom_location(p, t), t,
                        opt);
}

/// Law of phi_0t(x) with atom Phi(0, t; x) of mass e^{-t}.
inline LawEstimate estimate_flow_law(const CoefficientField& f, const CoefficientField& F, double x, double t,
                                     const MonteCarloOptions& opt, double ode_step = default_ode_step) {
    detail::check_law_time(t);
    const double atom = det_flow(f, 0.0, t, x, ode_step);
    std::vector<LawSample> samples(opt.n_paths);
    parallel_for(opt.n_paths, opt.workers, [&](std::size_t i) {
        Rng rng(opt.seed, i);
        const JumpPath path = sample_path(rng);
        const double v = forward_flow(f, F, path, 0.0, t, x, ode_step).value;
        samples[i] = {i, path.count(t), path.size(), v, std::abs(v - atom) <= opt.atom_tol};
    });
    return detail::assemble_law(std::move(samples), t, atom, opt, true);
}

/// Reference draws for one stratum: solves on paths conditioned on the
/// stratum's jump counts (pooled strata are not reproducible and throw).
inline std::vector<double> sample_stratum_values(const PathSolver& solve, StratumKey key, double t,
                                                 std::size_t count, std::uint64_t seed, bool flow_law,
                                                 std::size_t pool_above = 8) {
    if (key.before > pool_above || key.after > pool_above) {
        throw ArgumentError("pooled strata have no conditional sampler");
    }
    std::vector<double> out(count);
    for (std::size_t i = 0; i < count; ++i) {
        Rng rng(seed, i);
        JumpPath path;
        if (flow_law) {
            path = sample_conditional(rng, key.before, t);
        } else {
            path = sample_stratum(rng, key.before, key.after, t);
        }
        out[i] = solve(path)(t);
    }
    return out;
}

struct ConditionPReport {
    bool pass = false;
    double min_value = 0.0;
    double t = 0.0;
    double x = 0.0;
};

/// min over the grid of |f(t, x + F) - f(t, x)(1 + F_x) - F_t|.
inline ConditionPReport check_condition_P(const CoefficientField& f, const CoefficientField& F,
                                          const GridSpec& grid = {}) {
    if (!F.has_d1() || !F.has_d2()) throw CapabilityError("condition P needs F_t and F_x");
    ConditionPReport rep;
    rep.min_value = INFINITY;
    for (int i = 0; i < grid.t_points; ++i) {
        const double t = grid.t(i);
        for (int k = 0; k < grid.x_points; ++k) {
            const double x = grid.x(k);
            const double v = std::abs(f(t, x + F(t, x)) - f(t, x) * (1.0 + F.dx(t, x)) - F.dt(t, x));
            if (v < rep.min_value) {
                rep.min_value = v;
                rep.t = t;
                rep.x = x;
            }
        }
    }
    rep.pass = rep.min_value > grid.margin;
    return rep;
}

struct CarlenPardouxReport {
    bool pass = false;
    double min_lhs = 0.0;
    double argmin_x = 0.0;
    double rhs = 0.0;
    /// The inequality implies condition P; set when it holds.
    bool implies_condition_P = false;
    std::string note;
};

/// |f'F - fF'| > (1/2) sup|f''| sup|F|^2 on the x-grid, for autonomous f, F.
inline CarlenPardouxReport check_carlen_pardoux(const CoefficientField& f, const CoefficientField& F,
                                                const GridSpec& grid = {}) {
    if (!f.autonomous || !F.autonomous) throw PreconditionError("Carlen-Pardoux check needs autonomous f and F");
    if (!f.has_d2() || !F.has_d2() || !f.d22) throw CapabilityError("Carlen-Pardoux check needs f', f'' and F'");
    double sup_f2 = 0.0, sup_F = 0.0;
    for (int k = 0; k < grid.x_points; ++k) {
        const double x = grid.x(k);
        sup_f2 = std::max(sup_f2, std::abs(f.dxx(0.0, x)));
        sup_F = std::max(sup_F, std::abs(F(0.0, x)));
    }
    CarlenPardouxReport rep;
    rep.rhs = 0.5 * sup_f2 * sup_F * sup_F;
    rep.min_lhs = INFINITY;
    for (int k = 0; k < grid.x_points; ++k) {
        const double x = grid.x(k);
        const double v = std::abs(f.dx(0.0, x) * F(0.0, x) - f(0.0, x) * F.dx(0.0, x));
        if (v < rep.min_lhs) {
            rep.min_lhs = v;
            rep.argmin_x = x;
        }
    }
    rep.pass = rep.min_lhs > rep.rhs;
    rep.implies_condition_P = rep.pass;
    rep.note = rep.pass ? "inequality holds on the grid; condition P follows"
                        : "inequality fails on the grid; condition P not established";
    return rep;
}

/// Kolmogorov distribution tail Q(lambda) = 2 sum_{k>=1} (-1)^{k-1} exp(-2 k^2 lambda^2).
inline double kolmogorov_tail(double lambda) {
    if (lambda < 1e-3) return 1.0;
    double sum = 0.0, sign = 1.0, prev = 0.0;
    for (int k = 1; k <= 200; ++k) {
        const double term = sign * std::exp(-2.0 * k * k * lambda * lambda);
        sum += term;
        if (std::abs(term) <= 1e-12 * std::abs(sum) || std::abs(term) <= 1e-300 || std::abs(term) == prev) break;
        prev = std::abs(term);
        sign = -sign;
    }
    return std::clamp(2.0 * sum, 0.0, 1.0);
}

struct KsResult {
    double statistic = 0.0;
    double p_value = 1.0;
};

/// Two-sample Kolmogorov-Smirnov test with the asymptotic p-value
/// (effective size correction sqrt(ne) + 0.12 + 0.11 / sqrt(ne)).
inline KsResult ks_two_sample(std::vector<double> a, std::vector<double> b) {
    if (a.empty() || b.empty()) throw ArgumentError("KS test needs two non-empty samples");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < a.size() && j < b.size()) {
        const double x = std::min(a[i], b[j]);
        while (i < a.size() && a[i] <= x) ++i;
        while (j < b.size() && b[j] <= x) ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
    }
    const double en = std::sqrt(na * nb / (na + nb));
    return {d, kolmogorov_tail((en + 0.12 + 0.11 / en) * d)};
}

struct StratumTest {
    StratumKey key;
    std::size_t n = 0;
    double statistic = 0.0;
    double p_value = 1.0;
    bool rejected = false;
    bool skipped = false;
    std::string notice;
};

/// Draws `count` reference values for a stratum.
using ReferenceSampler = std::function<std::vector<double>(StratumKey key, std::size_t count)>;

/// Per-stratum two-sample KS test against an independent conditional run.
inline std::vector<StratumTest> ks_stratified_test(const LawEstimate& est, const ReferenceSampler& reference,
                                                   double alpha, std::size_t min_samples = 200,
                                                   std::size_t pool_above = 8) {
    std::vector<StratumTest> out;
    for (const auto& [key, st] : est.strata) {
        StratumTest r;
        r.key = key;
        r.n = st.values.size();
        if (st.atom || st.kde.degenerate) {
            r.skipped = true;
            r.notice = "degenerate stratum";
        } else if (r.n < min_samples) {
            r.skipped = true;
            r.notice = "fewer than " + std::to_string(min_samples) + " samples";
        } else if (key.before > pool_above || key.after > pool_above) {
            r.skipped = true;
            r.notice = "pooled stratum";
        } else {
            const auto ks = ks_two_sample(st.values, reference(key, r.n));
            r.statistic = ks.statistic;
            r.p_value = ks.p_value;
            r.rejected = ks.p_value < alpha;
        }
        out.push_back(r);
    }
    return out;
}

} // namespace pbvp
