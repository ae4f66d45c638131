#pragma once

#include "pbvp/boundary_solver.hpp"
#include "pbvp/coefficients.hpp"
#include "pbvp/errors.hpp"
#include "pbvp/jump_path.hpp"
#include "pbvp/linear.hpp"
#include "pbvp/parallel.hpp"
#include "pbvp/rk4.hpp"
#include "pbvp/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

namespace pbvp {

/// Observation times: a < u < b, v outside [a, b].
struct CiTimes {
    double a = 0.25;
    double u = 0.5;
    double b = 0.75;
    double v = 0.9;

    void validate() const {
        const bool inside = a < u && u < b;
        const bool outside = v < a || v > b;
        if (!(inside && outside && a >= 0.0 && std::max(b, v) <= 1.0 && std::min(a, v) >= 0.0)) {
            throw ArgumentError("CI times need a < u < b and v outside [a, b], all in [0, 1]");
        }
    }
};

struct CiSample {
    double xa = 0.0;
    double xu = 0.0;
    double xb = 0.0;
    double xv = 0.0;
};

struct CiOptions {
    /// Quantile bins per conditioning coordinate (outside atoms).
    std::size_t bins = 4;
    std::size_t permutations = 1000;
    /// Cells and atoms with fewer samples are skipped.
    std::size_t min_count = 50;
    std::size_t min_samples = 10000;
    double alpha = 0.01;
    /// Values closer than this (relative) are one atom.
    double atom_tol = 1e-9;
    /// Shuffles move X_v only within blocks of this many nearest neighbours
    /// in (X_a, X_b); cells on an atom of both coordinates shuffle freely.
    std::size_t local_block = 4;
    std::uint64_t seed = 1;
    unsigned workers = 1;
};

struct CiCell {
    std::size_t key_a = 0;
    std::size_t key_b = 0;
    std::size_t count = 0;
    double dcor = 0.0;
    double p_value = 1.0;
    bool rejected = false;
};

struct CiReport {
    CiTimes times;
    std::size_t bins = 0;
    double alpha = 0.0;
    std::size_t samples = 0;
    std::size_t skipped_cells = 0;
    std::size_t skipped_samples = 0;
    std::vector<CiCell> cells;
    /// Benjamini-Hochberg verdict over the tested cells.
    bool reject = false;
};

namespace detail {

/// Fenwick tree over ranks holding (count, sum x, sum y, sum xy).
class MomentTree {
public:
    explicit MomentTree(std::size_t n) : nodes_(n + 1) {}

    void reset() { std::fill(nodes_.begin(), nodes_.end(), Node{}); }

    void add(std::size_t rank, double x, double y) {
        for (std::size_t i = rank + 1; i < nodes_.size(); i += i & (~i + 1)) {
            auto& n = nodes_[i];
            n.c += 1.0;
            n.x += x;
            n.y += y;
            n.xy += x * y;
        }
    }

    struct Node {
        double c = 0.0, x = 0.0, y = 0.0, xy = 0.0;
    };

    /// Sums over ranks < rank.
    Node below(std::size_t rank) const {
        Node s;
        for (std::size_t i = rank; i > 0; i -= i & (~i + 1)) {
            const auto& n = nodes_[i];
            s.c += n.c;
            s.x += n.x;
            s.y += n.y;
            s.xy += n.xy;
        }
        return s;
    }

private:
    std::vector<Node> nodes_;
};

/// Dense ranks (ties share a rank) of v.
inline std::vector<std::size_t> dense_ranks(const std::vector<double>& v) {
    std::vector<std::size_t> order(v.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&v](std::size_t i, std::size_t j) { return v[i] < v[j]; });
    std::vector<std::size_t> rank(v.size());
    std::size_t r = 0;
    for (std::size_t k = 0; k < order.size(); ++k) {
        if (k > 0 && v[order[k]] != v[order[k - 1]]) ++r;
        rank[order[k]] = r;
    }
    return rank;
}

/// a_i = sum_j |v_i - v_j|.
inline std::vector<double> distance_row_sums(const std::vector<double>& v) {
    const std::size_t n = v.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&v](std::size_t i, std::size_t j) { return v[i] < v[j]; });
    const double total = std::accumulate(v.begin(), v.end(), 0.0);
    std::vector<double> out(n);
    double prefix = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const double x = v[order[k]];
        const double below = static_cast<double>(k) * x - prefix;
        const double above = (total - prefix - x) - static_cast<double>(n - k - 1) * x;
        out[order[k]] = below + above;
        prefix += x;
    }
    return out;
}

/// Squared sample distance covariance (V-statistic) in O(n log n), with y
/// permuted by `perm` (y_i replaced by y_{perm[i]}).
class DistanceCovariance {
public:
    DistanceCovariance(std::vector<double> x, std::vector<double> y)
        : x_(std::move(x)), y_(std::move(y)), tree_(x_.size()) {
        if (x_.size() != y_.size()) throw ArgumentError("distance covariance: sizes differ");
        const double n = static_cast<double>(x_.size());
        const double mx = std::accumulate(x_.begin(), x_.end(), 0.0) / n;
        const double my = std::accumulate(y_.begin(), y_.end(), 0.0) / n;
        for (auto& v : x_) v -= mx;
        for (auto& v : y_) v -= my;
        x_order_.resize(x_.size());
        std::iota(x_order_.begin(), x_order_.end(), std::size_t{0});
        std::stable_sort(x_order_.begin(), x_order_.end(), [this](std::size_t i, std::size_t j) { return x_[i] < x_[j]; });
        y_rank_ = dense_ranks(y_);
        a_ = distance_row_sums(x_);
        b_ = distance_row_sums(y_);
        mean_ab_ = std::accumulate(a_.begin(), a_.end(), 0.0) / (n * n) *
                   std::accumulate(b_.begin(), b_.end(), 0.0) / (n * n);
    }

    std::size_t size() const { return x_.size(); }

    double operator()(const std::vector<std::size_t>& perm) {
        const std::size_t n = x_.size();
        const double nn = static_cast<double>(n);
        tree_.reset();
        MomentTree::Node seen;
        double pairs = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            const std::size_t i = x_order_[k];
            const std::size_t p = perm[i];
            const double xj = x_[i], yj = y_[p];
            const std::size_t r = y_rank_[p];
            const auto lo = tree_.below(r);
            const auto le = tree_.below(r + 1);
            // earlier rows with larger y
            const double hc = seen.c - le.c, hx = seen.x - le.x, hy = seen.y - le.y, hxy = seen.xy - le.xy;
            const double low = xj * yj * lo.c - xj * lo.y - yj * lo.x + lo.xy;
            const double high = xj * yj * hc - xj * hy - yj * hx + hxy;
            pairs += low - high;
            tree_.add(r, xj, yj);
            seen.c += 1.0;
            seen.x += xj;
            seen.y += yj;
            seen.xy += xj * yj;
        }
        double cross = 0.0;
        for (std::size_t i = 0; i < n; ++i) cross += a_[i] * b_[perm[i]];
        return 2.0 * pairs / (nn * nn) + mean_ab_ - 2.0 * cross / (nn * nn * nn);
    }

    double operator()() {
        std::vector<std::size_t> id(x_.size());
        std::iota(id.begin(), id.end(), std::size_t{0});
        return (*this)(id);
    }

private:
    std::vector<double> x_, y_;
    std::vector<std::size_t> x_order_, y_rank_;
    std::vector<double> a_, b_;
    double mean_ab_ = 0.0;
    MomentTree tree_;
};

} // namespace detail

/// Squared distance covariance (V-statistic).
inline double distance_covariance_sq(const std::vector<double>& x, const std::vector<double>& y) {
    return detail::DistanceCovariance(x, y)();
}

/// Distance correlation; 0 when either sample is constant.
inline double distance_correlation(const std::vector<double>& x, const std::vector<double>& y) {
    const double xy = distance_covariance_sq(x, y);
    const double xx = distance_covariance_sq(x, x);
    const double yy = distance_covariance_sq(y, y);
    if (!(xx > 0.0 && yy > 0.0)) return 0.0;
    return std::sqrt(std::max(0.0, xy) / std::sqrt(xx * yy));
}

/// Permutation p-value (1 + #{T* >= T}) / (1 + B) for the distance covariance
/// of (x, y). Shuffles stay inside `blocks` (one block of everything if empty).
inline double dcov_permutation_p(const std::vector<double>& x, const std::vector<double>& y,
                                 std::size_t permutations, Rng& rng,
                                 std::vector<std::vector<std::size_t>> blocks = {}) {
    detail::DistanceCovariance dcov(x, y);
    const double observed = dcov();
    const double slack = 1e-12 * std::abs(observed) + 1e-300;
    if (blocks.empty()) {
        blocks.emplace_back(x.size());
        std::iota(blocks.front().begin(), blocks.front().end(), std::size_t{0});
    }
    std::vector<std::size_t> perm(x.size());
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::size_t hits = 0;
    for (std::size_t b = 0; b < permutations; ++b) {
        for (const auto& block : blocks) {
            for (std::size_t i = block.size(); i > 1; --i) {
                const auto j = std::min(static_cast<std::size_t>(rng.uniform() * static_cast<double>(i)), i - 1);
                std::swap(perm[block[i - 1]], perm[block[j]]);
            }
        }
        if (dcov(perm) >= observed - slack) ++hits;
    }
    return static_cast<double>(hits + 1) / static_cast<double>(permutations + 1);
}

/// Groups of about `size` points that are close in the plane: strips in the
/// first coordinate, cut into runs along the second.
inline std::vector<std::vector<std::size_t>> neighbour_blocks(const std::vector<double>& first,
                                                              const std::vector<double>& second,
                                                              std::size_t size) {
    const std::size_t n = first.size();
    if (size < 2 || n <= size) {
        std::vector<std::size_t> all(n);
        std::iota(all.begin(), all.end(), std::size_t{0});
        return {all};
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return first[i] < first[j]; });
    const auto per_strip = static_cast<std::size_t>(
        static_cast<double>(size) * std::ceil(std::sqrt(static_cast<double>(n) / static_cast<double>(size))));
    std::vector<std::vector<std::size_t>> blocks;
    for (std::size_t lo = 0; lo < n; lo += per_strip) {
        const std::size_t hi = std::min(n, lo + per_strip);
        const auto begin = order.begin() + static_cast<std::ptrdiff_t>(lo);
        std::sort(begin, order.begin() + static_cast<std::ptrdiff_t>(hi),
                  [&](std::size_t i, std::size_t j) { return second[i] < second[j]; });
        for (std::size_t k = lo; k < hi; k += size) {
            blocks.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(k),
                                order.begin() + static_cast<std::ptrdiff_t>(std::min(hi, k + size)));
        }
        // a singleton cannot be shuffled; merge it into the previous block
        if (blocks.back().size() == 1 && blocks.size() > 1) {
            const auto last = blocks.back().front();
            blocks.pop_back();
            blocks.back().push_back(last);
        }
    }
    return blocks;
}

/// Benjamini-Hochberg: which p-values are rejected at level alpha.
inline std::vector<bool> benjamini_hochberg(const std::vector<double>& p, double alpha) {
    const std::size_t m = p.size();
    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&p](std::size_t i, std::size_t j) { return p[i] < p[j]; });
    std::size_t cutoff = 0;
    for (std::size_t k = 0; k < m; ++k) {
        if (p[order[k]] <= alpha * static_cast<double>(k + 1) / static_cast<double>(m)) cutoff = k + 1;
    }
    std::vector<bool> out(m, false);
    for (std::size_t k = 0; k < cutoff; ++k) out[order[k]] = true;
    return out;
}

/// Conditioning cells for one coordinate. Tied values (within atom_tol) are
/// atoms and each atom is its own cell; the untied values are cut at their
/// quantiles into `bins` cells. Returns the keys and the number of atoms,
/// which are keys 0 .. atoms - 1.
inline std::pair<std::vector<std::size_t>, std::size_t> conditioning_keys(const std::vector<double>& v,
                                                                          std::size_t bins, double atom_tol) {
    if (bins == 0) throw ArgumentError("need at least one bin");
    const std::size_t n = v.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&v](std::size_t i, std::size_t j) { return v[i] < v[j]; });
    std::vector<std::size_t> keys(n, 0);
    std::vector<std::size_t> rest;
    std::size_t atoms = 0;
    for (std::size_t lo = 0; lo < n;) {
        std::size_t hi = lo + 1;
        while (hi < n && std::abs(v[order[hi]] - v[order[hi - 1]]) <=
                             atom_tol * std::max(1.0, std::abs(v[order[hi - 1]]))) {
            ++hi;
        }
        if (hi - lo >= 2) {
            for (std::size_t k = lo; k < hi; ++k) keys[order[k]] = atoms;
            ++atoms;
        } else {
            rest.push_back(order[lo]);
        }
        lo = hi;
    }
    // rest is sorted by value
    for (std::size_t k = 0; k < rest.size(); ++k) keys[rest[k]] = atoms + k * bins / rest.size();
    return {keys, atoms};
}

/// Replaces every cluster of tied values (within atom_tol) by its smallest
/// member, so rounding noise inside an atom does not look like variation.
inline std::vector<double> snap_ties(std::vector<double> v, double atom_tol) {
    std::vector<std::size_t> order(v.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&v](std::size_t i, std::size_t j) { return v[i] < v[j]; });
    for (std::size_t k = 1; k < order.size(); ++k) {
        const double prev = v[order[k - 1]];
        if (std::abs(v[order[k]] - prev) <= atom_tol * std::max(1.0, std::abs(prev))) v[order[k]] = prev;
    }
    return v;
}

namespace detail {

/// Residuals of each target on span{1, regressors}, by modified Gram-Schmidt;
/// near-collinear regressors are dropped.
inline void residualize(std::vector<std::vector<double>>& targets, std::vector<std::vector<double>> regressors) {
    const std::size_t n = targets.empty() ? 0 : targets.front().size();
    std::vector<std::vector<double>> basis;
    regressors.insert(regressors.begin(), std::vector<double>(n, 1.0));
    for (auto& col : regressors) {
        const double scale = std::sqrt(std::inner_product(col.begin(), col.end(), col.begin(), 0.0));
        for (const auto& q : basis) {
            const double c = std::inner_product(col.begin(), col.end(), q.begin(), 0.0);
            for (std::size_t i = 0; i < n; ++i) col[i] -= c * q[i];
        }
        const double norm = std::sqrt(std::inner_product(col.begin(), col.end(), col.begin(), 0.0));
        if (!(norm > 1e-9 * std::max(scale, 1e-300))) continue;
        for (auto& x : col) x /= norm;
        basis.push_back(std::move(col));
    }
    for (auto& t : targets) {
        const double scale = std::sqrt(std::inner_product(t.begin(), t.end(), t.begin(), 0.0));
        for (const auto& q : basis) {
            const double c = std::inner_product(t.begin(), t.end(), q.begin(), 0.0);
            for (std::size_t i = 0; i < n; ++i) t[i] -= c * q[i];
        }
        const double left = std::sqrt(std::inner_product(t.begin(), t.end(), t.begin(), 0.0));
        if (left <= 1e-10 * scale) std::fill(t.begin(), t.end(), 0.0);
    }
}

} // namespace detail

/// Conditional independence of X_u and X_v given (X_a, X_b).
///
/// Samples are grouped into cells of (X_a, X_b); inside a cell X_u and X_v
/// are residualized on (1, X_a, X_b) and tested by a distance-covariance
/// permutation test whose shuffles stay among near neighbours in (X_a, X_b).
/// Cell p-values are pooled by Benjamini-Hochberg.
inline CiReport ci_permutation_test(const std::vector<CiSample>& samples, const CiTimes& times,
                                    const CiOptions& opt) {
    times.validate();
    if (samples.size() < opt.min_samples) {
        throw PreconditionError("CI test needs at least " + std::to_string(opt.min_samples) + " samples");
    }
    std::vector<double> xa(samples.size()), xu(samples.size()), xb(samples.size()), xv(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) {
        xa[i] = samples[i].xa;
        xu[i] = samples[i].xu;
        xb[i] = samples[i].xb;
        xv[i] = samples[i].xv;
    }
    xa = snap_ties(std::move(xa), opt.atom_tol);
    xu = snap_ties(std::move(xu), opt.atom_tol);
    xb = snap_ties(std::move(xb), opt.atom_tol);
    xv = snap_ties(std::move(xv), opt.atom_tol);
    const auto [ka, atoms_a] = conditioning_keys(xa, opt.bins, opt.atom_tol);
    const auto [kb, atoms_b] = conditioning_keys(xb, opt.bins, opt.atom_tol);
    std::map<std::pair<std::size_t, std::size_t>, std::vector<std::size_t>> members;
    for (std::size_t i = 0; i < samples.size(); ++i) members[{ka[i], kb[i]}].push_back(i);

    CiReport report;
    report.times = times;
    report.bins = opt.bins;
    report.alpha = opt.alpha;
    report.samples = samples.size();
    std::vector<const std::vector<std::size_t>*> tested;
    std::vector<bool> atomic;
    for (const auto& [key, idx] : members) {
        if (idx.size() < opt.min_count) {
            ++report.skipped_cells;
            report.skipped_samples += idx.size();
            continue;
        }
        CiCell cell;
        cell.key_a = key.first;
        cell.key_b = key.second;
        cell.count = idx.size();
        report.cells.push_back(cell);
        tested.push_back(&idx);
        atomic.push_back(key.first < atoms_a && key.second < atoms_b);
    }
    parallel_for(tested.size(), opt.workers, [&](std::size_t c) {
        const auto& idx = *tested[c];
        std::vector<std::vector<double>> targets(2, std::vector<double>(idx.size()));
        std::vector<std::vector<double>> regressors(2, std::vector<double>(idx.size()));
        for (std::size_t k = 0; k < idx.size(); ++k) {
            const std::size_t i = idx[k];
            targets[0][k] = xu[i];
            targets[1][k] = xv[i];
            regressors[0][k] = xa[i];
            regressors[1][k] = xb[i];
        }
        auto blocks = atomic[c] ? std::vector<std::vector<std::size_t>>{}
                                : neighbour_blocks(regressors[0], regressors[1], opt.local_block);
        detail::residualize(targets, std::move(regressors));
        Rng rng(opt.seed, c);
        report.cells[c].dcor = distance_correlation(targets[0], targets[1]);
        report.cells[c].p_value =
            dcov_permutation_p(targets[0], targets[1], opt.permutations, rng, std::move(blocks));
    });
    std::vector<double> p;
    for (const auto& cell : report.cells) p.push_back(cell.p_value);
    const auto rejected = benjamini_hochberg(p, opt.alpha);
    for (std::size_t c = 0; c < rejected.size(); ++c) {
        report.cells[c].rejected = rejected[c];
        report.reject = report.reject || rejected[c];
    }
    return report;
}

/// Synthetic samples with X_u, X_v independent given (X_a, X_b) when
/// `coupling` is 0; X_v picks up coupling * (noise of X_u) otherwise.
inline std::vector<CiSample> synthetic_ci_samples(std::size_t n, std::uint64_t seed, double coupling = 0.0) {
    std::vector<CiSample> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        Rng rng(seed, i);
        const double xa = rng.normal();
        const double xb = 0.6 * xa + 0.8 * rng.normal();
        const double noise_u = rng.normal();
        const double xu = 0.5 * xa + 0.4 * xb + noise_u;
        const double xv = 0.7 * xb + rng.normal() + coupling * noise_u;
        out[i] = {xa, xu, xb, xv};
    }
    return out;
}

/// One of the five linear coefficient classes with a reciprocal solution.
struct ReciprocalCase {
    int id = 0;
    LinearCoefficients lc;
    BoundaryMap psi;
    std::string description;
};

inline ReciprocalCase reciprocal_case(int id) {
    ReciprocalCase c;
    c.id = id;
    switch (id) {
    case 1:
        c.lc = LinearCoefficients::constant(1.0, 0.5, 1.0, 0.5);
        c.psi = BoundaryMap::constant(0.5);
        c.description = "constant boundary map";
        break;
    case 2:
        c.lc = LinearCoefficients::constant(0.0, 0.5, 0.0, 0.5);
        c.psi = BoundaryMap::affine(-1.0, 0.0);
        c.description = "psi(0) = 0 with f1 = F1 = 0";
        break;
    case 3:
        c.lc = LinearCoefficients::constant(1.0, 0.5, 1.0, 0.0);
        c.psi = BoundaryMap::affine(-1.0, 0.0);
        c.description = "F2 = 0";
        break;
    case 4:
        c.lc = LinearCoefficients::constant(0.0, 0.5, 0.0, 0.5);
        c.psi = BoundaryMap::affine(-1.0, 1.0);
        c.description = "F2 > -1 with f1 = F1 = 0";
        break;
    case 5:
        c.lc = LinearCoefficients::constant(0.0, 0.5, 0.0, -1.0);
        c.psi = BoundaryMap::affine(-1.0, 1.0);
        c.description = "F2 = -1 with f1 = F1 = 0";
        break;
    default:
        throw ArgumentError("reciprocal cases are numbered 1 to 5");
    }
    return c;
}

inline BvpProblem linear_problem(const LinearCoefficients& lc, const BoundaryMap& psi,
                                 const SolverOptions& opt = {}) {
    BvpProblem p;
    p.f = lc.drift();
    p.F = lc.jump();
    p.psi = psi;
    p.options = opt;
    return p;
}

/// (X_a, X_u, X_b, X_v) over n paths; path i uses Rng(seed, i).
inline std::vector<CiSample> sample_ci_data(const BvpProblem& p, const CiTimes& times, std::size_t n,
                                            std::uint64_t seed, unsigned workers = 1) {
    times.validate();
    std::vector<CiSample> out(n);
    parallel_for(n, workers, [&](std::size_t i) {
        Rng rng(seed, i);
        const auto traj = solve_bvp(p, sample_path(rng));
        out[i] = {traj(times.a), traj(times.u), traj(times.b), traj(times.v)};
    });
    return out;
}

/// Outcome of a pathwise structural check.
struct StructureReport {
    std::size_t paths = 0;
    std::size_t failures = 0;
    double max_deviation = 0.0;
    bool pass = false;
};

namespace detail {

inline std::vector<double> check_grid(const JumpPath& path) {
    std::vector<double> grid;
    for (int k = 0; k <= 40; ++k) {
        const double t = 0.025 * k;
        if (!path.contains(t)) grid.push_back(t);
    }
    for (std::size_t j = 0; j < path.size(); ++j) grid.push_back(path[j]);
    std::sort(grid.begin(), grid.end());
    return grid;
}

template <class PathCheck>
inline StructureReport run_structure_check(std::size_t n_paths, std::uint64_t seed, double tol,
                                           const PathCheck& deviation) {
    std::vector<double> dev(n_paths);
    parallel_for(n_paths, 1, [&](std::size_t i) {
        Rng rng(seed, i);
        dev[i] = deviation(sample_path(rng));
    });
    StructureReport r;
    r.paths = n_paths;
    for (double d : dev) {
        if (!(d <= tol)) ++r.failures;
        r.max_deviation = std::max(r.max_deviation, std::isnan(d) ? std::numeric_limits<double>::infinity() : d);
    }
    r.pass = r.failures == 0;
    return r;
}

/// sum over jumps s <= t of g(s).
inline double jump_sum(const JumpPath& path, double t, const TimeFunction& g) {
    double s = 0.0;
    for (double r : path) {
        if (r > t) break;
        s += g(r);
    }
    return s;
}

} // namespace detail

/// With F2 = 0, Y_t = X_t / A(t) minus xi_t = int_0^t f1/A dr + sum_{s_j <= t} F1/A(s_j)
/// is constant in t on every path.
inline StructureReport representation_check_case3(const LinearCoefficients& lc, const BoundaryMap& psi,
                                                  std::size_t n_paths, std::uint64_t seed, double tol = 1e-8,
                                                  const SolverOptions& opt = {}) {
    const auto p = linear_problem(lc, psi, opt);
    const GrowthFactor A(lc.f2, opt.quad_step);
    const TimeFunction jump_weight{[A, F1 = lc.F1](double r) { return F1(r) / A(r); }, nullptr, std::nullopt};
    return detail::run_structure_check(n_paths, seed, tol, [&](const JumpPath& path) {
        const auto traj = solve_bvp(p, path);
        double drift = 0.0, from = 0.0, worst = 0.0;
        for (double t : detail::check_grid(path)) {
            drift += simpson([&](double r) { return lc.f1(r) / A(r); }, from, t, opt.quad_step);
            from = t;
            const double xi = drift + detail::jump_sum(path, t, jump_weight);
            worst = std::max(worst, std::abs(traj(t) / A(t) - xi - traj.x0()));
        }
        return worst;
    });
}

/// With F2 > -1 and f1 = F1 = 0, log|X_t| - xi_t is constant in t, where
/// xi_t = int_0^t f2 + sum_{s_j <= t} log(1 + F2(s_j)); X never changes sign.
inline StructureReport representation_check_case4(const LinearCoefficients& lc, const BoundaryMap& psi,
                                                  std::size_t n_paths, std::uint64_t seed, double tol = 1e-8,
                                                  const SolverOptions& opt = {}) {
    if (psi(0.0) == 0.0) throw PreconditionError("psi(0) = 0: the solution is the zero process");
    const auto p = linear_problem(lc, psi, opt);
    const GrowthFactor A(lc.f2, opt.quad_step);
    const TimeFunction log_factor{[F2 = lc.F2](double r) { return std::log1p(F2(r)); }, nullptr, std::nullopt};
    const double sign = psi(0.0) > 0.0 ? 1.0 : -1.0;
    return detail::run_structure_check(n_paths, seed, tol, [&](const JumpPath& path) {
        const auto traj = solve_bvp(p, path);
        const double base = std::log(std::abs(traj.x0()));
        double worst = 0.0;
        for (double t : detail::check_grid(path)) {
            const double x = traj(t);
            if (!(x * sign > 0.0)) return std::numeric_limits<double>::infinity();
            const double xi = A.log(t) + detail::jump_sum(path, t, log_factor);
            worst = std::max(worst, std::abs(std::log(std::abs(x)) - xi - base));
        }
        return worst;
    });
}

/// With F2 = -1 and f1 = F1 = 0, Y_t = X_t / A(t) is x* on the empty path and
/// psi(0) before the first jump, 0 from it on, otherwise.
inline StructureReport markov_chain_check_case5(const LinearCoefficients& lc, const BoundaryMap& psi,
                                                std::size_t n_paths, std::uint64_t seed, double tol = 1e-8,
                                                const SolverOptions& opt = {}) {
    const auto p = linear_problem(lc, psi, opt);
    const GrowthFactor A(lc.f2, opt.quad_step);
    const double xstar = solve_bvp(p, JumpPath{}).x0();
    const double psi0 = psi(0.0);
    return detail::run_structure_check(n_paths, seed, tol, [&](const JumpPath& path) {
        const auto traj = solve_bvp(p, path);
        double worst = 0.0;
        for (double t : detail::check_grid(path)) {
            const double expect = path.empty() ? xstar : (t < path[0] ? psi0 : 0.0);
            worst = std::max(worst, std::abs(traj(t) / A(t) - expect));
        }
        return worst;
    });
}

/// Cases 1 and 2: the boundary solution equals the initial-value solution
/// from psi's constant (case 1) or is identically zero (case 2).
inline StructureReport degenerate_case_check(int case_id, const LinearCoefficients& lc, const BoundaryMap& psi,
                                             std::size_t n_paths, std::uint64_t seed, double tol = 1e-10,
                                             const SolverOptions& opt = {}) {
    if (case_id != 1 && case_id != 2) throw ArgumentError("degenerate cases are 1 and 2");
    const auto p = linear_problem(lc, psi, opt);
    return detail::run_structure_check(n_paths, seed, tol, [&](const JumpPath& path) {
        const auto traj = solve_bvp(p, path);
        double worst = 0.0;
        if (case_id == 1) {
            const auto ivp = solve_linear_forward(lc, path, psi(0.0), opt.quad_step);
            for (double t : detail::check_grid(path)) worst = std::max(worst, std::abs(traj(t) - ivp(t)));
        } else {
            for (double t : detail::check_grid(path)) worst = std::max(worst, std::abs(traj(t)));
        }
        return worst;
    });
}

} // namespace pbvp
