#pragma once

#include "pbvp/errors.hpp"
#include "pbvp/rng.hpp"

#include <algorithm>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace pbvp {

/// Jump times s_1 < ... < s_n of a Poisson path on [0, 1].
///
/// The same value doubles as a point of the canonical Poisson space; the
/// empty path is the special no-jump point `a`.
class JumpPath {
public:
    JumpPath() = default;

    explicit JumpPath(std::vector<double> times) : times_(std::move(times)) {
        for (std::size_t i = 0; i < times_.size(); ++i) {
            if (!(times_[i] > 0.0 && times_[i] <= 1.0)) {
                throw ArgumentError("jump time " + std::to_string(times_[i]) +
                                    " outside (0, 1]");
            }
            if (i > 0 && !(times_[i - 1] < times_[i])) {
                throw ArgumentError("jump times must be strictly increasing");
            }
        }
    }

    JumpPath(std::initializer_list<double> times) : JumpPath(std::vector<double>(times)) {}

    std::size_t size() const { return times_.size(); }
    bool empty() const { return times_.empty(); }
    double operator[](std::size_t i) const { return times_[i]; }
    std::span<const double> times() const { return times_; }
    auto begin() const { return times_.begin(); }
    auto end() const { return times_.end(); }

    friend bool operator==(const JumpPath&, const JumpPath&) = default;

    /// Number of jumps in (s, t].
    std::size_t count(double s, double t) const {
        if (s > t) {
            throw ArgumentError("count_jumps: s > t");
        }
        auto lo = std::upper_bound(times_.begin(), times_.end(), s);
        auto hi = std::upper_bound(times_.begin(), times_.end(), t);
        return static_cast<std::size_t>(hi - lo);
    }

    /// N_t = number of jumps in (0, t].
    std::size_t count(double t) const { return count(0.0, t); }

    /// Path with the jump at (zero-based) index j removed.
    JumpPath without(std::size_t j) const {
        if (j >= times_.size()) {
            throw ArgumentError("remove_jump: index out of range");
        }
        std::vector<double> out;
        out.reserve(times_.size() - 1);
        for (std::size_t i = 0; i < times_.size(); ++i) {
            if (i != j) out.push_back(times_[i]);
        }
        return JumpPath(std::move(out), Trusted{});
    }

    /// Path with all jumps whose bit is set in `mask` removed (bit i = jump i).
    JumpPath without_mask(unsigned long long mask) const {
        std::vector<double> out;
        for (std::size_t i = 0; i < times_.size(); ++i) {
            if (!((mask >> i) & 1ULL)) out.push_back(times_[i]);
        }
        return JumpPath(std::move(out), Trusted{});
    }

    /// Path with an extra jump inserted at t, keeping the order.
    JumpPath with(double t) const {
        if (!(t > 0.0 && t <= 1.0)) {
            throw ArgumentError("inserted jump time outside (0, 1]");
        }
        auto it = std::lower_bound(times_.begin(), times_.end(), t);
        if (it != times_.end() && *it == t) {
            throw ArgumentError("inserted jump time collides with an existing jump");
        }
        std::vector<double> out(times_.begin(), it);
        out.push_back(t);
        out.insert(out.end(), it, times_.end());
        return JumpPath(std::move(out), Trusted{});
    }

    /// Path with jump j moved to `t`; throws if the order would change.
    JumpPath moved(std::size_t j, double t) const {
        if (j >= times_.size()) {
            throw ArgumentError("moved: index out of range");
        }
        std::vector<double> out = times_;
        out[j] = t;
        return JumpPath(std::move(out));
    }

    /// Index of the jump exactly at t, or size() if none.
    std::size_t index_of(double t) const {
        auto it = std::lower_bound(times_.begin(), times_.end(), t);
        if (it != times_.end() && *it == t) return static_cast<std::size_t>(it - times_.begin());
        return times_.size();
    }

    bool contains(double t) const { return index_of(t) < times_.size(); }

private:
    struct Trusted {};
    JumpPath(std::vector<double> times, Trusted) : times_(std::move(times)) {}

    std::vector<double> times_;
};

/// Unit-intensity Poisson path on [0, horizon]: Exp(1) gaps, jumps <= horizon.
inline JumpPath sample_path(Rng& rng, double horizon = 1.0) {
    if (!(horizon > 0.0 && horizon <= 1.0)) {
        throw ArgumentError("sample_path: horizon must lie in (0, 1]");
    }
    auto gap = [&rng] {
        double g = rng.exponential();
        while (g <= 0.0) g = rng.exponential();
        return g;
    };
    std::vector<double> times;
    double t = gap();
    while (t <= horizon) {
        times.push_back(t);
        t += gap();
    }
    return JumpPath(std::move(times));
}

/// Order statistics of n i.i.d. Uniform(lo, hi) draws.
inline std::vector<double> sorted_uniforms(Rng& rng, std::size_t n, double lo, double hi) {
    std::vector<double> u(n);
    for (auto& v : u) {
        do {
            v = rng.uniform(lo, hi);
        } while (v <= lo);
    }
    std::sort(u.begin(), u.end());
    return u;
}

/// Jump times conditioned on exactly n jumps in (0, t]: sorted Uniform(0, t).
inline JumpPath sample_conditional(Rng& rng, std::size_t n, double t) {
    if (n == 0) return JumpPath{};
    if (!(t > 0.0 && t <= 1.0)) {
        throw ArgumentError("sample_conditional: t must lie in (0, 1]");
    }
    return JumpPath(sorted_uniforms(rng, n, 0.0, t));
}

/// Path conditioned on N_t = n and N_1 - N_t = k.
inline JumpPath sample_stratum(Rng& rng, std::size_t n, std::size_t k, double t) {
    std::vector<double> times;
    if (n > 0) times = sorted_uniforms(rng, n, 0.0, t);
    if (k > 0) {
        if (!(t < 1.0)) {
            throw ArgumentError("sample_stratum: no room for jumps after t = 1");
        }
        auto after = sorted_uniforms(rng, k, t, 1.0);
        times.insert(times.end(), after.begin(), after.end());
    }
    return JumpPath(std::move(times));
}

} // namespace pbvp
