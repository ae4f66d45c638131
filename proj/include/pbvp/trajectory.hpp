#pragma once

#include "pbvp/errors.hpp"
#include "pbvp/jump_path.hpp"

#include <cmath>
#include <cstddef>
#include <functional>
#include <utility>
#include <vector>

namespace pbvp {

/// Plain-data view of a trajectory: what gets serialized.
struct TrajectoryRecord {
    struct Jump {
        double t = 0.0;
        double left = 0.0;
        double right = 0.0;
        friend bool operator==(const Jump&, const Jump&) = default;
    };

    double x0 = 0.0;
    std::vector<double> jump_times;
    std::vector<std::pair<double, double>> samples; ///< (t, X_t)
    std::vector<Jump> jumps;
    bool backward = false;

    friend bool operator==(const TrajectoryRecord&, const TrajectoryRecord&) = default;
};

/// Piecewise-smooth cadlag path on [0, 1].
///
/// Segment k covers [s_k, s_{k+1}) with s_0 = 0 and s_{n+1} = 1; the
/// evaluator returns the smooth branch of segment k at any t in its closure,
/// so left limits at s_{k+1} come from the same call.
class Trajectory {
public:
    using SegmentEval = std::function<double(std::size_t segment, double t)>;

    Trajectory() = default;

    Trajectory(JumpPath path, std::vector<double> left, std::vector<double> right, SegmentEval eval,
               bool backward = false)
        : path_(std::move(path)), left_(std::move(left)), right_(std::move(right)),
          eval_(std::move(eval)), backward_(backward) {
        if (left_.size() != path_.size() || right_.size() != path_.size()) {
            throw ArgumentError("trajectory: one left/right value per jump required");
        }
    }

    const JumpPath& path() const { return path_; }
    bool backward() const { return backward_; }

    double x0() const { return eval_(0, 0.0); }
    double x1() const { return (*this)(1.0); }

    /// X_t (right-continuous).
    double operator()(double t) const {
        check_time(t);
        return eval_(path_.count(t), t);
    }

    /// X_{t-}; equals X_t away from jumps, and X_0 at t = 0.
    double left_limit(double t) const {
        check_time(t);
        const std::size_t i = path_.index_of(t);
        if (i < path_.size()) return left_[i];
        return (*this)(t);
    }

    double left_at_jump(std::size_t i) const { return left_.at(i); }
    double right_at_jump(std::size_t i) const { return right_.at(i); }
    const std::vector<double>& left_values() const { return left_; }
    const std::vector<double>& right_values() const { return right_; }

    /// Smooth branch of segment k at t (no jump applied at the segment end).
    double segment_value(std::size_t k, double t) const { return eval_(k, t); }

    /// Uniform grid of `points` samples on [0, 1] plus one-sided jump values.
    TrajectoryRecord record(std::size_t points = 101) const {
        if (points < 2) throw ArgumentError("trajectory record needs at least two grid points");
        TrajectoryRecord r;
        r.x0 = x0();
        r.jump_times.assign(path_.begin(), path_.end());
        r.samples.reserve(points);
        for (std::size_t k = 0; k < points; ++k) {
            const double t = static_cast<double>(k) / static_cast<double>(points - 1);
            r.samples.emplace_back(t, (*this)(t));
        }
        for (std::size_t i = 0; i < path_.size(); ++i) {
            r.jumps.push_back({path_[i], left_[i], right_[i]});
        }
        r.backward = backward_;
        return r;
    }

private:
    static void check_time(double t) {
        if (!(t >= 0.0 && t <= 1.0)) throw ArgumentError("trajectory time outside [0, 1]");
    }

    JumpPath path_;
    std::vector<double> left_;
    std::vector<double> right_;
    SegmentEval eval_;
    bool backward_ = false;
};

} // namespace pbvp
