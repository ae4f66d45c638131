#include "pbvp/boundary_solver.hpp"
#include "pbvp/flow.hpp"
#include "pbvp/linear.hpp"
#include "pbvp/skorohod.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace pbvp;

namespace {

/// Bounded psi with slope_upper <= 0 or a small positive slope.
BoundaryMap random_bounded_psi(Rng& rng, double K) {
    const double u = rng.uniform();
    if (u < 0.4) return BoundaryMap::tanh(rng.uniform(-1.0, 1.0), rng.uniform(0.2, 1.5), rng.uniform(0.5, 2.0));
    if (u < 0.7) return BoundaryMap::clamped(rng.uniform(-1.5, -0.1), rng.uniform(-1.0, 1.0), -2.0, 2.0);
    if (u < 0.85) return BoundaryMap::constant(rng.uniform(-1.0, 1.0));
    // increasing: slope amp / scale below e^{-K}
    const double scale = 1.0;
    return BoundaryMap::tanh(rng.uniform(-1.0, 1.0), -0.9 * std::exp(-K) * scale, scale);
}

double max_gap(const Trajectory& a, const Trajectory& b) {
    double worst = std::abs(a.x0() - b.x0());
    for (int k = 1; k <= 20; ++k) {
        const double t = 0.05 * k - 0.013;
        if (a.path().contains(t)) continue;
        worst = std::max(worst, std::abs(a(t) - b(t)));
    }
    for (std::size_t j = 0; j < a.path().size(); ++j) {
        worst = std::max(worst, std::abs(a.left_at_jump(j) - b.left_at_jump(j)));
        worst = std::max(worst, std::abs(a.right_at_jump(j) - b.right_at_jump(j)));
    }
    return std::max(worst, std::abs(a.x1() - b.x1()));
}

JumpPath path_with(Rng& rng, std::size_t n) {
    for (;;) {
        auto times = sorted_uniforms(rng, n, 0.02, 0.98);
        bool ok = true;
        for (std::size_t i = 1; i < times.size(); ++i) ok = ok && times[i] - times[i - 1] > 0.01;
        if (ok) return JumpPath(times);
    }
}

} // namespace

TEST(Skorohod, EmptyPathIsDeterministicProblem) {
    Rng rng(80, 0);
    for (int i = 0; i < 10; ++i) {
        const auto f = testkit::random_smooth_field(rng, -0.5, 0.5, 0.3);
        const auto F = testkit::random_smooth_field(rng, -0.3, 0.3, 0.2);
        const auto psi = BoundaryMap::tanh(0.1, 1.0, 1.0);
        const auto traj = solve_skorohod_bvp(f, F, psi, JumpPath{});
        const double xstar = deterministic_fixed_point(difference(f, F), psi);
        EXPECT_NEAR(traj.x0(), xstar, 1e-9);
        EXPECT_NEAR(traj.x0(), psi(traj.x1()), 1e-9);
        EXPECT_NEAR(traj(0.6), det_flow(difference(f, F), 0.0, 0.6, xstar), 1e-9);
    }
}

TEST(Skorohod, ZeroJumpCoefficientIgnoresJumps) {
    Rng rng(81, 0);
    const auto f = testkit::random_smooth_field(rng, -0.5, 0.5, 0.3);
    const auto psi = BoundaryMap::clamped(-0.8, 0.2, -1.0, 1.0);
    const auto base = solve_skorohod_bvp(f, CoefficientField::zero(), psi, JumpPath{});
    for (std::size_t n = 1; n <= 4; ++n) {
        const auto traj = solve_skorohod_bvp(f, CoefficientField::zero(), psi, path_with(rng, n));
        EXPECT_LT(max_gap(traj, solve_forward_bvp(f, CoefficientField::zero(), psi, traj.path())), 1e-12);
        EXPECT_NEAR(traj.x0(), base.x0(), 1e-12);
    }
}

TEST(Skorohod, StateFreeJumpsConvertToForward) {
    Rng rng(82, 0);
    double worst = 0.0;
    for (int i = 0; i < 50; ++i) {
        auto lc = testkit::random_linear(rng, 1.0, 0.0, 0.0);
        const auto f = lc.drift();
        const auto F = lc.jump();
        const auto psi = random_bounded_psi(rng, *f.lipschitz + *F.lipschitz);
        const auto omega = path_with(rng, static_cast<std::size_t>(rng.uniform() * 7.0));
        const auto sk = solve_skorohod_bvp(f, F, psi, omega);
        const auto fw = solve_forward_bvp(difference(f, F), F, psi, omega);
        worst = std::max(worst, max_gap(sk, fw));
    }
    EXPECT_LT(worst, 1e-8);
}

TEST(Skorohod, ConstantBoundaryConvertsToForward) {
    Rng rng(83, 0);
    double worst = 0.0;
    for (int i = 0; i < 20; ++i) {
        const auto f = testkit::random_smooth_field(rng, -0.5, 0.5, 0.3);
        const auto F = testkit::random_smooth_field(rng, -0.3, 0.3, 0.2);
        const auto psi = BoundaryMap::constant(rng.uniform(-1.0, 1.0));
        const auto omega = path_with(rng, static_cast<std::size_t>(rng.uniform() * 7.0));
        worst = std::max(worst, max_gap(solve_skorohod_bvp(f, F, psi, omega),
                                        solve_forward_bvp(difference(f, F), F, psi, omega)));
    }
    EXPECT_LT(worst, 1e-8);
}

TEST(Skorohod, StateDependentJumpsDifferFromForward) {
    const auto f = CoefficientField::affine(0.3, 0.2);
    const auto F = CoefficientField::affine(0.1, 0.5);
    const auto psi = BoundaryMap::tanh(0.0, 1.0, 1.0);
    const JumpPath omega{0.3, 0.7};
    EXPECT_GT(max_gap(solve_skorohod_bvp(f, F, psi, omega), solve_forward_bvp(difference(f, F), F, psi, omega)),
              1e-4);
}

TEST(LinearSkorohod, SubsetFormulaMatchesRecursion) {
    Rng rng(84, 0);
    double worst = 0.0;
    for (int i = 0; i < 30; ++i) {
        const auto lc = testkit::random_linear(rng, 0.8, -0.8, 0.8);
        const auto f = lc.drift();
        const auto F = lc.jump();
        const auto psi = random_bounded_psi(rng, *f.lipschitz + *F.lipschitz);
        for (std::size_t n = 0; n <= 4; ++n) {
            const auto omega = path_with(rng, n);
            worst = std::max(worst, max_gap(solve_linear_skorohod(lc, psi, omega), solve_skorohod_bvp(f, F, psi, omega)));
        }
    }
    EXPECT_LT(worst, 1e-8);
}

TEST(LinearSkorohod, SingleJumpByHand) {
    // f = 0, F = c x, psi = b constant: Z_0 = b everywhere, Y = 0, X_t = b (1 + c 1{t >= s}) e^{-ct}.
    const double c = 0.4, b = 0.7, s = 0.35;
    const auto lc = LinearCoefficients::constant(0.0, 0.0, 0.0, c);
    const auto traj = solve_linear_skorohod(lc, BoundaryMap::constant(b), JumpPath{s});
    EXPECT_NEAR(traj(0.2), b * std::exp(-c * 0.2), 1e-12);
    EXPECT_NEAR(traj(0.8), b * (1.0 + c) * std::exp(-c * 0.8), 1e-12);
    Rng rng(1, 0);
    EXPECT_THROW(solve_linear_skorohod(lc, BoundaryMap::constant(b), path_with(rng, 13)), CapabilityError);
}

TEST(SkorohodLevels, LipschitzSandwich) {
    Rng rng(85, 0);
    for (int i = 0; i < 10; ++i) {
        const auto f = testkit::random_smooth_field(rng, -0.8, 0.8, 0.4);
        const auto F = testkit::random_smooth_field(rng, -0.5, 0.5, 0.3);
        const auto drift = difference(f, F);
        const double K = *f.lipschitz + *F.lipschitz;
        for (std::size_t n = 0; n <= 3; ++n) {
            const auto omega = path_with(rng, n);
            std::vector<double> injections(n);
            for (auto& v : injections) v = rng.uniform(-1.0, 1.0);
            for (int k = 0; k < 10; ++k) {
                double x1 = rng.uniform(-3.0, 3.0), x2 = rng.uniform(-3.0, 3.0);
                if (x1 > x2) std::swap(x1, x2);
                for (double t : {0.25, 0.5, 1.0}) {
                    const double gap = skorohod_level_flow(drift, omega, injections, x2, t) -
                                       skorohod_level_flow(drift, omega, injections, x1, t);
                    EXPECT_GE(gap, (x2 - x1) * std::exp(-K * t) * (1.0 - 1e-12));
                    EXPECT_LE(gap, (x2 - x1) * std::exp(K * t) * (1.0 + 1e-12));
                }
            }
        }
    }
}

TEST(SkorohodLevels, RecursionIsLocal) {
    Rng rng(86, 0);
    const auto f = testkit::random_smooth_field(rng, -0.5, 0.5, 0.3);
    const auto F = testkit::random_smooth_field(rng, -0.3, 0.3, 0.2);
    const auto drift = difference(f, F);
    const auto psi1 = BoundaryMap::tanh(0.2, 1.0, 1.0);
    const auto psi2 = BoundaryMap::clamped(-0.5, 0.3, -1.0, 1.0);
    const JumpPath omega{0.2, 0.45, 0.8};

    SkorohodMemo memo1;
    const auto full1 = solve_skorohod_bvp(f, F, psi1, omega, {}, memo1);
    EXPECT_EQ(memo1.size(), 8u);
    std::vector<double> inj1(3);
    for (std::size_t j = 0; j < 3; ++j) inj1[j] = F(omega[j], memo1.find(omega.without(j))->operator()(omega[j]));
    EXPECT_LT(max_gap(full1, solve_skorohod_level(drift, psi1, omega, inj1)), 1e-14);

    // psi2 on top of psi1's lower levels: same flow, different fixed point.
    const auto mixed = solve_skorohod_level(drift, psi2, omega, inj1);
    EXPECT_NEAR(mixed.x0(), psi2(mixed.x1()), 1e-9);
    EXPECT_NEAR(mixed.x1(), skorohod_level_flow(drift, omega, inj1, mixed.x0(), 1.0), 1e-12);

    // The full psi2 solution changes the lower levels, hence the injections.
    const auto full2 = solve_skorohod_bvp(f, F, psi2, omega);
    EXPECT_GT(std::abs(full2.x0() - mixed.x0()), 1e-6);
    SkorohodMemo memo2;
    solve_skorohod_bvp(f, F, psi2, omega, {}, memo2);
    std::vector<double> inj2(3);
    for (std::size_t j = 0; j < 3; ++j) inj2[j] = F(omega[j], memo2.find(omega.without(j))->operator()(omega[j]));
    EXPECT_LT(max_gap(full2, solve_skorohod_level(drift, psi2, omega, inj2)), 1e-14);
}

TEST(Skorohod, Errors) {
    const auto f = CoefficientField::affine(0.3, 0.2);
    const auto F = CoefficientField::affine(0.1, 0.5);
    EXPECT_THROW(solve_skorohod_bvp(f, F, BoundaryMap::affine(-1.0, 0.0), JumpPath{0.5}), PreconditionError);
    EXPECT_THROW(solve_skorohod_bvp(f, F, BoundaryMap::tanh(0.0, -1.0, 1.0), JumpPath{0.5}), PreconditionError);
    Rng rng(87, 0);
    EXPECT_THROW(solve_skorohod_bvp(f, F, BoundaryMap::tanh(0.0, 1.0, 1.0), path_with(rng, 9)), ArgumentError);
    SkorohodOptions opt;
    opt.max_level = 10;
    EXPECT_NO_THROW(solve_skorohod_bvp(f, F, BoundaryMap::tanh(0.0, 1.0, 1.0), path_with(rng, 9), opt));
    auto bare = F;
    bare.lipschitz.reset();
    EXPECT_THROW(solve_skorohod_bvp(f, bare, BoundaryMap::constant(0.0), JumpPath{}), CapabilityError);
}

TEST(Skorohod, MemoIsReusedAcrossPaths) {
    const auto f = CoefficientField::affine(0.3, 0.2);
    const auto F = CoefficientField::affine(0.1, 0.5);
    const auto psi = BoundaryMap::tanh(0.0, 1.0, 1.0);
    SkorohodMemo memo;
    const auto a = solve_skorohod_bvp(f, F, psi, JumpPath{0.2, 0.6}, {}, memo);
    EXPECT_EQ(memo.size(), 4u);
    const auto b = solve_skorohod_bvp(f, F, psi, JumpPath{0.2, 0.6, 0.9}, {}, memo);
    EXPECT_EQ(memo.size(), 8u);
    EXPECT_LT(max_gap(a, solve_skorohod_bvp(f, F, psi, JumpPath{0.2, 0.6})), 1e-15);
    EXPECT_LT(max_gap(b, solve_skorohod_bvp(f, F, psi, JumpPath{0.2, 0.6, 0.9})), 1e-15);
}
