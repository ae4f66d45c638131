#include "pbvp/chaos.hpp"
#include "pbvp/linear.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace pbvp;

namespace {

double count_jumps(const JumpPath& omega) { return static_cast<double>(omega.size()); }

JumpPath random_omega(Rng& rng, std::size_t max_jumps) { return testkit::random_path(rng, max_jumps, 0.01); }

} // namespace

TEST(PhiOperator, ConstantProcessGivesCompensatedCount) {
    const CanonicalProcess one = [](double, const JumpPath&) { return 1.0; };
    EXPECT_NEAR(phi_operator(one, JumpPath{}), -1.0, 1e-14);
    EXPECT_NEAR(phi_operator(one, JumpPath{0.4}), 0.0, 1e-14);
    EXPECT_NEAR(phi_operator(one, JumpPath{0.1, 0.5, 0.9}), 2.0, 1e-14);
}

TEST(PhiOperator, TimeProcess) {
    const CanonicalProcess time = [](double t, const JumpPath&) { return t; };
    EXPECT_NEAR(phi_operator(time, JumpPath{0.3, 0.7}), 0.5, 1e-14);
    EXPECT_NEAR(phi_operator(time, JumpPath{}), -0.5, 1e-14);
}

TEST(PhiOperator, UsesPathWithoutTheJump) {
    const CanonicalProcess count = [](double, const JumpPath& w) { return count_jumps(w); };
    // sum_j (n - 1) - n
    EXPECT_NEAR(phi_operator(count, JumpPath{0.2, 0.6, 0.8}), 3.0 * 2.0 - 3.0, 1e-13);
}

TEST(PsiOperator, Examples) {
    const CanonicalFunctional constant = [](const JumpPath&) { return 2.5; };
    const CanonicalFunctional count = [](const JumpPath& w) { return count_jumps(w); };
    const CanonicalFunctional empty = [](const JumpPath& w) { return w.empty() ? 1.0 : 0.0; };
    Rng rng(70, 0);
    for (int i = 0; i < 20; ++i) {
        const auto omega = random_omega(rng, 4);
        double t = rng.uniform();
        while (omega.contains(t)) t = rng.uniform();
        EXPECT_EQ(psi_operator(constant, t, omega), 0.0);
        EXPECT_EQ(psi_operator(count, t, omega), 1.0);
        EXPECT_EQ(psi_operator(empty, t, omega), omega.empty() ? -1.0 : 0.0);
    }
    EXPECT_THROW(psi_operator(count, 0.5, JumpPath{0.5}), ArgumentError);
}

TEST(Charlier, SmallOrdersByHand) {
    EXPECT_EQ(multiple_integral(ChaosKernel::constant_one(), 0, JumpPath{0.3}), 1.0);
    // I_1(1) = N - 1, I_2(1) = N(N-1) - 2N + 1
    for (std::size_t N = 0; N < 5; ++N) {
        std::vector<double> times;
        for (std::size_t k = 0; k < N; ++k) times.push_back(0.1 + 0.2 * static_cast<double>(k));
        const JumpPath omega(times);
        const double n = static_cast<double>(N);
        EXPECT_NEAR(multiple_integral(ChaosKernel::constant_one(), 1, omega), n - 1.0, 1e-14);
        EXPECT_NEAR(multiple_integral(ChaosKernel::constant_one(), 2, omega), n * (n - 1.0) - 2.0 * n + 1.0, 1e-13);
        // indicator [0, s]: I_1 = N_s - s
        EXPECT_NEAR(multiple_integral(ChaosKernel::indicator(0.45), 1, omega),
                    static_cast<double>(omega.count(0.45)) - 0.45, 1e-14);
    }
}

TEST(Charlier, FunctionKernelOrderOne) {
    const auto k = ChaosKernel::function([](double r) { return r < 0.5 ? 2.0 : -1.0; }, {0.5});
    EXPECT_NEAR(multiple_integral(k, 1, JumpPath{0.2, 0.7}), 2.0 - 1.0 - 0.5, 1e-14);
    EXPECT_THROW(multiple_integral(k, 2, JumpPath{0.2}), CapabilityError);
    EXPECT_THROW(multiple_integral(k, 0, JumpPath{0.2}), CapabilityError);
}

TEST(Chaos, NoJumpIndicatorIdentity) {
    const auto series = no_jump_series(1.0, 1.0, 30);
    Rng rng(71, 0);
    EXPECT_NEAR(eval_chaos(series, JumpPath{}), 1.0, 1e-9);
    for (int i = 0; i < 300; ++i) {
        const auto omega = random_omega(rng, 8);
        EXPECT_NEAR(eval_chaos(series, omega), omega.empty() ? 1.0 : 0.0, 1e-9) << omega.size();
    }
}

TEST(Chaos, TruncationWithinReportedTail) {
    Rng rng(72, 0);
    const auto full = no_jump_series(1.0, 1.0, 30, 5);
    const auto mid = no_jump_series(1.0, 1.0, 20, 5);
    const auto low = no_jump_series(1.0, 1.0, 10, 5);
    EXPECT_LT(full.tail_bound, 1e-12);
    for (int i = 0; i < 200; ++i) {
        const auto omega = random_omega(rng, 5);
        const double exact = eval_chaos(full, omega);
        EXPECT_LT(std::abs(eval_chaos(mid, omega) - exact), 1e-12);
        EXPECT_LE(std::abs(eval_chaos(low, omega) - exact), low.tail_bound);
    }
}

TEST(Chaos, IndicatorSeriesAtIntermediateTime) {
    Rng rng(73, 0);
    for (double s : {0.2, 0.5, 0.85}) {
        const auto series = no_jump_series(1.5, s, 30);
        for (int i = 0; i < 100; ++i) {
            const auto omega = random_omega(rng, 8);
            EXPECT_NEAR(eval_chaos(series, omega), omega.count(s) == 0 ? 1.5 : 0.0, 1e-9);
        }
    }
}

namespace {

struct Case5 {
    LinearCoefficients lc;
    BoundaryMap psi;
    double xstar = 0.0;
};

Case5 random_case5(Rng& rng) {
    Case5 c;
    c.lc.f2 = testkit::random_time_function(rng, 1.0);
    c.lc.F2 = TimeFunction::constant(-1.0);
    c.psi = rng.uniform() < 0.5 ? BoundaryMap::affine(rng.uniform(-2.0, -0.1), rng.uniform(-1.0, 1.0))
                                : BoundaryMap::tanh(rng.uniform(-1.0, 1.0), rng.uniform(0.2, 1.5), 1.0);
    c.xstar = solve_linear_bvp(c.lc, c.psi, JumpPath{}).x0();
    return c;
}

} // namespace

TEST(Case5Chaos, StartMatchesClosedForm) {
    Rng rng(74, 0);
    for (int i = 0; i < 20; ++i) {
        const auto c = random_case5(rng);
        const double psi0 = c.psi(0.0);
        const auto series = build_case5_chaos(c.lc.f2, psi0, c.xstar, 0.0);
        for (int k = 0; k < 20; ++k) {
            const auto omega = random_omega(rng, 8);
            const double expect = psi0 + (omega.empty() ? c.xstar - psi0 : 0.0);
            EXPECT_NEAR(eval_chaos(series, omega), expect, 1e-9);
            EXPECT_NEAR(eval_chaos(series, omega), solve_linear_bvp(c.lc, c.psi, omega).x0(), 1e-8);
        }
    }
}

TEST(Case5Chaos, EndIsAtomOnEmptyPath) {
    Rng rng(75, 0);
    const auto c = random_case5(rng);
    const double A1 = GrowthFactor(c.lc.f2, 1e-3)(1.0);
    const auto series = build_case5_chaos(c.lc.f2, c.psi(0.0), c.xstar, 1.0);
    EXPECT_NEAR(eval_chaos(series, JumpPath{}), A1 * c.xstar, 1e-9);
    EXPECT_NEAR(eval_chaos(series, JumpPath{0.3}), 0.0, 1e-9);
    EXPECT_NEAR(eval_chaos(series, JumpPath{0.1, 0.95}), 0.0, 1e-9);
}

TEST(Case5Chaos, MatchesPathwiseSolution) {
    Rng rng(76, 0);
    double worst = 0.0;
    for (int i = 0; i < 10; ++i) {
        const auto c = random_case5(rng);
        const double t = rng.uniform(0.05, 0.95);
        const auto series = build_case5_chaos(c.lc.f2, c.psi(0.0), c.xstar, t);
        EXPECT_LT(series.tail_bound, 1e-8);
        for (int k = 0; k < 100; ++k) {
            const auto omega = random_omega(rng, 8);
            if (omega.contains(t)) continue;
            const double pathwise = solve_linear_bvp(c.lc, c.psi, omega)(t);
            worst = std::max(worst, std::abs(eval_chaos(series, omega) - pathwise));
        }
    }
    EXPECT_LT(worst, 1e-8);
}

TEST(FirstOrderChaos, MatchesConvertedForwardSolution) {
    Rng rng(77, 0);
    double worst = 0.0;
    for (int i = 0; i < 10; ++i) {
        const auto f1 = testkit::random_time_function(rng, 1.0);
        const auto f2 = testkit::random_time_function(rng, 1.0);
        const auto F1 = testkit::random_time_function(rng, 1.0);
        const double a = rng.uniform(-2.0, 0.0), b = rng.uniform(-1.0, 1.0);
        LinearCoefficients converted;
        converted.f1 = TimeFunction{[f1, F1](double r) { return f1(r) - F1(r); }, nullptr, std::nullopt};
        converted.f2 = f2;
        converted.F1 = F1;
        for (double t : {0.0, 0.37, 1.0}) {
            const auto series = build_first_order_chaos(f1, f2, F1, a, b, t);
            for (int k = 0; k < 100; ++k) {
                const auto omega = random_omega(rng, 6);
                if (omega.contains(t)) continue;
                const double forward = solve_linear_bvp(converted, BoundaryMap::affine(a, b), omega)(t);
                worst = std::max(worst, std::abs(eval_chaos(series, omega) - forward));
            }
        }
    }
    EXPECT_LT(worst, 1e-8);
}

TEST(FirstOrderChaos, RejectsResonantSlope) {
    EXPECT_THROW(build_first_order_chaos(TimeFunction::constant(0.0), TimeFunction::constant(0.0),
                                         TimeFunction::constant(1.0), 1.0, 0.0, 0.5),
                 PreconditionError);
}

TEST(Duality, IndicatorFamilyRaisesOrder) {
    Rng rng(78, 0);
    for (std::size_t n = 0; n <= 4; ++n) {
        for (int i = 0; i < 100; ++i) {
            const double s = rng.uniform(0.1, 1.0);
            const auto kernel = ChaosKernel::indicator(s);
            const CanonicalProcess u = [&](double t, const JumpPath& w) {
                return t <= s ? multiple_integral(kernel, n, w) : 0.0;
            };
            const auto omega = random_omega(rng, 6);
            const double phi = phi_operator(u, omega, 1e-3, {s});
            ChaosSeries shifted;
            shifted.terms.push_back({n + 1, 1.0, kernel});
            EXPECT_NEAR(phi, eval_chaos(shifted, omega), 1e-9 * std::max(1.0, std::abs(phi)))
                << "n=" << n << " s=" << s;
        }
    }
}

TEST(Duality, DeterministicProcessIsFirstOrder) {
    Rng rng(79, 0);
    const auto g = [](double t) { return std::sin(3.0 * t) + t * t; };
    const CanonicalProcess u = [&](double t, const JumpPath&) { return g(t); };
    ChaosSeries series;
    series.terms.push_back({1, 1.0, ChaosKernel::function(g)});
    for (int i = 0; i < 100; ++i) {
        const auto omega = random_omega(rng, 6);
        EXPECT_NEAR(phi_operator(u, omega), eval_chaos(series, omega), 1e-9);
    }
}
