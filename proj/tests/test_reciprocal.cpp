#include "pbvp/reciprocal.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace pbvp;

namespace {

double naive_dcov_sq(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t n = x.size();
    std::vector<std::vector<double>> A(n, std::vector<double>(n)), B = A;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            A[i][j] = std::abs(x[i] - x[j]);
            B[i][j] = std::abs(y[i] - y[j]);
        }
    }
    auto center = [n](std::vector<std::vector<double>>& M) {
        std::vector<double> row(n, 0.0);
        double all = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) row[i] += M[i][j];
            all += row[i];
        }
        const double nn = static_cast<double>(n);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) M[i][j] += all / (nn * nn) - row[i] / nn - row[j] / nn;
        }
    };
    center(A);
    center(B);
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) s += A[i][j] * B[i][j];
    }
    return s / static_cast<double>(n * n);
}

CiOptions quick_options(std::uint64_t seed) {
    CiOptions opt;
    opt.seed = seed;
    opt.alpha = 0.05;
    return opt;
}

} // namespace

TEST(DistanceCovariance, MatchesQuadraticFormula) {
    Rng rng(90, 0);
    for (int rep = 0; rep < 20; ++rep) {
        const std::size_t n = 5 + static_cast<std::size_t>(rng.uniform() * 150.0);
        std::vector<double> x(n), y(n);
        for (std::size_t i = 0; i < n; ++i) {
            x[i] = rng.normal();
            y[i] = x[i] * x[i] + rng.normal();
            // ties in both coordinates
            if (rep % 2) {
                x[i] = std::round(2.0 * x[i]);
                y[i] = std::round(y[i]);
            }
        }
        const double naive = naive_dcov_sq(x, y);
        EXPECT_NEAR(distance_covariance_sq(x, y), naive, 1e-10 * std::max(1.0, naive)) << rep;
    }
}

TEST(DistanceCovariance, CorrelationExtremes) {
    Rng rng(91, 0);
    std::vector<double> x(500), y(500), z(500);
    for (std::size_t i = 0; i < 500; ++i) {
        x[i] = rng.normal();
        y[i] = 3.0 * x[i] - 1.0;
        z[i] = rng.normal();
    }
    EXPECT_NEAR(distance_correlation(x, y), 1.0, 1e-9);
    EXPECT_LT(distance_correlation(x, z), 0.15);
    EXPECT_EQ(distance_correlation(x, std::vector<double>(500, 2.0)), 0.0);
}

TEST(DistanceCovariance, PermutationPValueRange) {
    Rng rng(92, 0);
    std::vector<double> x(300), y(300);
    for (std::size_t i = 0; i < 300; ++i) {
        x[i] = rng.normal();
        y[i] = std::abs(x[i]) + 0.1 * rng.normal();
    }
    Rng perm(1, 0);
    EXPECT_DOUBLE_EQ(dcov_permutation_p(x, y, 999, perm), 1.0 / 1000.0);
    const std::vector<double> flat(300, 1.0);
    EXPECT_DOUBLE_EQ(dcov_permutation_p(x, flat, 99, perm), 1.0);
}

TEST(BenjaminiHochberg, StepUp) {
    const auto r = benjamini_hochberg({0.001, 0.5, 0.03, 0.01}, 0.05);
    EXPECT_EQ(r, (std::vector<bool>{true, false, true, true}));
    EXPECT_EQ(benjamini_hochberg({0.2, 0.3}, 0.05), (std::vector<bool>{false, false}));
    // step-up: a large rank can rescue smaller ones
    EXPECT_EQ(benjamini_hochberg({0.04, 0.045}, 0.05), (std::vector<bool>{true, true}));
}

TEST(ConditioningKeys, AtomsAndQuantiles) {
    std::vector<double> v;
    for (int i = 0; i < 100; ++i) v.push_back(1.0 + 1e-13 * i);  // one atom
    for (int i = 0; i < 400; ++i) v.push_back(2.0 + i * 0.01);   // continuous part
    for (int i = 0; i < 10; ++i) v.push_back(-5.0);              // a small atom
    const auto [keys, atoms] = conditioning_keys(v, 4, 1e-9);
    EXPECT_EQ(atoms, 2u);
    for (int i = 1; i < 100; ++i) EXPECT_EQ(keys[i], keys[0]);
    for (int i = 501; i < 510; ++i) EXPECT_EQ(keys[i], keys[500]);
    EXPECT_NE(keys[0], keys[500]);
    std::map<std::size_t, int> sizes;
    for (std::size_t i = 100; i < 500; ++i) {
        EXPECT_GE(keys[i], atoms);
        ++sizes[keys[i]];
    }
    EXPECT_EQ(sizes.size(), 4u);
    for (const auto& [k, c] : sizes) EXPECT_EQ(c, 100);
}

TEST(CiTest, Preconditions) {
    EXPECT_THROW(ci_permutation_test(synthetic_ci_samples(100, 1), CiTimes{}, CiOptions{}), PreconditionError);
    EXPECT_THROW(ci_permutation_test(synthetic_ci_samples(10000, 1), CiTimes{0.2, 0.5, 0.7, 0.6}, CiOptions{}),
                 ArgumentError);
}

TEST(CiTest, NullCalibration) {
    // Per-cell rejections at alpha = 0.05 over 20 synthetic data sets.
    std::size_t tests = 0, rejections = 0, pooled = 0;
    for (std::uint64_t rep = 0; rep < 20; ++rep) {
        auto opt = quick_options(rep);
        opt.permutations = 200;
        const auto report = ci_permutation_test(synthetic_ci_samples(10000, 1000 + rep), CiTimes{}, opt);
        for (const auto& c : report.cells) {
            ++tests;
            rejections += c.p_value <= opt.alpha;
        }
        pooled += report.reject;
    }
    const double rate = static_cast<double>(rejections) / static_cast<double>(tests);
    EXPECT_GT(rate, 0.02);
    EXPECT_LT(rate, 0.09);
    EXPECT_LE(pooled, 4u);
}

TEST(CiTest, DetectsPlantedDependence) {
    std::size_t rejected = 0;
    for (std::uint64_t rep = 0; rep < 10; ++rep) {
        auto opt = quick_options(rep);
        opt.alpha = 0.01;
        opt.permutations = 200;
        rejected += ci_permutation_test(synthetic_ci_samples(10000, 2000 + rep, 0.3), CiTimes{}, opt).reject;
    }
    EXPECT_GE(rejected, 9u);
}

TEST(CiTest, IdenticalAcrossWorkerCounts) {
    const auto samples = synthetic_ci_samples(10000, 7, 0.05);
    auto opt = quick_options(3);
    opt.permutations = 100;
    const auto one = ci_permutation_test(samples, CiTimes{}, opt);
    opt.workers = 3;
    const auto three = ci_permutation_test(samples, CiTimes{}, opt);
    ASSERT_EQ(one.cells.size(), three.cells.size());
    for (std::size_t c = 0; c < one.cells.size(); ++c) {
        EXPECT_EQ(one.cells[c].p_value, three.cells[c].p_value);
        EXPECT_EQ(one.cells[c].dcor, three.cells[c].dcor);
    }
}

TEST(CiTest, CaseThreeNotRejected) {
    const auto c = reciprocal_case(3);
    const auto samples = sample_ci_data(linear_problem(c.lc, c.psi), CiTimes{}, 10000, 5);
    CiOptions opt;
    opt.seed = 5;
    opt.permutations = 300;
    const auto report = ci_permutation_test(samples, CiTimes{}, opt);
    EXPECT_FALSE(report.reject);
    EXPECT_GT(report.cells.size(), 4u);
}

TEST(ReciprocalCases, PresetsSatisfyTheirClass) {
    for (int id = 1; id <= 5; ++id) {
        const auto c = reciprocal_case(id);
        EXPECT_EQ(c.id, id);
        EXPECT_TRUE(c.psi.nonincreasing);
    }
    EXPECT_TRUE(reciprocal_case(1).psi.is_constant);
    EXPECT_EQ(reciprocal_case(2).psi(0.0), 0.0);
    EXPECT_EQ(reciprocal_case(3).lc.F2(0.4), 0.0);
    EXPECT_GT(reciprocal_case(4).lc.F2(0.4), -1.0);
    EXPECT_EQ(reciprocal_case(5).lc.F2(0.4), -1.0);
    EXPECT_THROW(reciprocal_case(6), ArgumentError);
}

TEST(Representation, CaseThreeHoldsOnRandomInstances) {
    Rng rng(93, 0);
    for (int i = 0; i < 5; ++i) {
        auto lc = testkit::random_linear(rng, 1.5, 0.0, 0.0);
        const auto psi = BoundaryMap::affine(rng.uniform(-2.0, 0.0), rng.uniform(-1.0, 1.0));
        const auto r = representation_check_case3(lc, psi, 200, 10 + i);
        EXPECT_TRUE(r.pass) << r.max_deviation;
        EXPECT_LT(r.max_deviation, 1e-8);
    }
}

TEST(Representation, CaseThreeWithoutForcingIsConstant) {
    const auto lc = LinearCoefficients::constant(0.0, 0.7, 0.0, 0.0);
    const auto r = representation_check_case3(lc, BoundaryMap::affine(-1.0, 0.5), 100, 3);
    EXPECT_TRUE(r.pass);
}

TEST(Representation, CaseThreeNegativeControl) {
    const auto lc = LinearCoefficients::constant(1.0, 0.5, 1.0, 0.4);
    const auto r = representation_check_case3(lc, BoundaryMap::affine(-1.0, 0.0), 200, 4);
    EXPECT_FALSE(r.pass);
    EXPECT_GT(r.failures, 50u);
}

TEST(Representation, CaseFourDoublingExample) {
    // f2 = 0, F2 = 1, psi = 1: X_t = 2^{N_t}
    const auto lc = LinearCoefficients::constant(0.0, 0.0, 0.0, 1.0);
    const auto r = representation_check_case4(lc, BoundaryMap::constant(1.0), 500, 6);
    EXPECT_TRUE(r.pass) << r.max_deviation;
}

TEST(Representation, CaseFourSignAndNegativeControl) {
    const auto c = reciprocal_case(4);
    EXPECT_TRUE(representation_check_case4(c.lc, c.psi, 500, 7).pass);
    EXPECT_TRUE(representation_check_case4(c.lc, BoundaryMap::affine(-1.0, -1.0), 500, 7).pass);
    auto corrupted = c.lc;
    corrupted.F1 = TimeFunction::constant(0.3);
    EXPECT_FALSE(representation_check_case4(corrupted, c.psi, 500, 7).pass);
    EXPECT_THROW(representation_check_case4(c.lc, BoundaryMap::affine(-1.0, 0.0), 10, 7), PreconditionError);
}

TEST(Representation, CaseFiveIsThreeValuedChain) {
    const auto c = reciprocal_case(5);
    const auto r = markov_chain_check_case5(c.lc, c.psi, 2000, 8);
    EXPECT_TRUE(r.pass) << r.max_deviation;
    const auto p = linear_problem(c.lc, c.psi);
    const auto traj = solve_bvp(p, JumpPath{0.4});
    const double A = std::exp(0.5 * 0.3);
    EXPECT_NEAR(traj(0.3), A * c.psi(0.0), 1e-12);
    EXPECT_EQ(traj(0.4), 0.0);
    EXPECT_EQ(traj(1.0), 0.0);
    const double xstar = 1.0 / (1.0 + std::exp(0.5));
    EXPECT_NEAR(solve_bvp(p, JumpPath{}).x0(), xstar, 1e-10);
}

TEST(Representation, DegenerateCases) {
    const auto c1 = reciprocal_case(1);
    EXPECT_TRUE(degenerate_case_check(1, c1.lc, c1.psi, 300, 9).pass);
    const auto c2 = reciprocal_case(2);
    EXPECT_TRUE(degenerate_case_check(2, c2.lc, c2.psi, 300, 9).pass);
    EXPECT_FALSE(degenerate_case_check(2, c1.lc, c1.psi, 300, 9).pass);
    EXPECT_THROW(degenerate_case_check(3, c1.lc, c1.psi, 1, 9), ArgumentError);
}
