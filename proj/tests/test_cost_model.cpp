#include "drolab/drolab.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace drolab;

namespace {

GroupedDataset random_classification(std::uint64_t seed, std::size_t k = 2, std::size_t n = 30, std::size_t dim = 3) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<std::vector<Example>> groups(k);
    for (auto& g : groups)
        for (std::size_t i = 0; i < n; ++i) {
            Vec x(dim);
            for (double& v : x) v = normal(rng);
            g.push_back({x, normal(rng) > 0 ? 1.0 : -1.0});
        }
    return GroupedDataset(TaskKind::classification, std::move(groups));
}

GroupedDataset random_regression(std::uint64_t seed, std::size_t k = 2, std::size_t n = 30, std::size_t dim = 3) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<std::vector<Example>> groups(k);
    for (auto& g : groups)
        for (std::size_t i = 0; i < n; ++i) {
            Vec x(dim);
            for (double& v : x) v = normal(rng);
            g.push_back({x, 2.0 * normal(rng)});
        }
    return GroupedDataset(TaskKind::regression, std::move(groups));
}

Vec random_vec(std::mt19937_64& rng, std::size_t d, double scale = 1.0) {
    std::normal_distribution<double> normal(0.0, scale);
    Vec w(d);
    for (double& v : w) v = normal(rng);
    return w;
}

double rel_err(const Vec& a, const Vec& b) {
    double num = 0, den = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        num += (a[i] - b[i]) * (a[i] - b[i]);
        den += b[i] * b[i];
    }
    return std::sqrt(num) / std::max(1e-8, std::sqrt(den));
}

}  // namespace

TEST(CostModel, CounterexampleValueAtZero) {
    const auto f = make_counterexample_family();
    const Vec w{0.0};
    EXPECT_NEAR(group_cost(f, 0, w), oracle::kTanh1, 1e-15);
    EXPECT_NEAR(group_cost(f, 1, w), oracle::kTanh1, 1e-15);
}

TEST(CostModel, CounterexampleGradientAtZero) {
    const auto f = make_counterexample_family();
    const Vec w{0.0};
    EXPECT_NEAR(group_grad(f, 0, w)[0], oracle::kSech2_1, 1e-15);
    EXPECT_NEAR(group_grad(f, 1, w)[0], -oracle::kSech2_1, 1e-15);
}

TEST(CostModel, CounterexampleMatchesLongDoubleReference) {
    const auto f = make_counterexample_family(0.05);
    for (double w : {-2.7, -1.0, -0.3, 0.0, 0.4, 1.18, 2.5}) {
        const Vec x{w};
        EXPECT_NEAR(f.cost(0, x), static_cast<double>(oracle::cx_cost(+1, w)), 1e-14);
        EXPECT_NEAR(f.cost(1, x), static_cast<double>(oracle::cx_cost(-1, w)), 1e-14);
        EXPECT_NEAR(f.grad(0, x)[0], static_cast<double>(oracle::cx_grad(+1, w)), 1e-14);
        EXPECT_NEAR(f.grad(1, x)[0], static_cast<double>(oracle::cx_grad(-1, w)), 1e-14);
    }
}

TEST(CostModel, CounterexampleSymmetry) {
    const auto f = make_counterexample_family();
    for (double w : {-2.0, -1.0, 0.5, 3.0, 0.123}) {
        const Vec p{w}, m{-w};
        EXPECT_DOUBLE_EQ(group_cost(f, 0, p), group_cost(f, 1, m));
        EXPECT_DOUBLE_EQ(group_grad(f, 0, p)[0], -group_grad(f, 1, m)[0]);
    }
}

TEST(CostModel, CounterexampleMaxMinimizedAtZero) {
    const auto f = make_counterexample_family(0.05);
    double best = std::numeric_limits<double>::infinity(), arg = 0;
    for (int i = -3000; i <= 3000; ++i) {
        const Vec w{i * 1e-3};
        const double m = std::max(f.cost(0, w), f.cost(1, w));
        if (m < best) best = m, arg = w[0];
    }
    EXPECT_EQ(arg, 0.0);
}

TEST(CostModel, CounterexampleRejectsNonPositiveEpsilon) {
    EXPECT_THROW(make_counterexample_family(0.0), ContractViolation);
    EXPECT_THROW(make_counterexample_family(-0.1), ContractViolation);
}

TEST(CostModel, CounterexampleHalfMixtureCurvature) {
    const long double c = 0.5L * (oracle::cx_curv(+1, 0) + oracle::cx_curv(-1, 0));
    EXPECT_NEAR(static_cast<double>(c), oracle::kHalfMixCurvatureAt0, 1e-14);
    const auto f = make_counterexample_family();
    const auto h = mixture_curvature(f, SimplexWeights::uniform(2), Vec{0.0});
    ASSERT_EQ(h.size(), 1u);
    EXPECT_NEAR(h[0], oracle::kHalfMixCurvatureAt0, 1e-6);
}

TEST(CostModel, MixtureOneHotEqualsGroup) {
    const auto f = make_counterexample_family();
    const Vec w{0.37};
    for (std::size_t k = 0; k < 2; ++k) {
        const auto [c, g] = mixture_cost_grad(f, SimplexWeights::one_hot(2, k), w);
        EXPECT_EQ(c, group_cost(f, k, w));
        EXPECT_EQ(g, group_grad(f, k, w));
    }
}

TEST(CostModel, MixtureHalfGradientVanishesAtZero) {
    const auto f = make_counterexample_family();
    const auto [c, g] = mixture_cost_grad(f, SimplexWeights::uniform(2), Vec{0.0});
    EXPECT_NEAR(g[0], 0.0, 1e-12);
    EXPECT_NEAR(c, oracle::kTanh1, 1e-15);
}

TEST(CostModel, MixtureQuarterGradientAtZero) {
    const auto f = make_counterexample_family();
    const auto [c, g] = mixture_cost_grad(f, SimplexWeights(Vec{0.25, 0.75}), Vec{0.0});
    EXPECT_NEAR(g[0], (0.25 - 0.75) * oracle::kSech2_1, 1e-12);
    EXPECT_NEAR(g[0], -0.2099871708, 1e-10);
}

TEST(CostModel, MixtureRejectsOffSimplexWeights) {
    EXPECT_THROW(SimplexWeights(Vec{0.5, 0.6}), ContractViolation);
    EXPECT_THROW(SimplexWeights(Vec{-0.1, 1.1}), ContractViolation);
    const auto f = make_counterexample_family();
    EXPECT_THROW(mixture_cost_grad(f, SimplexWeights::uniform(3), Vec{0.0}), ContractViolation);
}

TEST(CostModel, MixtureIsLinearInLambda) {
    const auto f = make_dataset_family(random_classification(3, 3), LossKind::logistic, 0.0);
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 100; ++trial) {
        const SimplexWeights lam(oracle::random_simplex(rng, 3));
        const Vec w = random_vec(rng, f.dim());
        const auto [c, g] = mixture_cost_grad(f, lam, w);
        double ce = 0;
        Vec ge(f.dim(), 0.0);
        for (std::size_t k = 0; k < 3; ++k) {
            ce += lam[k] * group_cost(f, k, w);
            const Vec gk = group_grad(f, k, w);
            for (std::size_t i = 0; i < ge.size(); ++i) ge[i] += lam[k] * gk[i];
        }
        EXPECT_NEAR(c, ce, 1e-12);
        for (std::size_t i = 0; i < ge.size(); ++i) EXPECT_NEAR(g[i], ge[i], 1e-12);
    }
}

TEST(CostModel, GroupIndexAndDimensionChecked) {
    const auto f = make_counterexample_family();
    EXPECT_THROW(group_cost(f, 2, Vec{0.0}), ContractViolation);
    EXPECT_THROW(group_cost(f, 0, Vec{0.0, 1.0}), ContractViolation);
    EXPECT_THROW(group_grad(f, 5, Vec{0.0}), ContractViolation);
}

TEST(CostModel, SquaredLossZeroResidual) {
    GroupedDataset d(TaskKind::regression, {{{{0.0, 0.0}, 0.0}}});
    const auto f = make_dataset_family(d, LossKind::squared, 0.0);
    EXPECT_EQ(group_cost(f, 0, Vec{1.5, -2.0, 0.0}), 0.0);
}

TEST(CostModel, LogisticAtZeroIsLn2) {
    GroupedDataset d(TaskKind::classification, {{{{0.7, -1.2}, 1.0}}});
    const auto f = make_dataset_family(d, LossKind::logistic, 0.0);
    EXPECT_NEAR(group_cost(f, 0, Vec{0.0, 0.0, 0.0}), oracle::kLn2, 1e-15);
}

TEST(CostModel, LogisticMatchesLongDoubleReference) {
    const auto data = random_classification(5, 2, 40, 3);
    const auto f = make_dataset_family(data, LossKind::logistic, 0.0);
    std::mt19937_64 rng(2);
    for (int trial = 0; trial < 10; ++trial) {
        const Vec w = random_vec(rng, 4, 3.0);
        for (std::size_t k = 0; k < 2; ++k) {
            long double s = 0;
            for (const auto& ex : data.group(k)) {
                long double m = w[3];
                for (std::size_t i = 0; i < 3; ++i) m += (long double)w[i] * ex.features[i];
                s += oracle::logistic(ex.label * m);
            }
            EXPECT_NEAR(f.cost(k, w), static_cast<double>(s / data.group(k).size()), 1e-13);
        }
    }
}

TEST(CostModel, LogisticIsStableForLargeMargins) {
    GroupedDataset d(TaskKind::classification, {{{{1.0}, 1.0}, {{-1.0}, 1.0}}});
    const auto f = make_dataset_family(d, LossKind::logistic, 0.0);
    const Vec w{800.0, 0.0};
    const double c = f.cost(0, w);
    EXPECT_TRUE(std::isfinite(c));
    EXPECT_NEAR(c, 400.0, 1e-9);
    EXPECT_TRUE(all_finite(f.grad(0, w)));
}

TEST(CostModel, HingeAtZeroIsOne) {
    const auto f = make_dataset_family(random_classification(9, 3), LossKind::hinge, 0.37);
    const Vec w(f.dim(), 0.0);
    for (std::size_t k = 0; k < 3; ++k) EXPECT_EQ(group_cost(f, k, w), 1.0);
}

TEST(CostModel, HingeSubgradientZeroAtKink) {
    // margin y f = 1 exactly: the hinge term contributes nothing.
    GroupedDataset d(TaskKind::classification, {{{{1.0}, 1.0}}});
    const auto f = make_dataset_family(d, LossKind::hinge, 0.0);
    const Vec w{0.5, 0.5};
    EXPECT_EQ(f.cost(0, w), 0.0);
    EXPECT_EQ(f.grad(0, w), (Vec{0.0, 0.0}));
}

TEST(CostModel, RegularizerAddsHalfMuNormSquared) {
    const auto data = random_classification(4);
    const auto f0 = make_dataset_family(data, LossKind::hinge, 0.0);
    const auto f1 = make_dataset_family(data, LossKind::hinge, 0.2);
    const Vec w{0.3, -0.1, 0.2, 0.5};
    EXPECT_NEAR(f1.cost(0, w) - f0.cost(0, w), 0.1 * dot(w, w), 1e-15);
    const Vec g0 = f0.grad(0, w), g1 = f1.grad(0, w);
    for (std::size_t i = 0; i < w.size(); ++i) EXPECT_NEAR(g1[i] - g0[i], 0.2 * w[i], 1e-15);
}

TEST(CostModel, LossTaskCompatibility) {
    EXPECT_THROW(make_dataset_family(random_regression(1), LossKind::logistic, 0.0), ContractViolation);
    EXPECT_THROW(make_dataset_family(random_regression(1), LossKind::hinge, 0.1), ContractViolation);
    EXPECT_NO_THROW(make_dataset_family(random_classification(1), LossKind::squared, 0.0));
    EXPECT_THROW(make_dataset_family(random_classification(1), LossKind::hinge, -1.0), ContractViolation);
}

TEST(CostModel, GradientMatchesFiniteDifferencesAllLosses) {
    std::mt19937_64 rng(21);
    const std::pair<LossKind, GroupedDataset> cases[] = {
        {LossKind::squared, random_regression(31)},
        {LossKind::logistic, random_classification(32)},
        {LossKind::hinge, random_classification(33)},
    };
    for (const auto& [loss, data] : cases) {
        const auto f = make_dataset_family(data, loss, loss == LossKind::hinge ? 1e-2 : 0.0);
        for (int trial = 0; trial < 10; ++trial) {
            const Vec w = random_vec(rng, f.dim());
            for (std::size_t k = 0; k < f.groups(); ++k)
                EXPECT_LE(rel_err(f.grad(k, w), fd_gradient_oracle(f, k, w)), 1e-5) << to_string(loss);
        }
    }
}

TEST(CostModel, EvaluationIsBitDeterministic) {
    const auto f = make_dataset_family(random_classification(8), LossKind::logistic, 0.0);
    const Vec w{0.1, 0.2, -0.3, 0.4};
    const auto a = f.cost_grad(1, w);
    for (int i = 0; i < 5; ++i) EXPECT_EQ(f.cost_grad(1, w), a);
}

TEST(CostModel, ConvexFamiliesSatisfyMidpointInequality) {
    std::mt19937_64 rng(5);
    for (LossKind loss : {LossKind::logistic, LossKind::squared}) {
        const auto data = loss == LossKind::squared ? random_regression(41) : random_classification(42);
        const auto f = make_dataset_family(data, loss, 0.0);
        for (int trial = 0; trial < 100; ++trial) {
            const SimplexWeights lam(oracle::random_simplex(rng, f.groups()));
            const Vec a = random_vec(rng, f.dim(), 2.0), b = random_vec(rng, f.dim(), 2.0);
            Vec m(a.size());
            for (std::size_t i = 0; i < m.size(); ++i) m[i] = 0.5 * (a[i] + b[i]);
            const double lhs = mixture_cost(f, lam, m);
            const double rhs = 0.5 * (mixture_cost(f, lam, a) + mixture_cost(f, lam, b));
            EXPECT_LE(lhs, rhs + 1e-12 * std::max(1.0, std::abs(rhs)));
        }
    }
}

TEST(CostModel, AccuracyCountsSignAgreement) {
    GroupedDataset d(TaskKind::classification, {{{{1.0}, 1.0}, {{-1.0}, -1.0}, {{2.0}, -1.0}, {{0.0}, 1.0}}});
    EXPECT_DOUBLE_EQ(group_accuracy(d, 0, Vec{1.0, 0.0}), 0.75);
}

TEST(Dataset, CsvRoundTripIsExact) {
    const auto data = random_classification(12, 3, 7, 2);
    std::stringstream ss;
    write_csv(ss, data);
    const auto back = read_csv(ss);
    ASSERT_EQ(back.groups(), 3u);
    EXPECT_EQ(back.task(), TaskKind::classification);
    for (std::size_t k = 0; k < 3; ++k)
        for (std::size_t i = 0; i < data.group(k).size(); ++i) {
            EXPECT_EQ(back.group(k)[i].features, data.group(k)[i].features);
            EXPECT_EQ(back.group(k)[i].label, data.group(k)[i].label);
        }
}

TEST(Dataset, CsvHeaderAndInference) {
    std::stringstream ss("group,label,f1\n0,1.5,0.2\n1,-2,0.1\n");
    const auto d = read_csv(ss);
    EXPECT_EQ(d.task(), TaskKind::regression);
    EXPECT_EQ(d.groups(), 2u);
    std::stringstream bad("g,label,f1\n0,1,0\n");
    EXPECT_THROW(read_csv(bad), ContractViolation);
    std::stringstream gap("group,label,f1\n0,1,0\n2,1,0\n");
    EXPECT_THROW(read_csv(gap), ContractViolation);
    std::stringstream junk("group,label,f1\n0,1,abc\n");
    EXPECT_THROW(read_csv(junk), ContractViolation);
}

TEST(Dataset, ValidatesInvariants) {
    EXPECT_THROW(GroupedDataset(TaskKind::classification, {}), ContractViolation);
    EXPECT_THROW(GroupedDataset(TaskKind::classification, {{{{1.0}, 0.5}}}), ContractViolation);
    EXPECT_THROW(GroupedDataset(TaskKind::regression, {{{{1.0}, 0.5}}, {{{1.0, 2.0}, 0.5}}}), ContractViolation);
    EXPECT_THROW(GroupedDataset(TaskKind::regression, {{{{1.0}, 0.5}}, {}}), ContractViolation);
}
