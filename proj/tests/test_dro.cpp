#include "drolab/drolab.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace drolab;

namespace {

BaselineOptions hinge_baseline() {
    BaselineOptions o;
    o.mu = 1e-2;
    return o;
}

CostFamily constant_family(Vec values) {
    std::vector<ClosedFormCost> terms;
    for (double v : values)
        terms.push_back({[v](std::span<const double>) { return v; }, [](std::span<const double>) { return Vec{0.0}; }});
    return CostFamily::closed_form(1, std::move(terms), true, "constant");
}

GroupedDataset small_two_pop(std::uint64_t seed) {
    TwoPopulationParams p;
    p.n_majority = 60;
    p.n_minority = 20;
    p.seed = seed;
    return gen_two_population(p);
}

double sum_error(const Vec& v) {
    double s = 0;
    for (double x : v) s += x;
    return std::abs(s - 1.0);
}

}  // namespace

TEST(LagrangianDro, SingleGroupEqualsErm) {
    const auto data = small_two_pop(3);
    const auto f = make_dataset_family(GroupedDataset(data.task(), {data.group(0)}), LossKind::logistic, 0.0);
    DroConfig cfg;
    const Vec w0(f.dim(), 0.0);
    const auto sol = lagrangian_dro(f, CalibrationVector::zeros(1), cfg, w0);
    EXPECT_TRUE(sol.converged);
    EXPECT_EQ(sol.outer_iterations, 1);
    EXPECT_EQ(sol.lambda_final.values(), (Vec{1.0}));
    EXPECT_EQ(sol.w_final, descend(f, SimplexWeights::uniform(1), w0, cfg.inner));
}

TEST(LagrangianDro, LiteralStoppingRule) {
    // Constant costs with hardmax give delta = (1, 0) forever; after n updates
    // lambda_1 = 1 - 1/(n+2), so the gap 1/(n+2) first drops below (n+2) eps
    // when (n+2)^2 > 1/eps. For eps = 1e-3 that is n = 30.
    const auto f = constant_family({1.0, 0.0});
    DroConfig cfg;
    cfg.beta = kInfiniteBeta;
    cfg.epsilon = 1e-3;
    const auto sol = lagrangian_dro(f, CalibrationVector::zeros(2), cfg, Vec{0.0});
    EXPECT_TRUE(sol.converged);
    EXPECT_EQ(sol.outer_iterations, 30);
    EXPECT_NEAR(sol.lambda_final[0], 1.0 - 1.0 / 32.0, 1e-15);

    cfg.scaled_stop = false;  // gap 1/(n+2) < 1e-3 first at n = 999
    cfg.max_outer = 5000;
    const auto unscaled = lagrangian_dro(f, CalibrationVector::zeros(2), cfg, Vec{0.0});
    EXPECT_EQ(unscaled.outer_iterations, 999);
}

TEST(LagrangianDro, MaxOuterCapFlagsNonConvergence) {
    const auto f = constant_family({1.0, 0.0});
    DroConfig cfg;
    cfg.beta = kInfiniteBeta;
    cfg.epsilon = 1e-6;
    cfg.max_outer = 12;
    const auto sol = lagrangian_dro(f, CalibrationVector::zeros(2), cfg, Vec{0.0});
    EXPECT_FALSE(sol.converged);
    EXPECT_EQ(sol.outer_iterations, 12);
}

TEST(LagrangianDro, TrajectoryInvariants) {
    const auto f = make_dataset_family(small_two_pop(5), LossKind::logistic, 0.0);
    DroConfig cfg;
    cfg.max_outer = 40;
    const auto sol = lagrangian_dro(f, CalibrationVector::zeros(2), cfg, Vec(f.dim(), 0.0));
    ASSERT_EQ(sol.trajectory.size(), static_cast<std::size_t>(sol.outer_iterations));
    for (std::size_t i = 0; i < sol.trajectory.size(); ++i) {
        const auto& rec = sol.trajectory[i];
        EXPECT_EQ(rec.t, static_cast<long>(i + 2));
        EXPECT_LE(sum_error(rec.lambda), 1e-9);
        EXPECT_LE(sum_error(rec.delta), 1e-9);
        for (double v : rec.lambda) EXPECT_GE(v, 0.0);
        for (double v : rec.delta) EXPECT_GE(v, 0.0);
    }
    EXPECT_EQ(sol.trajectory.back().lambda, sol.lambda_final.values());
    EXPECT_EQ(sol.trajectory.back().costs, sol.costs_final);
    EXPECT_EQ(sol.costs_final, group_costs(f, sol.w_final));
}

TEST(LagrangianDro, Deterministic) {
    const auto f = make_dataset_family(small_two_pop(6), LossKind::hinge, 1e-2);
    DroConfig cfg;
    cfg.max_outer = 25;
    const auto a = lagrangian_dro(f, CalibrationVector::zeros(2), cfg, Vec(f.dim(), 0.0));
    const auto b = lagrangian_dro(f, CalibrationVector::zeros(2), cfg, Vec(f.dim(), 0.0));
    ASSERT_EQ(a.trajectory.size(), b.trajectory.size());
    for (std::size_t i = 0; i < a.trajectory.size(); ++i) {
        EXPECT_EQ(a.trajectory[i].lambda, b.trajectory[i].lambda);
        EXPECT_EQ(a.trajectory[i].costs, b.trajectory[i].costs);
        EXPECT_EQ(a.trajectory[i].mix_cost, b.trajectory[i].mix_cost);
    }
    EXPECT_EQ(a.w_final, b.w_final);
}

TEST(LagrangianDro, ConvexDominanceOverUniformErm) {
    for (std::uint64_t seed : {1u, 2u}) {
        const auto f = make_dataset_family(small_two_pop(seed), LossKind::logistic, 0.0);
        DroConfig cfg;
        cfg.beta = kInfiniteBeta;
        cfg.max_outer = 800;
        const auto z = CalibrationVector::zeros(2);
        const auto sol = lagrangian_dro(f, z, cfg, Vec(f.dim(), 0.0));
        const Vec w_erm = descend(f, SimplexWeights::uniform(2), Vec(f.dim(), 0.0), {0.1, 20000, true, 1e-4, 40, 1e-10});
        const Vec c = group_costs(f, w_erm);
        EXPECT_LE(sol.objective(z), std::max(c[0], c[1]) + 1e-6);
    }
}

TEST(LagrangianDro, CounterexampleLandsInAMixtureWellNotAtZero) {
    const auto f = make_counterexample_family();
    DroConfig cfg;
    const auto sol = lagrangian_dro(f, CalibrationVector::zeros(2), cfg, Vec{0.1});
    EXPECT_FALSE(sol.converged);
    EXPECT_EQ(sol.outer_iterations, 500);
    EXPECT_GT(std::abs(sol.w_final[0]), 1.0);
    // lambda keeps moving: the recorded weights are not constant over the run.
    double lo = 1, hi = 0;
    for (const auto& rec : sol.trajectory) lo = std::min(lo, rec.lambda[0]), hi = std::max(hi, rec.lambda[0]);
    EXPECT_GT(hi - lo, 0.05);
}

TEST(LagrangianDro, RejectsBadInputs) {
    const auto f = make_counterexample_family();
    DroConfig cfg;
    EXPECT_THROW(lagrangian_dro(f, CalibrationVector::zeros(3), cfg, Vec{0.0}), ContractViolation);
    EXPECT_THROW(lagrangian_dro(f, CalibrationVector::zeros(2), cfg, Vec{0.0, 0.0}), ContractViolation);
    cfg.epsilon = 0.0;
    EXPECT_THROW(lagrangian_dro(f, CalibrationVector::zeros(2), cfg, Vec{0.0}), ContractViolation);
    cfg.epsilon = 1e-4;
    cfg.max_outer = 0;
    EXPECT_THROW(lagrangian_dro(f, CalibrationVector::zeros(2), cfg, Vec{0.0}), ContractViolation);
}

TEST(Baseline, SingleGroupIgnoresAlpha) {
    const auto data = small_two_pop(4);
    const GroupedDataset one(data.task(), {data.group(0)});
    const Vec grid{0.0, 0.1, 1.0};
    const auto rep = estimate_baseline(one, 0, LossKind::logistic, grid, 0.7, 7);
    ASSERT_EQ(rep.alpha_grid.size(), 3u);
    for (const auto& p : rep.alpha_grid) EXPECT_EQ(p.validation_cost, rep.alpha_grid[0].validation_cost);
    EXPECT_EQ(rep.r_star, rep.alpha_grid[0].validation_cost);
}

TEST(Baseline, ZeroGridIsIsolatedTraining) {
    const auto data = small_two_pop(4);
    const Vec grid{0.0};
    const auto rep = estimate_baseline(data, 1, LossKind::logistic, grid, 0.7, 7);
    const auto splits = split_dataset(data, 0.7, 7);
    const auto f = make_dataset_family(GroupedDataset(data.task(), {splits[1].train}), LossKind::logistic, 0.0);
    const Vec w = descend(f, SimplexWeights::uniform(1), Vec(f.dim(), 0.0), BaselineOptions{}.inner);
    EXPECT_EQ(rep.w_star, w);
    const auto vf = make_dataset_family(GroupedDataset(data.task(), {splits[1].validation}), LossKind::logistic, 0.0);
    EXPECT_EQ(rep.r_star, vf.cost(0, w));
    EXPECT_EQ(rep.n_train + rep.n_validation, data.group(1).size());
}

TEST(Baseline, RStarIsGridMinimumAndDeterministic) {
    const auto data = small_two_pop(9);
    const Vec grid{0.0, 0.05, 0.25, 1.0};
    const auto a = estimate_baseline(data, 1, LossKind::hinge, grid, 0.7, 3, hinge_baseline());
    const auto b = estimate_baseline(data, 1, LossKind::hinge, grid, 0.7, 3, hinge_baseline());
    double m = std::numeric_limits<double>::infinity();
    for (const auto& p : a.alpha_grid) m = std::min(m, p.validation_cost);
    EXPECT_EQ(a.r_star, m);
    EXPECT_EQ(a.r_star, b.r_star);
    EXPECT_EQ(a.w_star, b.w_star);
}

TEST(Baseline, PooledDataRegularizesMinorityOnSomeSeed) {
    const Vec grid{0.0, 0.05, 0.1, 0.25, 0.5, 1.0};
    bool pooled_helped = false;
    for (std::uint64_t seed : {7u, 17u, 27u}) {
        TwoPopulationParams p;
        p.seed = seed;
        const auto rep = estimate_baseline(gen_two_population(p), 1, LossKind::hinge, grid, 0.7, seed, hinge_baseline());
        EXPECT_LE(rep.r_star, rep.alpha_grid[0].validation_cost + 1e-9);
        if (rep.alpha_star > 0.0) pooled_helped = true;
    }
    EXPECT_TRUE(pooled_helped);
}

TEST(Baseline, Preconditions) {
    GroupedDataset tiny(TaskKind::classification, {{{{0.0}, 1.0}, {{1.0}, -1.0}, {{2.0}, 1.0}}});
    const Vec grid{0.0};
    EXPECT_THROW(estimate_baseline(tiny, 0, LossKind::logistic, grid, 0.7, 1), ContractViolation);
    const auto data = small_two_pop(1);
    const Vec empty;
    EXPECT_THROW(estimate_baseline(data, 0, LossKind::logistic, empty, 0.7, 1), ContractViolation);
    EXPECT_THROW(estimate_baseline(data, 2, LossKind::logistic, grid, 0.7, 1), ContractViolation);
    EXPECT_THROW(estimate_baseline(data, 0, LossKind::logistic, grid, 1.0, 1), ContractViolation);
}

TEST(Recommend, InfiniteBoundsNeverRefuse) {
    const auto data = small_two_pop(2);
    const Vec inf(2, std::numeric_limits<double>::infinity());
    DroConfig cfg;
    cfg.max_outer = 30;
    const auto rep = recommend_pipeline(data, LossKind::logistic, inf, cfg);
    EXPECT_FALSE(rep.refused());
    ASSERT_TRUE(rep.solution.has_value());
    EXPECT_EQ(rep.calibration.r, (Vec{rep.baselines[0].r_star, rep.baselines[1].r_star}));
}

TEST(Recommend, RefusalNamesOffendingGroup) {
    const auto data = small_two_pop(2);
    DroConfig cfg;
    const Vec bounds{std::numeric_limits<double>::infinity(), 1e-6};
    const auto rep = recommend_pipeline(data, LossKind::logistic, bounds, cfg);
    EXPECT_EQ(rep.refused_groups, (std::vector<std::size_t>{1}));
    EXPECT_FALSE(rep.solution.has_value());
}

TEST(Recommend, CostsStayAboveTrainingFloor) {
    const auto data = small_two_pop(8);
    const Vec inf(2, std::numeric_limits<double>::infinity());
    DroConfig cfg;
    cfg.max_outer = 100;
    const auto rep = recommend_pipeline(data, LossKind::logistic, inf, cfg);
    ASSERT_EQ(rep.floor_margins.size(), 2u);
    for (double m : rep.floor_margins) EXPECT_GE(m, -1e-6);
}

TEST(Recommend, SizeAdjustment) {
    const std::vector<std::size_t> counts{100, 25};
    const auto r = size_adjusted(CalibrationVector(Vec{1.0, 1.0}), counts, 0.5);
    EXPECT_DOUBLE_EQ(r[0], 1.0 - 0.05);
    EXPECT_DOUBLE_EQ(r[1], 1.0 - 0.1);
}

TEST(Recommend, PooledWeightsFollowGroupSizes) {
    const auto data = small_two_pop(1);
    const auto lam = pooled_weights(data);
    EXPECT_DOUBLE_EQ(lam[0], 0.75);
    EXPECT_DOUBLE_EQ(lam[1], 0.25);
}

TEST(Split, PartitionsGroupDeterministically) {
    const auto data = small_two_pop(1);
    const auto a = split_group(data.group(0), 0.7, 99);
    const auto b = split_group(data.group(0), 0.7, 99);
    EXPECT_EQ(a.train.size(), 42u);
    EXPECT_EQ(a.validation.size(), 18u);
    ASSERT_EQ(a.train.size(), b.train.size());
    for (std::size_t i = 0; i < a.train.size(); ++i) EXPECT_EQ(a.train[i].features, b.train[i].features);
}
