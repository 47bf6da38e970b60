#pragma once

#include "drolab/core.hpp"
#include "drolab/cost_model.hpp"
#include "drolab/dataset.hpp"
#include "drolab/optimize.hpp"

#include <cstdint>
#include <optional>
#include <random>

namespace drolab {

struct DroConfig {
    double beta = 5.0;
    double epsilon = 1e-4;
    int max_outer = 500;
    DescentConfig inner;
    std::uint64_t seed = 7;
    /// false switches the stop test to max_k |lambda_k - delta_k| < epsilon.
    bool scaled_stop = true;

    void validate() const {
        require(!std::isnan(beta) && beta >= 0.0, "beta must be >= 0 or +inf");
        require(std::isfinite(epsilon) && epsilon > 0.0, "epsilon must be > 0");
        require(max_outer >= 1, "max_outer must be >= 1");
        inner.validate();
    }
};

struct IterationRecord {
    long t = 0;          ///< counter value used by the averaging step
    Vec lambda;          ///< mixture after the update
    Vec delta;
    Vec costs;           ///< c_k at the new iterate
    double mix_cost = 0; ///< sum_k lambda_k c_k with the weights the descent used
};

struct DroSolution {
    Vec w_final;
    SimplexWeights lambda_final;
    Vec costs_final;
    std::vector<IterationRecord> trajectory;
    bool converged = false;
    int outer_iterations = 0;

    /// max_k (c_k - r_k) at w_final.
    double objective(const CalibrationVector& r) const {
        double m = -std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < costs_final.size(); ++k) m = std::max(m, costs_final[k] - r[k]);
        return m;
    }
};

/**
 * Lagrangian DRO: alternate a warm-started descent on the lambda-mixture
 * with a tempered reweighting of the groups by calibrated cost.
 *
 *   t <- K, lambda <- 1/K
 *   repeat
 *     w <- descend(w, lambda); c_k <- C_k(w)
 *     delta <- softmax(beta (c - r)); lambda <- (t lambda + delta)/(t+1); t <- t+1
 *   until max_k |lambda_k - delta_k| < t eps  (or max_outer iterations)
 */
inline DroSolution lagrangian_dro(const CostFamily& family, const CalibrationVector& r, const DroConfig& cfg,
                                  std::span<const double> w0) {
    cfg.validate();
    const std::size_t k = family.groups();
    require(r.size() == k, "calibration length must equal the group count");
    require(w0.size() == family.dim() && all_finite(w0), "initial parameters must be finite with family dimension");

    DroSolution sol;
    long t = static_cast<long>(k);
    SimplexWeights lambda = SimplexWeights::uniform(k);
    Vec w(w0.begin(), w0.end());

    for (int outer = 1;; ++outer) {
        w = descend(family, lambda, w, cfg.inner);
        Vec c = group_costs(family, w);
        for (std::size_t i = 0; i < k; ++i)
            if (!std::isfinite(c[i])) throw DivergenceError("non-finite group cost", outer);
        double mix = 0.0;
        for (std::size_t i = 0; i < k; ++i) mix += lambda[i] * c[i];

        SimplexWeights delta = softmax_delta(c, r, cfg.beta);
        lambda = average_update(lambda, delta, t);
        ++t;

        double gap = 0.0;
        for (std::size_t i = 0; i < k; ++i) gap = std::max(gap, std::abs(lambda[i] - delta[i]));
        sol.trajectory.push_back({t - 1, lambda.values(), delta.values(), c, mix});
        sol.outer_iterations = outer;
        sol.costs_final = std::move(c);

        const double threshold = cfg.scaled_stop ? static_cast<double>(t) * cfg.epsilon : cfg.epsilon;
        if (gap < threshold) {
            sol.converged = true;
            break;
        }
        if (outer >= cfg.max_outer) break;
    }
    sol.w_final = std::move(w);
    sol.lambda_final = std::move(lambda);
    return sol;
}

/// Minimizer of the example-weighted (pooled) risk, lambda_k = n_k / N.
inline SimplexWeights pooled_weights(const GroupedDataset& data) {
    Vec m(data.groups());
    for (std::size_t k = 0; k < m.size(); ++k) m[k] = static_cast<double>(data.group(k).size());
    return SimplexWeights::normalized(std::move(m));
}

// --- calibration baselines -------------------------------------------------

struct GroupSplit {
    std::vector<Example> train;
    std::vector<Example> validation;
};

/// Deterministic shuffle-and-cut of one group; both parts are nonempty.
inline GroupSplit split_group(const std::vector<Example>& group, double ratio, std::uint64_t seed) {
    require(ratio > 0.0 && ratio < 1.0, "split ratio must lie in (0,1)");
    require(group.size() >= 4, "group needs at least 4 examples for a validation split");
    std::vector<std::size_t> idx(group.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::mt19937_64 rng(seed);
    std::shuffle(idx.begin(), idx.end(), rng);
    auto n_train = static_cast<std::size_t>(std::lround(ratio * static_cast<double>(group.size())));
    n_train = std::clamp<std::size_t>(n_train, 1, group.size() - 1);
    GroupSplit s;
    for (std::size_t i = 0; i < idx.size(); ++i)
        (i < n_train ? s.train : s.validation).push_back(group[idx[i]]);
    return s;
}

/// Splits every group with a per-group seed derived from `seed`.
inline std::vector<GroupSplit> split_dataset(const GroupedDataset& data, double ratio, std::uint64_t seed) {
    std::vector<GroupSplit> out;
    for (std::size_t k = 0; k < data.groups(); ++k)
        out.push_back(split_group(data.group(k), ratio, seed + 0x9E3779B97F4A7C15ULL * (k + 1)));
    return out;
}

struct BaselineOptions {
    double mu = 0.0;
    DescentConfig inner{0.1, 2000, true, 1e-4, 40, 1e-10};
};

struct AlphaPoint {
    double alpha = 0.0;
    double validation_cost = 0.0;
};

struct BaselineReport {
    std::size_t k = 0;
    double r_star = 0.0;
    double alpha_star = 0.0;
    std::vector<AlphaPoint> alpha_grid;
    Vec w_star;
    /// Training-split cost of the isolated (alpha = 0) model on group k.
    double train_floor = 0.0;
    std::size_t n_train = 0;
    std::size_t n_validation = 0;
    double split_ratio = 0.0;
    std::uint64_t seed = 0;
};

namespace detail {

inline Vec zeros(std::size_t d) { return Vec(d, 0.0); }

// Trains on {group k weight 1, pooled others weight alpha}; returns w.
inline Vec train_weighted(const std::vector<Example>& own, const std::vector<Example>& others, double alpha,
                          TaskKind task, LossKind loss, const BaselineOptions& opt) {
    if (alpha == 0.0 || others.empty()) {
        auto fam = make_dataset_family(GroupedDataset(task, {own}), loss, opt.mu);
        return descend(fam, SimplexWeights::uniform(1), zeros(fam.dim()), opt.inner);
    }
    auto fam = make_dataset_family(GroupedDataset(task, {own, others}), loss, opt.mu);
    const SimplexWeights lam(Vec{1.0 / (1.0 + alpha), alpha / (1.0 + alpha)});
    return descend(fam, lam, zeros(fam.dim()), opt.inner);
}

inline BaselineReport estimate_from_splits(const std::vector<GroupSplit>& splits, std::size_t k, TaskKind task,
                                           LossKind loss, std::span<const double> alpha_grid,
                                           const BaselineOptions& opt) {
    std::vector<Example> others;
    for (std::size_t j = 0; j < splits.size(); ++j)
        if (j != k) others.insert(others.end(), splits[j].train.begin(), splits[j].train.end());

    const auto val_family = make_dataset_family(GroupedDataset(task, {splits[k].validation}), loss, opt.mu);
    const auto train_family = make_dataset_family(GroupedDataset(task, {splits[k].train}), loss, opt.mu);

    BaselineReport rep;
    rep.k = k;
    rep.n_train = splits[k].train.size();
    rep.n_validation = splits[k].validation.size();
    rep.r_star = std::numeric_limits<double>::infinity();
    for (double alpha : alpha_grid) {
        Vec w = train_weighted(splits[k].train, others, alpha, task, loss, opt);
        const double v = val_family.cost(0, w);
        rep.alpha_grid.push_back({alpha, v});
        if (v < rep.r_star) {
            rep.r_star = v;
            rep.alpha_star = alpha;
            rep.w_star = std::move(w);
        }
    }
    const Vec w_iso = train_weighted(splits[k].train, others, 0.0, task, loss, opt);
    rep.train_floor = train_family.cost(0, w_iso);
    return rep;
}

inline void check_alpha_grid(std::span<const double> alpha_grid) {
    require(!alpha_grid.empty(), "alpha grid must be nonempty");
    for (double a : alpha_grid) require(std::isfinite(a) && a >= 0.0, "alpha values must be finite and >= 0");
}

}  // namespace detail

/**
 * Best achievable validation cost r*_k for group k, training on group k
 * (weight 1) plus the other groups pooled (weight alpha) for each alpha in
 * the grid. Deterministic given the seed.
 */
inline BaselineReport estimate_baseline(const GroupedDataset& data, std::size_t k, LossKind loss,
                                        std::span<const double> alpha_grid, double split_ratio, std::uint64_t seed,
                                        const BaselineOptions& opt = {}) {
    require(k < data.groups(), "group index out of range");
    detail::check_alpha_grid(alpha_grid);
    const auto splits = split_dataset(data, split_ratio, seed);
    auto rep = detail::estimate_from_splits(splits, k, data.task(), loss, alpha_grid, opt);
    rep.split_ratio = split_ratio;
    rep.seed = seed;
    return rep;
}

// --- recommendation pipeline -----------------------------------------------

struct RecommendationOptions {
    std::vector<double> alpha_grid{0.0, 0.05, 0.1, 0.25, 0.5, 1.0};
    double split_ratio = 0.7;
    BaselineOptions baseline;
    /// c_adj in r_k <- r_k - c_adj / sqrt(n_k); 0 disables the adjustment.
    double size_adjustment = 0.0;
};

struct RecommendationReport {
    std::vector<BaselineReport> baselines;
    /// Groups whose r*_k exceeds the acceptability bound; nonempty means no DRO run.
    std::vector<std::size_t> refused_groups;
    CalibrationVector calibration;
    std::optional<DroSolution> solution;
    Vec validation_costs;  ///< DRO model on each group's validation split
    Vec shortfalls;        ///< validation_costs - r*
    Vec floor_margins;     ///< costs_final (train split) - train_floor

    bool refused() const noexcept { return !refused_groups.empty(); }
};

/// Applies r_k <- r_k - c_adj / sqrt(n_k).
inline CalibrationVector size_adjusted(const CalibrationVector& r, std::span<const std::size_t> counts, double c_adj) {
    require(counts.size() == r.size(), "count length must equal calibration length");
    Vec out = r.r;
    for (std::size_t k = 0; k < out.size(); ++k) {
        require(counts[k] > 0, "group counts must be positive");
        out[k] -= c_adj / std::sqrt(static_cast<double>(counts[k]));
    }
    return CalibrationVector(std::move(out));
}

/**
 * Baselines per group, an acceptability gate, then calibrated DRO with
 * r = r*. The DRO run trains on the same training splits the baselines
 * used; a refusal is a regular result listing the offending groups.
 */
inline RecommendationReport recommend_pipeline(const GroupedDataset& data, LossKind loss,
                                               std::span<const double> acceptability, const DroConfig& cfg,
                                               const RecommendationOptions& opt = {}) {
    require(acceptability.size() == data.groups(), "acceptability length must equal the group count");
    for (double a : acceptability) require(!std::isnan(a), "acceptability bounds must not be NaN");
    cfg.validate();
    detail::check_alpha_grid(opt.alpha_grid);

    RecommendationReport rep;
    const auto splits = split_dataset(data, opt.split_ratio, cfg.seed);
    Vec r;
    for (std::size_t k = 0; k < data.groups(); ++k) {
        auto b = detail::estimate_from_splits(splits, k, data.task(), loss, opt.alpha_grid, opt.baseline);
        b.split_ratio = opt.split_ratio;
        b.seed = cfg.seed;
        if (b.r_star > acceptability[k]) rep.refused_groups.push_back(k);
        r.push_back(b.r_star);
        rep.baselines.push_back(std::move(b));
    }
    rep.calibration = CalibrationVector(r);
    if (rep.refused()) return rep;

    std::vector<std::vector<Example>> train_groups;
    std::vector<std::size_t> counts;
    for (const auto& s : splits) {
        train_groups.push_back(s.train);
        counts.push_back(s.train.size());
    }
    if (opt.size_adjustment != 0.0) rep.calibration = size_adjusted(rep.calibration, counts, opt.size_adjustment);

    const auto family = make_dataset_family(GroupedDataset(data.task(), std::move(train_groups)), loss, opt.baseline.mu);
    rep.solution = lagrangian_dro(family, rep.calibration, cfg, Vec(family.dim(), 0.0));

    for (std::size_t k = 0; k < data.groups(); ++k) {
        const auto vf = make_dataset_family(GroupedDataset(data.task(), {splits[k].validation}), loss, opt.baseline.mu);
        const double vc = vf.cost(0, rep.solution->w_final);
        rep.validation_costs.push_back(vc);
        rep.shortfalls.push_back(vc - rep.baselines[k].r_star);
        rep.floor_margins.push_back(rep.solution->costs_final[k] - rep.baselines[k].train_floor);
    }
    return rep;
}

}  // namespace drolab
