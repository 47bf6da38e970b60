#pragma once

#include "drolab/core.hpp"
#include "drolab/cost_model.hpp"

#include <limits>

namespace drolab {

/// Full-batch gradient descent settings for the inner minimization.
struct DescentConfig {
    double step = 0.1;
    int iterations = 200;
    bool backtracking = true;
    double armijo = 1e-4;
    int max_halvings = 40;
    /// Stop early once the mixture gradient norm drops to this value.
    double grad_tol = 1e-12;

    void validate() const {
        require(std::isfinite(step) && step > 0.0, "descent step must be finite and > 0");
        require(iterations >= 1, "descent iterations must be >= 1");
        require(armijo > 0.0 && armijo < 1.0, "armijo constant must lie in (0,1)");
        require(max_halvings >= 1, "max_halvings must be >= 1");
        require(grad_tol >= 0.0, "grad_tol must be >= 0");
    }
};

struct DescentResult {
    Vec w;
    int iterations = 0;  ///< accepted steps
    /// Mixture cost at w0 followed by the cost after each accepted step.
    Vec costs;
};

/**
 * Gradient descent on the lambda-mixture sum_k lambda_k C_k(w).
 *
 * With backtracking, each iteration starts from the configured step and
 * halves it until the Armijo condition holds; if no halving is accepted the
 * descent stops there, so the recorded cost sequence never increases.
 */
inline DescentResult descend_traced(const CostFamily& family, const SimplexWeights& lambda,
                                    std::span<const double> w0, const DescentConfig& cfg) {
    cfg.validate();
    require(w0.size() == family.dim(), "initial parameters have wrong dimension");
    require(all_finite(w0), "initial parameters must be finite");

    DescentResult out;
    out.w.assign(w0.begin(), w0.end());
    Vec trial(out.w.size());

    auto [cost, grad] = mixture_cost_grad(family, lambda, out.w);
    if (!std::isfinite(cost) || !all_finite(grad)) throw DivergenceError("non-finite mixture cost or gradient", 0);
    out.costs.push_back(cost);

    for (int it = 1; it <= cfg.iterations; ++it) {
        const double gg = dot(grad, grad);
        if (std::sqrt(gg) <= cfg.grad_tol) break;

        double step = cfg.step;
        bool accepted = false;
        if (cfg.backtracking) {
            for (int h = 0; h <= cfg.max_halvings; ++h, step *= 0.5) {
                for (std::size_t i = 0; i < trial.size(); ++i) trial[i] = out.w[i] - step * grad[i];
                const double c = mixture_cost(family, lambda, trial);
                if (std::isfinite(c) && c <= cost - cfg.armijo * step * gg) {
                    accepted = true;
                    break;
                }
            }
            if (!accepted) break;
        } else {
            for (std::size_t i = 0; i < trial.size(); ++i) trial[i] = out.w[i] - step * grad[i];
        }

        out.w.swap(trial);
        std::tie(cost, grad) = mixture_cost_grad(family, lambda, out.w);
        if (!std::isfinite(cost) || !all_finite(grad) || !all_finite(out.w))
            throw DivergenceError("non-finite mixture cost or gradient", it);
        out.costs.push_back(cost);
        out.iterations = it;
    }
    return out;
}

inline Vec descend(const CostFamily& family, const SimplexWeights& lambda, std::span<const double> w0,
                   const DescentConfig& cfg = {}) {
    return descend_traced(family, lambda, w0, cfg).w;
}

inline constexpr double kInfiniteBeta = std::numeric_limits<double>::infinity();

/**
 * Group reweighting delta_k proportional to exp(beta (c_k - r_k)), normalized
 * with max-subtraction. beta = +inf returns the uniform distribution over the
 * argmax set of c - r.
 */
inline SimplexWeights softmax_delta(std::span<const double> costs, const CalibrationVector& r, double beta) {
    require(!costs.empty(), "softmax needs at least one cost");
    require(costs.size() == r.size(), "costs and calibration lengths differ");
    require(all_finite(costs), "costs must be finite");
    require(!std::isnan(beta) && beta >= 0.0, "beta must be >= 0 or +inf");

    const std::size_t k = costs.size();
    Vec v(k);
    for (std::size_t i = 0; i < k; ++i) v[i] = costs[i] - r[i];
    const double top = *std::max_element(v.begin(), v.end());

    Vec e(k);
    if (std::isinf(beta)) {
        for (std::size_t i = 0; i < k; ++i) e[i] = v[i] == top ? 1.0 : 0.0;
    } else {
        for (std::size_t i = 0; i < k; ++i) e[i] = std::exp(beta * (v[i] - top));
    }
    double z = 0.0;
    for (double x : e) z += x;
    for (double& x : e) x /= z;
    return SimplexWeights(std::move(e));
}

/// Running average (t lambda + delta) / (t + 1), renormalized.
inline SimplexWeights average_update(const SimplexWeights& lambda, const SimplexWeights& delta, long t) {
    require(lambda.size() == delta.size(), "lambda and delta lengths differ");
    require(t >= 1, "average_update needs t >= 1");
    const double td = static_cast<double>(t);
    Vec out(lambda.size());
    // lambda + (delta - lambda)/(t+1) equals (t lambda + delta)/(t+1) and keeps lambda = delta exact.
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = lambda[i] + (delta[i] - lambda[i]) / (td + 1.0);
    return SimplexWeights::normalized(std::move(out));
}

}  // namespace drolab
