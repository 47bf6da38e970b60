#pragma once

#include "drolab/core.hpp"
#include "drolab/dataset.hpp"

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <utility>

namespace drolab {

enum class LossKind { squared, logistic, hinge };

inline const char* to_string(LossKind l) {
    switch (l) {
        case LossKind::squared: return "squared";
        case LossKind::logistic: return "logistic";
        case LossKind::hinge: return "hinge";
    }
    return "?";
}

inline LossKind parse_loss(const std::string& s) {
    if (s == "squared") return LossKind::squared;
    if (s == "logistic") return LossKind::logistic;
    if (s == "hinge") return LossKind::hinge;
    throw ContractViolation("unknown loss '" + s + "' (expected squared, logistic or hinge)");
}

/// Closed-form cost term: value and exact gradient of one C_k(w).
struct ClosedFormCost {
    std::function<double(std::span<const double>)> cost;
    std::function<Vec(std::span<const double>)> grad;
};

namespace detail {

// Linear predictor with the bias stored as the last coordinate of w.
inline double predict(std::span<const double> w, std::span<const double> x) {
    double f = w[x.size()];
    for (std::size_t i = 0; i < x.size(); ++i) f += w[i] * x[i];
    return f;
}

// log(1 + exp(-m)) without overflow.
inline double log1p_exp_neg(double m) {
    return m > 0.0 ? std::log1p(std::exp(-m)) : -m + std::log1p(std::exp(m));
}

// Returns the per-example loss and writes d loss / d f into *dloss.
inline double example_loss(LossKind loss, double f, double y, double* dloss) {
    switch (loss) {
        case LossKind::squared: {
            const double r = y - f;
            *dloss = -2.0 * r;
            return r * r;
        }
        case LossKind::logistic: {
            const double m = y * f;
            // sigma(-m) computed on the stable branch
            const double s = m > 0.0 ? std::exp(-m) / (1.0 + std::exp(-m)) : 1.0 / (1.0 + std::exp(m));
            *dloss = -y * s;
            return log1p_exp_neg(m);
        }
        case LossKind::hinge: {
            const double m = y * f;
            // subgradient 0 at the kink m == 1
            *dloss = m < 1.0 ? -y : 0.0;
            return m < 1.0 ? 1.0 - m : 0.0;
        }
    }
    return 0.0;
}

}  // namespace detail

/**
 * A finite indexed family of differentiable costs C_k(w).
 *
 * Either dataset-backed (C_k is the mean per-example loss over group k of a
 * GroupedDataset, plus (mu/2)||w||^2) or closed-form (arbitrary scalar
 * functions with exact gradients). Copies share the underlying data.
 */
class CostFamily {
public:
    static CostFamily dataset_backed(GroupedDataset data, LossKind loss, double mu) {
        require(std::isfinite(mu) && mu >= 0.0, "regularization mu must be >= 0");
        if (loss != LossKind::squared)
            require(data.task() == TaskKind::classification,
                    std::string(to_string(loss)) + " loss requires a classification dataset");
        CostFamily f;
        f.data_ = std::make_shared<const GroupedDataset>(std::move(data));
        f.loss_ = loss;
        f.mu_ = mu;
        f.dim_ = f.data_->dim() + 1;
        f.groups_ = f.data_->groups();
        f.convex_ = true;
        f.name_ = std::string("dataset/") + to_string(loss);
        return f;
    }

    static CostFamily closed_form(std::size_t dim, std::vector<ClosedFormCost> terms, bool convex,
                                  std::string name = "closed-form") {
        require(dim >= 1, "closed-form family needs dimension >= 1");
        require(!terms.empty(), "closed-form family needs at least one cost");
        for (const auto& t : terms) require(t.cost && t.grad, "closed-form cost needs value and gradient");
        CostFamily f;
        f.terms_ = std::make_shared<const std::vector<ClosedFormCost>>(std::move(terms));
        f.dim_ = dim;
        f.groups_ = f.terms_->size();
        f.convex_ = convex;
        f.name_ = std::move(name);
        return f;
    }

    std::size_t groups() const noexcept { return groups_; }
    std::size_t dim() const noexcept { return dim_; }
    bool convex() const noexcept { return convex_; }
    bool dataset_backed() const noexcept { return data_ != nullptr; }
    /// True when every cost is differentiable everywhere (hinge is not).
    bool smooth() const noexcept { return !data_ || loss_ != LossKind::hinge; }
    const std::string& name() const noexcept { return name_; }
    const GroupedDataset* dataset() const noexcept { return data_.get(); }
    LossKind loss() const noexcept { return loss_; }
    double mu() const noexcept { return mu_; }

    /// Optional calibration shift reported alongside closed-form costs.
    const std::optional<CalibrationVector>& shift() const noexcept { return shift_; }
    void set_shift(CalibrationVector r) {
        require(r.size() == groups_, "shift length must equal the group count");
        shift_ = std::move(r);
    }

    double cost(std::size_t k, std::span<const double> w) const {
        check(k, w);
        if (terms_) return (*terms_)[k].cost(w);
        double sum = 0.0;
        for (const auto& ex : data_->group(k)) {
            double dl = 0.0;
            sum += detail::example_loss(loss_, detail::predict(w, ex.features), ex.label, &dl);
        }
        return sum / static_cast<double>(data_->group(k).size()) + regularizer(w);
    }

    Vec grad(std::size_t k, std::span<const double> w) const { return cost_grad(k, w).second; }

    /// Value and gradient in one pass over the group.
    std::pair<double, Vec> cost_grad(std::size_t k, std::span<const double> w) const {
        check(k, w);
        if (terms_) {
            const auto& t = (*terms_)[k];
            Vec g = t.grad(w);
            require(g.size() == dim_, "closed-form gradient has wrong dimension");
            return {t.cost(w), std::move(g)};
        }
        const auto& group = data_->group(k);
        const std::size_t n = data_->dim();
        Vec g(dim_, 0.0);
        double sum = 0.0;
        for (const auto& ex : group) {
            double dl = 0.0;
            sum += detail::example_loss(loss_, detail::predict(w, ex.features), ex.label, &dl);
            if (dl != 0.0) {
                for (std::size_t i = 0; i < n; ++i) g[i] += dl * ex.features[i];
                g[n] += dl;
            }
        }
        const double inv = 1.0 / static_cast<double>(group.size());
        for (std::size_t i = 0; i < dim_; ++i) g[i] = g[i] * inv + mu_ * w[i];
        return {sum * inv + regularizer(w), std::move(g)};
    }

private:
    void check(std::size_t k, std::span<const double> w) const {
        require(k < groups_, "group index " + std::to_string(k) + " out of range");
        require(w.size() == dim_, "parameter dimension " + std::to_string(w.size()) +
                                      " does not match family dimension " + std::to_string(dim_));
    }

    double regularizer(std::span<const double> w) const { return mu_ > 0.0 ? 0.5 * mu_ * dot(w, w) : 0.0; }

    std::shared_ptr<const GroupedDataset> data_;
    std::shared_ptr<const std::vector<ClosedFormCost>> terms_;
    LossKind loss_ = LossKind::squared;
    double mu_ = 0.0;
    std::size_t dim_ = 0;
    std::size_t groups_ = 0;
    bool convex_ = false;
    std::string name_;
    std::optional<CalibrationVector> shift_;
};

inline double group_cost(const CostFamily& family, std::size_t k, std::span<const double> w) {
    return family.cost(k, w);
}

inline Vec group_grad(const CostFamily& family, std::size_t k, std::span<const double> w) {
    return family.grad(k, w);
}

inline Vec group_costs(const CostFamily& family, std::span<const double> w) {
    Vec c(family.groups());
    for (std::size_t k = 0; k < c.size(); ++k) c[k] = family.cost(k, w);
    return c;
}

namespace detail {
inline void check_mixture(const CostFamily& family, const SimplexWeights& lambda) {
    require(lambda.size() == family.groups(), "mixture weights length must equal the group count");
}
}  // namespace detail

/// Sum_k lambda_k C_k(w); zero-weight groups are skipped.
inline double mixture_cost(const CostFamily& family, const SimplexWeights& lambda, std::span<const double> w) {
    detail::check_mixture(family, lambda);
    double c = 0.0;
    for (std::size_t k = 0; k < family.groups(); ++k)
        if (lambda[k] != 0.0) c += lambda[k] * family.cost(k, w);
    return c;
}

/// (Sum_k lambda_k C_k(w), Sum_k lambda_k grad C_k(w)), accumulated in group order.
inline std::pair<double, Vec> mixture_cost_grad(const CostFamily& family, const SimplexWeights& lambda,
                                                std::span<const double> w) {
    detail::check_mixture(family, lambda);
    double c = 0.0;
    Vec g(family.dim(), 0.0);
    for (std::size_t k = 0; k < family.groups(); ++k) {
        if (lambda[k] == 0.0) continue;
        auto [ck, gk] = family.cost_grad(k, w);
        c += lambda[k] * ck;
        axpy(lambda[k], gk, g);
    }
    return {c, std::move(g)};
}

/**
 * The two-cost nonconvex family C_1(w) = tanh(1+w) + eps w^2,
 * C_2(w) = tanh(1-w) + eps w^2. The minimizer of max(C_1, C_2) is w = 0,
 * where every mixture of the two costs has negative curvature.
 */
inline CostFamily make_counterexample_family(double epsilon = 0.05,
                                             std::optional<CalibrationVector> shift_r = std::nullopt) {
    require(std::isfinite(epsilon) && epsilon > 0.0, "counterexample epsilon must be > 0");
    auto term = [epsilon](double sign) {
        return ClosedFormCost{
            [epsilon, sign](std::span<const double> w) { return std::tanh(1.0 + sign * w[0]) + epsilon * w[0] * w[0]; },
            [epsilon, sign](std::span<const double> w) {
                const double c = std::cosh(1.0 + sign * w[0]);
                return Vec{sign / (c * c) + 2.0 * epsilon * w[0]};
            }};
    };
    auto family = CostFamily::closed_form(1, {term(1.0), term(-1.0)}, false, "counterexample");
    if (shift_r) family.set_shift(std::move(*shift_r));
    return family;
}

/// Dataset-backed family over a linear predictor with bias (d = n + 1).
inline CostFamily make_dataset_family(GroupedDataset data, LossKind loss, double mu) {
    return CostFamily::dataset_backed(std::move(data), loss, mu);
}

/// Fraction of group examples with sign(f_w(x)) == y (f == 0 predicts +1).
inline double group_accuracy(const GroupedDataset& data, std::size_t k, std::span<const double> w) {
    require(data.task() == TaskKind::classification, "accuracy needs a classification dataset");
    require(w.size() == data.dim() + 1, "parameter dimension mismatch");
    const auto& g = data.group(k);
    std::size_t correct = 0;
    for (const auto& ex : g) {
        const double f = detail::predict(w, ex.features);
        if ((f >= 0.0 ? 1.0 : -1.0) == ex.label) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(g.size());
}

inline Vec group_accuracies(const GroupedDataset& data, std::span<const double> w) {
    Vec a(data.groups());
    for (std::size_t k = 0; k < a.size(); ++k) a[k] = group_accuracy(data, k, w);
    return a;
}

}  // namespace drolab
