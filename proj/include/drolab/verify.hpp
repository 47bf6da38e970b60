#pragma once

#include "drolab/core.hpp"
#include "drolab/cost_model.hpp"
#include "drolab/optimize.hpp"

#include <Eigen/Eigenvalues>

#include <cstdint>
#include <optional>
#include <random>
#include <string>

namespace drolab {

// --- finite differences ----------------------------------------------------

/// Central-difference gradient of a scalar function, coordinate step h max(1,|w_i|).
template <typename F>
Vec central_difference(F&& f, std::span<const double> w, double h) {
    require(h > 0.0, "finite-difference step must be > 0");
    Vec x(w.begin(), w.end());
    Vec g(w.size());
    for (std::size_t i = 0; i < w.size(); ++i) {
        const double hi = h * std::max(1.0, std::abs(w[i]));
        x[i] = w[i] + hi;
        const double fp = f(std::span<const double>(x));
        x[i] = w[i] - hi;
        const double fm = f(std::span<const double>(x));
        x[i] = w[i];
        if (!std::isfinite(fp) || !std::isfinite(fm))
            throw DivergenceError("non-finite cost while probing coordinate " + std::to_string(i), 0);
        g[i] = (fp - fm) / (2.0 * hi);
    }
    return g;
}

inline Vec fd_gradient_oracle(const CostFamily& family, std::size_t k, std::span<const double> w, double h = 1e-6) {
    require(k < family.groups(), "group index out of range");
    require(w.size() == family.dim(), "parameter dimension mismatch");
    return central_difference([&](std::span<const double> x) { return family.cost(k, x); }, w, h);
}

/// Hessian of f by central second differences, step h max(1,|w_i|); symmetric.
template <typename F>
Eigen::MatrixXd fd_hessian(F&& f, std::span<const double> w, double h = 1e-4) {
    const std::size_t d = w.size();
    Vec x(w.begin(), w.end());
    Vec step(d);
    for (std::size_t i = 0; i < d; ++i) step[i] = h * std::max(1.0, std::abs(w[i]));
    auto at = [&](std::size_t i, double si, std::size_t j, double sj) {
        x[i] += si;
        x[j] += sj;
        const double v = f(std::span<const double>(x));
        x[i] = w[i];
        x[j] = w[j];
        return v;
    };
    const double f0 = f(w);
    Eigen::MatrixXd hess(d, d);
    for (std::size_t i = 0; i < d; ++i) {
        const double hi = step[i];
        hess(i, i) = (at(i, hi, i, 0.0) - 2.0 * f0 + at(i, -hi, i, 0.0)) / (hi * hi);
        for (std::size_t j = i + 1; j < d; ++j) {
            const double hj = step[j];
            const double v = (at(i, hi, j, hj) - at(i, hi, j, -hj) - at(i, -hi, j, hj) + at(i, -hi, j, -hj)) /
                             (4.0 * hi * hj);
            hess(i, j) = hess(j, i) = v;
        }
    }
    return hess;
}

// --- min-norm point in a convex hull ---------------------------------------

struct MinNormResult {
    SimplexWeights lambda;
    double norm = 0.0;
    Vec point;          ///< sum_k lambda_k g_k
    double gap = 0.0;   ///< final Frank-Wolfe duality gap
    long iterations = 0;
    bool approximate = false;  ///< iteration cap hit before the gap tolerance
};

/**
 * Projection of the origin onto conv{g_1..g_K}: minimizes
 * ||sum_k lambda_k g_k||^2 over the simplex with away-step Frank-Wolfe and
 * exact line search. Starts from the uniform mixture, so symmetric ties
 * resolve to equal weights.
 */
inline MinNormResult min_norm_in_hull(const std::vector<Vec>& gradients, double gap_tol = 1e-12,
                                      long max_iter = 100000) {
    require(!gradients.empty(), "need at least one gradient");
    const std::size_t k = gradients.size();
    const std::size_t d = gradients.front().size();
    for (const auto& g : gradients) {
        require(g.size() == d, "gradients must share a dimension");
        require(all_finite(g), "gradients must be finite");
    }

    Eigen::MatrixXd q(k, k);
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = i; j < k; ++j) q(i, j) = q(j, i) = dot(gradients[i], gradients[j]);

    Eigen::VectorXd lam = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(k), 1.0 / static_cast<double>(k));
    MinNormResult res;
    long it = 0;
    for (;; ++it) {
        const Eigen::VectorXd grad = q * lam;  // gradient of 0.5 lam' Q lam
        const double val = lam.dot(grad);

        Eigen::Index s = 0;
        grad.minCoeff(&s);
        Eigen::Index a = -1;
        for (Eigen::Index i = 0; i < lam.size(); ++i)
            if (lam(i) > 0.0 && (a < 0 || grad(i) > grad(a))) a = i;

        const double fw_gap = val - grad(s);
        res.gap = fw_gap;
        if (fw_gap <= gap_tol) break;
        if (it >= max_iter) {
            res.approximate = true;
            break;
        }

        const double away_gap = grad(a) - val;
        Eigen::VectorXd dir = -lam;
        double gamma_max = 1.0;
        if (fw_gap >= away_gap) {
            dir(s) += 1.0;
        } else {
            dir = lam;
            dir(a) -= 1.0;
            gamma_max = lam(a) / (1.0 - lam(a));
            if (!std::isfinite(gamma_max)) gamma_max = 1.0;
        }
        const double curv = dir.dot(q * dir);
        const double slope = grad.dot(dir);
        double gamma = curv > 0.0 ? -slope / curv : gamma_max;
        gamma = std::clamp(gamma, 0.0, gamma_max);
        if (gamma == 0.0) break;
        lam += gamma * dir;
        for (Eigen::Index i = 0; i < lam.size(); ++i)
            if (lam(i) < 1e-15) lam(i) = 0.0;
        lam /= lam.sum();
    }

    Vec l(lam.data(), lam.data() + lam.size());
    res.lambda = SimplexWeights(std::move(l));
    res.point.assign(d, 0.0);
    for (std::size_t i = 0; i < k; ++i) axpy(res.lambda[i], gradients[i], res.point);
    res.norm = norm2(res.point);
    res.iterations = it;
    return res;
}

// --- stationarity (mixture gradient vanishes for some lambda) ---------------

enum class Curvature { local_min, local_max, saddle, flat };

inline const char* to_string(Curvature c) {
    switch (c) {
        case Curvature::local_min: return "local-min";
        case Curvature::local_max: return "local-max";
        case Curvature::saddle: return "saddle";
        case Curvature::flat: return "flat";
    }
    return "?";
}

/// Magnitudes at or below this count as zero curvature.
inline constexpr double kFlatCurvature = 1e-7;

inline Curvature classify_curvature(std::span<const double> second_derivs) {
    bool pos = false, neg = false;
    for (double v : second_derivs) {
        if (v > kFlatCurvature) pos = true;
        if (v < -kFlatCurvature) neg = true;
    }
    if (pos && neg) return Curvature::saddle;
    if (pos) return Curvature::local_min;
    if (neg) return Curvature::local_max;
    return Curvature::flat;
}

struct StationarityReport {
    SimplexWeights lambda_star;
    double min_norm = 0.0;
    bool is_stationary = false;
    Curvature curvature = Curvature::flat;
    Vec curvature_values;  ///< Hessian eigenvalues (d <= 20) or directional second derivatives
    bool approximate = false;
    double tol = 0.0;
};

/// Curvature probes of the lambda-mixture at w.
inline Vec mixture_curvature(const CostFamily& family, const SimplexWeights& lambda, std::span<const double> w,
                             std::uint64_t seed = 0) {
    auto f = [&](std::span<const double> x) { return mixture_cost(family, lambda, x); };
    const std::size_t d = w.size();
    if (d <= 20) {
        const Eigen::MatrixXd h = fd_hessian(f, w, 1e-4);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(h, Eigen::EigenvaluesOnly);
        const auto& ev = eig.eigenvalues();
        return Vec(ev.data(), ev.data() + ev.size());
    }
    // Second differences along 2d random unit directions.
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    double scale = 1.0;
    for (double x : w) scale = std::max(scale, std::abs(x));
    const double h = 1e-4 * scale;
    const double f0 = f(w);
    Vec out;
    Vec dir(d), x(d);
    for (std::size_t p = 0; p < 2 * d; ++p) {
        for (double& v : dir) v = normal(rng);
        const double n = norm2(dir);
        for (std::size_t i = 0; i < d; ++i) x[i] = w[i] + h * dir[i] / n;
        const double fp = f(x);
        for (std::size_t i = 0; i < d; ++i) x[i] = w[i] - h * dir[i] / n;
        const double fm = f(x);
        out.push_back((fp - 2.0 * f0 + fm) / (h * h));
    }
    return out;
}

inline StationarityReport check_stationarity(const CostFamily& family, std::span<const double> w, double tol = 1e-4,
                                             std::uint64_t seed = 0) {
    require(tol > 0.0, "stationarity tolerance must be > 0");
    require(w.size() == family.dim(), "parameter dimension mismatch");
    std::vector<Vec> grads;
    for (std::size_t k = 0; k < family.groups(); ++k) grads.push_back(family.grad(k, w));
    const auto mn = min_norm_in_hull(grads);

    StationarityReport rep;
    rep.lambda_star = mn.lambda;
    rep.min_norm = mn.norm;
    rep.is_stationary = mn.norm <= tol;
    rep.approximate = mn.approximate;
    rep.tol = tol;
    rep.curvature_values = mixture_curvature(family, mn.lambda, w, seed);
    rep.curvature = classify_curvature(rep.curvature_values);
    return rep;
}

// --- converse: mixture local minimum is a calibrated DRO local minimum -------

struct ConverseReport {
    int n_samples = 0;
    Vec radii;
    double min_observed = 0.0;
    Vec worst_direction;
    double worst_radius = 0.0;
    bool passed = false;
    double tol = 0.0;
};

/**
 * Sets r_k = C_k(w*) and samples uniform directions u on spheres of the given
 * radii, recording min over samples of max_k (C_k(w* + u) - r_k). A value
 * below -tol exhibits a perturbation that improves every group at once.
 */
inline ConverseReport check_converse(const CostFamily& family, std::span<const double> w_star,
                                     std::span<const double> radii, int n_samples, std::uint64_t seed,
                                     double tol = 1e-8) {
    require(w_star.size() == family.dim(), "parameter dimension mismatch");
    require(n_samples >= 1, "n_samples must be >= 1");
    require(!radii.empty(), "at least one radius required");
    for (double r : radii) require(std::isfinite(r) && r > 0.0, "radii must be positive");

    const Vec r0 = group_costs(family, w_star);
    ConverseReport rep;
    rep.n_samples = n_samples;
    rep.radii.assign(radii.begin(), radii.end());
    rep.tol = tol;
    rep.min_observed = std::numeric_limits<double>::infinity();

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    const std::size_t d = w_star.size();
    Vec dir(d), x(d);
    for (double radius : radii) {
        for (int s = 0; s < n_samples; ++s) {
            double n = 0.0;
            do {
                for (double& v : dir) v = normal(rng);
                n = norm2(dir);
            } while (n == 0.0);
            for (std::size_t i = 0; i < d; ++i) x[i] = w_star[i] + radius * dir[i] / n;
            double worst = -std::numeric_limits<double>::infinity();
            for (std::size_t k = 0; k < family.groups(); ++k) worst = std::max(worst, family.cost(k, x) - r0[k]);
            if (worst < rep.min_observed) {
                rep.min_observed = worst;
                rep.worst_radius = radius;
                rep.worst_direction = dir;
                for (double& v : rep.worst_direction) v /= n;
            }
        }
    }
    rep.passed = rep.min_observed >= -tol;
    return rep;
}

// --- convex dual by grid search -------------------------------------------

struct DualGridResult {
    SimplexWeights lambda;
    Vec w;
    double value = 0.0;  ///< D(lambda*) = min_w sum lambda C - sum lambda r
    std::size_t grid_points = 0;
};

/**
 * Brute-force maximization of the concave dual
 *   D(lambda) = min_w sum_k lambda_k C_k(w) - sum_k lambda_k r_k
 * over a simplex grid (K = 2 or 3). Each inner minimization warm-starts from
 * the previous grid point. Among maximizers within 1e-12 the point closest to
 * the uniform mixture wins.
 */
inline DualGridResult dual_grid_oracle(const CostFamily& family, const CalibrationVector& r, int grid_resolution,
                                       const DescentConfig& inner) {
    const std::size_t k = family.groups();
    if (k < 2 || k > 3) throw UnsupportedSize("dual grid oracle supports K = 2 or K = 3 only");
    require(family.convex(), "dual grid oracle requires a convex family");
    require(r.size() == k, "calibration length must equal the group count");
    require(grid_resolution >= 2, "grid resolution must be >= 2");
    inner.validate();

    const int steps = grid_resolution - 1;
    std::vector<Vec> grid;
    if (k == 2) {
        for (int i = 0; i <= steps; ++i) {
            const double a = static_cast<double>(i) / steps;
            grid.push_back({a, 1.0 - a});
        }
    } else {
        for (int i = 0; i <= steps; ++i)
            for (int j = 0; j <= steps - i; ++j) {
                const double a = static_cast<double>(i) / steps, b = static_cast<double>(j) / steps;
                grid.push_back({a, b, std::max(0.0, 1.0 - a - b)});
            }
    }

    auto dist_uniform = [k](const Vec& l) {
        double s = 0.0;
        for (double v : l) s += (v - 1.0 / static_cast<double>(k)) * (v - 1.0 / static_cast<double>(k));
        return s;
    };

    DualGridResult best;
    best.value = -std::numeric_limits<double>::infinity();
    best.grid_points = grid.size();
    Vec w(family.dim(), 0.0);
    for (const auto& point : grid) {
        const SimplexWeights lam = SimplexWeights::normalized(point);
        w = descend(family, lam, w, inner);
        double value = mixture_cost(family, lam, w);
        for (std::size_t i = 0; i < k; ++i) value -= lam[i] * r[i];
        const bool first = best.w.empty();
        const double tie = first ? 0.0 : 1e-12 * std::max(1.0, std::abs(best.value));
        if (first || value > best.value + tie ||
            (value >= best.value - tie && dist_uniform(lam.values()) < dist_uniform(best.lambda.values()))) {
            best.value = value;
            best.lambda = lam;
            best.w = w;
        }
    }
    return best;
}

// --- 1-D landscapes ---------------------------------------------------------

struct LandscapeCurve {
    SimplexWeights lambda;
    Vec costs;       ///< mixture cost at each grid point
    Vec local_minima;
};

struct LandscapeMap {
    Vec w;
    std::vector<LandscapeCurve> curves;
    /// Smallest lambda_2 at which no local minimum with w < 0 remains (two-cost families).
    std::optional<double> left_min_threshold;
};

namespace detail {

inline Vec linspace(double lo, double hi, int n) {
    Vec w(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) w[i] = lo + (hi - lo) * static_cast<double>(i) / (n - 1);
    return w;
}

inline Vec strict_local_minima(std::span<const double> w, std::span<const double> c) {
    Vec out;
    for (std::size_t i = 1; i + 1 < c.size(); ++i)
        if (c[i] < c[i - 1] && c[i] < c[i + 1]) out.push_back(w[i]);
    return out;
}

inline LandscapeCurve scan_curve(const CostFamily& family, const SimplexWeights& lambda, const Vec& w) {
    LandscapeCurve curve{lambda, {}, {}};
    curve.costs.reserve(w.size());
    for (double x : w) curve.costs.push_back(mixture_cost(family, lambda, std::span<const double>(&x, 1)));
    curve.local_minima = strict_local_minima(w, curve.costs);
    return curve;
}

}  // namespace detail

/**
 * Smallest lambda_2 in (lo, hi] at which the scanned mixture
 * (1 - lambda_2) C_1 + lambda_2 C_2 has no interior local minimum with
 * w < 0, located by bisection. Requires a left minimum at lo and none at hi.
 */
inline std::optional<double> left_minimum_threshold(const CostFamily& family, double w_lo, double w_hi, int n_points,
                                                    double lo = 0.5, double hi = 1.0, double tol = 1e-9) {
    require(family.groups() == 2 && family.dim() == 1, "threshold search needs a 1-D two-cost family");
    const Vec w = detail::linspace(w_lo, w_hi, n_points);
    auto has_left = [&](double l2) {
        const auto curve = detail::scan_curve(family, SimplexWeights(Vec{1.0 - l2, l2}), w);
        return std::any_of(curve.local_minima.begin(), curve.local_minima.end(), [](double x) { return x < 0.0; });
    };
    if (!has_left(lo) || has_left(hi)) return std::nullopt;
    while (hi - lo > tol) {
        const double mid = 0.5 * (lo + hi);
        (has_left(mid) ? lo : hi) = mid;
    }
    return hi;
}

inline LandscapeMap landscape_scan_1d(const CostFamily& family, const std::vector<SimplexWeights>& lambda_grid,
                                      double w_lo, double w_hi, int n_points) {
    require(family.dim() == 1, "landscape scan needs a 1-D family");
    require(n_points >= 100, "landscape scan needs at least 100 points");
    require(w_lo < w_hi, "empty scan range");
    LandscapeMap map;
    map.w = detail::linspace(w_lo, w_hi, n_points);
    for (const auto& lam : lambda_grid) {
        require(lam.size() == family.groups(), "lambda length must equal the group count");
        map.curves.push_back(detail::scan_curve(family, lam, map.w));
    }
    if (family.groups() == 2) map.left_min_threshold = left_minimum_threshold(family, w_lo, w_hi, n_points);
    return map;
}

}  // namespace drolab
