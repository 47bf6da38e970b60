#pragma once

#include "drolab/core.hpp"
#include "drolab/cost_model.hpp"
#include "drolab/dataset.hpp"

#include <cstdint>
#include <numbers>
#include <random>

namespace drolab {

/**
 * Two subpopulations of 2-D points, each made of two Gaussian class clouds
 * placed on either side of its own linear boundary through the origin. The
 * minority boundary is the majority boundary rotated by `rotation`.
 *
 * A point of class y in a subpopulation with boundary normal n and tangent t
 * is  y * margin * n + s * t + e,  s ~ N(0, spread^2), e ~ N(0, noise^2 I).
 */
struct TwoPopulationParams {
    int n_majority = 450;
    int n_minority = 50;
    double margin = 1.5;
    double rotation = std::numbers::pi / 3.0;
    double noise = 0.6;
    double spread = 2.0;
    double positive_fraction = 0.5;
    std::uint64_t seed = 7;

    void validate() const {
        require(n_majority >= 10 && n_minority >= 10, "group counts must be >= 10 (counts >= 10)");
        require(std::isfinite(noise) && noise > 0.0, "noise scale must be > 0");
        require(std::isfinite(margin) && margin >= 0.0, "margin must be >= 0");
        require(std::isfinite(rotation), "rotation must be finite");
        require(std::isfinite(spread) && spread >= 0.0, "spread must be >= 0");
        require(positive_fraction > 0.0 && positive_fraction < 1.0, "positive fraction must lie in (0,1)");
    }
};

inline GroupedDataset gen_two_population(const TwoPopulationParams& p) {
    p.validate();
    std::mt19937_64 rng(p.seed);
    std::normal_distribution<double> normal(0.0, 1.0);

    std::vector<std::vector<Example>> groups;
    const std::pair<int, double> pops[] = {{p.n_majority, 0.0}, {p.n_minority, p.rotation}};
    for (const auto& [n, angle] : pops) {
        const double nx = std::cos(angle), ny = std::sin(angle);
        const double tx = -ny, ty = nx;
        const int n_pos = static_cast<int>(std::lround(p.positive_fraction * n));
        std::vector<Example> g;
        g.reserve(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) {
            const double y = i < n_pos ? 1.0 : -1.0;
            const double s = p.spread * normal(rng);
            const double e1 = p.noise * normal(rng);
            const double e2 = p.noise * normal(rng);
            g.push_back({{y * p.margin * nx + s * tx + e1, y * p.margin * ny + s * ty + e2}, y});
        }
        groups.push_back(std::move(g));
    }
    return GroupedDataset(TaskKind::classification, std::move(groups));
}

/// Finite stand-in for an l-inf perturbation ball: constant feature shifts on a grid.
struct PerturbationGridParams {
    double radius = 0.3;  ///< kappa
    int grid = 1;         ///< steps per side; offsets kappa * i / grid, |i| <= grid
    std::size_t cap = 81;
    LossKind loss = LossKind::hinge;
    double mu = 1e-2;
};

namespace detail {
inline std::size_t ipow(std::size_t b, std::size_t e) {
    std::size_t r = 1;
    while (e--) r *= b;
    return r;
}
}  // namespace detail

/// All offset vectors of the grid, in lexicographic order (first axis slowest).
inline std::vector<Vec> adversarial_offsets(const PerturbationGridParams& p, std::size_t dim) {
    require(std::isfinite(p.radius) && p.radius >= 0.0, "perturbation radius must be >= 0");
    require(p.grid >= 1, "grid steps must be >= 1");
    const std::size_t side = 2 * static_cast<std::size_t>(p.grid) + 1;
    // overflow-safe cap check
    std::size_t count = 1;
    for (std::size_t i = 0; i < dim; ++i) {
        require(count <= p.cap / side, "perturbation family exceeds the cap of " + std::to_string(p.cap));
        count *= side;
    }
    std::vector<Vec> out;
    out.reserve(count);
    for (std::size_t idx = 0; idx < count; ++idx) {
        Vec off(dim);
        std::size_t rem = idx;
        for (std::size_t a = dim; a-- > 0;) {
            const auto i = static_cast<long>(rem % side) - p.grid;
            rem /= side;
            off[a] = p.radius * static_cast<double>(i) / p.grid;
        }
        out.push_back(std::move(off));
    }
    return out;
}

/// One group per offset: the base examples with every feature vector shifted.
inline GroupedDataset perturbed_dataset(const GroupedDataset& base, const PerturbationGridParams& p) {
    require(base.groups() == 1, "adversarial grid needs a single-group base dataset");
    std::vector<std::vector<Example>> groups;
    for (const auto& off : adversarial_offsets(p, base.dim())) {
        std::vector<Example> g = base.group(0);
        for (auto& ex : g)
            for (std::size_t i = 0; i < off.size(); ++i) ex.features[i] += off[i];
        groups.push_back(std::move(g));
    }
    return GroupedDataset(base.task(), std::move(groups));
}

inline CostFamily gen_adversarial_grid(const GroupedDataset& base, const PerturbationGridParams& p) {
    return make_dataset_family(perturbed_dataset(base, p), p.loss, p.mu);
}

/// Collapses all groups into one (pooled base for perturbation families).
inline GroupedDataset pooled(const GroupedDataset& data) {
    std::vector<Example> all;
    for (const auto& g : data.all_groups()) all.insert(all.end(), g.begin(), g.end());
    return GroupedDataset(data.task(), {std::move(all)});
}

}  // namespace drolab
