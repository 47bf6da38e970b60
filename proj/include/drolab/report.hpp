#pragma once

// JSON and CSV emission for runs, baselines and verification reports.
// Run documents follow the "dro-lab/1" schema (docs/dro-lab-1.schema.json).

#include "drolab/dro.hpp"
#include "drolab/scenarios.hpp"
#include "drolab/verify.hpp"

#include <json.hpp>

#include <ostream>

namespace drolab {

using json = nlohmann::ordered_json;

inline constexpr const char* kSchemaVersion = "dro-lab/1";

/// Finite doubles as numbers, infinities as "inf" / "-inf".
inline json number_or_inf(double x) {
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    return x;
}

inline double parse_number_or_inf(const json& j) {
    if (j.is_string()) {
        const auto s = j.get<std::string>();
        if (s == "inf" || s == "+inf") return std::numeric_limits<double>::infinity();
        if (s == "-inf") return -std::numeric_limits<double>::infinity();
        throw ContractViolation("expected a number or \"inf\", got \"" + s + "\"");
    }
    return j.get<double>();
}

inline json to_json(const DescentConfig& c) {
    return {{"step", c.step},           {"iterations", c.iterations}, {"backtracking", c.backtracking},
            {"armijo", c.armijo},       {"max_halvings", c.max_halvings}, {"grad_tol", c.grad_tol}};
}

inline json to_json(const DroConfig& c) {
    return {{"beta", number_or_inf(c.beta)}, {"epsilon", c.epsilon}, {"max_outer", c.max_outer},
            {"scaled_stop", c.scaled_stop},  {"seed", c.seed},       {"inner", to_json(c.inner)}};
}

inline json to_json(const TwoPopulationParams& p) {
    return {{"scenario", "two-pop"},  {"n_majority", p.n_majority}, {"n_minority", p.n_minority},
            {"margin", p.margin},     {"rotation", p.rotation},     {"noise", p.noise},
            {"spread", p.spread},     {"positive_fraction", p.positive_fraction}, {"seed", p.seed}};
}

inline json to_json(const PerturbationGridParams& p) {
    return {{"scenario", "adversarial"}, {"radius", p.radius}, {"grid", p.grid},
            {"cap", p.cap},             {"loss", to_string(p.loss)}, {"mu", p.mu}};
}

inline json trajectory_json(const DroSolution& s) {
    json arr = json::array();
    for (const auto& rec : s.trajectory)
        arr.push_back({{"t", rec.t}, {"lambda", rec.lambda}, {"delta", rec.delta}, {"costs", rec.costs},
                       {"mix_cost", rec.mix_cost}});
    return arr;
}

inline json to_json(const BaselineReport& b) {
    json grid = json::array();
    for (const auto& p : b.alpha_grid) grid.push_back({{"alpha", p.alpha}, {"validation_cost", p.validation_cost}});
    return {{"k", b.k},
            {"r_star", b.r_star},
            {"alpha_star", b.alpha_star},
            {"alpha_grid", grid},
            {"w_star", b.w_star},
            {"train_floor", b.train_floor},
            {"n_train", b.n_train},
            {"n_validation", b.n_validation},
            {"split_ratio", b.split_ratio},
            {"seed", b.seed}};
}

inline json to_json(const StationarityReport& s) {
    return {{"lambda_star", s.lambda_star.values()},
            {"min_norm", s.min_norm},
            {"tol", s.tol},
            {"is_stationary", s.is_stationary},
            {"curvature_class", to_string(s.curvature)},
            {"curvature_values", s.curvature_values},
            {"approximate", s.approximate}};
}

inline json to_json(const ConverseReport& c) {
    return {{"n_samples", c.n_samples}, {"radii", c.radii},   {"min_observed", c.min_observed},
            {"tol", c.tol},             {"passed", c.passed}, {"worst_radius", c.worst_radius}};
}

inline json to_json(const DualGridResult& d) {
    return {{"lambda", d.lambda.values()}, {"w", d.w}, {"value", d.value}, {"grid_points", d.grid_points}};
}

inline json to_json(const LandscapeMap& m) {
    json curves = json::array();
    for (const auto& c : m.curves) curves.push_back({{"lambda", c.lambda.values()}, {"local_minima", c.local_minima}});
    json out = {{"w_range", {m.w.front(), m.w.back()}}, {"n_points", m.w.size()}, {"curves", curves}};
    out["left_min_threshold"] = m.left_min_threshold ? json(*m.left_min_threshold) : json(nullptr);
    return out;
}

/// `final` block: parameters, weights, costs and (when given) shortfalls c_k - r_k.
inline json final_json(const Vec& w, const Vec& lambda, const Vec& costs, const CalibrationVector& r) {
    Vec shortfalls(costs.size());
    for (std::size_t k = 0; k < costs.size(); ++k) shortfalls[k] = costs[k] - r[k];
    return {{"w", w}, {"lambda", lambda}, {"costs", costs}, {"calibration", r.r}, {"shortfalls", shortfalls}};
}

/// Per-iteration CSV: t,lambda_1..K,delta_1..K,c_1..K,mix_cost
inline void write_trajectory_csv(std::ostream& out, const DroSolution& s, std::size_t k) {
    out << "t";
    for (const char* name : {"lambda", "delta", "c"})
        for (std::size_t i = 1; i <= k; ++i) out << ',' << name << '_' << i;
    out << ",mix_cost\n";
    for (const auto& rec : s.trajectory) {
        out << rec.t;
        for (const Vec* v : {&rec.lambda, &rec.delta, &rec.costs})
            for (double x : *v) out << ',' << format_double(x);
        out << ',' << format_double(rec.mix_cost) << '\n';
    }
}

/// Landscape curves as CSV: w, then one column per lambda in the map.
inline void write_landscape_csv(std::ostream& out, const LandscapeMap& m) {
    out << "w";
    for (std::size_t c = 0; c < m.curves.size(); ++c) {
        out << ",mix";
        for (double l : m.curves[c].lambda.values()) out << '_' << format_double(l);
    }
    out << '\n';
    for (std::size_t i = 0; i < m.w.size(); ++i) {
        out << format_double(m.w[i]);
        for (const auto& c : m.curves) out << ',' << format_double(c.costs[i]);
        out << '\n';
    }
}

}  // namespace drolab
