// dro-lab command line: generate scenarios, train ERM / Lagrangian DRO,
// estimate calibration baselines, verify solutions, run the recommendation
// pipeline.
//
// Exit codes: 0 success, 2 config or I/O error, 3 numerical divergence,
// 4 verification failure.

#include "drolab/drolab.hpp"
#include "drolab/report.hpp"

#include <algorithm>
#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using namespace drolab;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitDivergence = 3;
constexpr int kExitVerify = 4;

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// --- config file ----------------------------------------------------------

// JSON config: top-level keys are long flag names (max_outer and max-outer
// both work). Global flags apply to the
// app; any other flat key, and the object stored under the active
// subcommand's name, apply to that subcommand.
class JsonConfig : public CLI::Config {
public:
    explicit JsonConfig(std::string active) : active_(std::move(active)) {}

    std::string to_config(const CLI::App*, bool, bool, std::string) const override { return "{}"; }

    std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
        json j;
        try {
            j = json::parse(input);
        } catch (const json::parse_error& e) {
            throw CLI::ConversionError(std::string("config file is not valid JSON: ") + e.what());
        }
        if (!j.is_object()) throw CLI::ConversionError("config file must hold a JSON object");
        std::vector<CLI::ConfigItem> items;
        for (const auto& [key, value] : j.items()) {
            if (value.is_object()) {
                if (key != active_) continue;
                for (const auto& [k2, v2] : value.items()) items.push_back(item({active_}, k2, v2));
            } else if (is_global(key) || active_.empty()) {
                items.push_back(item({}, key, value));
            } else {
                items.push_back(item({active_}, key, value));
            }
        }
        return items;
    }

private:
    static bool is_global(const std::string& k) { return k == "seed" || k == "out" || k == "quiet"; }

    static std::string scalar(const json& v) {
        if (v.is_string()) return v.get<std::string>();
        if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
        return v.dump();
    }

    static CLI::ConfigItem item(std::vector<std::string> parents, const std::string& name, const json& v) {
        CLI::ConfigItem it;
        it.parents = std::move(parents);
        it.name = name;
        std::replace(it.name.begin(), it.name.end(), '_', '-');
        if (v.is_array()) {
            std::string joined;
            for (const auto& e : v) joined += (joined.empty() ? "" : ",") + scalar(e);
            it.inputs.push_back(joined);
        } else {
            it.inputs.push_back(scalar(v));
        }
        return it;
    }

    std::string active_;
};

// --- helpers --------------------------------------------------------------

double parse_real(const std::string& s) {
    if (s == "inf" || s == "+inf" || s == "infinity") return std::numeric_limits<double>::infinity();
    std::size_t pos = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &pos);
    } catch (const std::exception&) {
        throw ContractViolation("not a number: '" + s + "'");
    }
    if (pos != s.size()) throw ContractViolation("not a number: '" + s + "'");
    return v;
}

Vec parse_list(const std::string& s) {
    Vec out;
    std::stringstream ss(s);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        cell.erase(0, cell.find_first_not_of(" \t"));
        cell.erase(cell.find_last_not_of(" \t") + 1);
        if (!cell.empty()) out.push_back(parse_real(cell));
    }
    require(!out.empty(), "empty list '" + s + "'");
    return out;
}

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) throw IoError("cannot create output directory " + dir);
}

std::string out_path(const std::string& dir, const std::string& file) { return (fs::path(dir) / file).string(); }

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    out << text;
    if (!out) throw IoError("failed writing " + path);
}

void write_json(const std::string& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

GroupedDataset load_dataset(const std::string& path) {
    if (!fs::exists(path)) throw IoError("dataset not found: " + path);
    try {
        return read_csv(path);
    } catch (const ContractViolation& e) {
        throw ContractViolation(path + ": " + e.what());
    }
}

json dataset_json(const std::string& path, const GroupedDataset& d) {
    json sizes = json::array();
    for (std::size_t k = 0; k < d.groups(); ++k) sizes.push_back(d.group(k).size());
    return {{"path", path}, {"groups", d.groups()}, {"sizes", sizes}, {"dim", d.dim()}, {"task", to_string(d.task())}};
}

// --- effective configuration ------------------------------------------------

struct Globals {
    std::uint64_t seed = 7;
    std::string out = ".";
    bool quiet = false;
};

struct DroFlags {
    std::string beta = "5";
    double epsilon = 1e-4;
    int max_outer = 500;
    double step = 0.1;
    int inner_iters = 200;
    bool no_backtracking = false;
    double grad_tol = 1e-12;
    bool unscaled_stop = false;

    void add(CLI::App* sub) {
        sub->add_option("--beta", beta, "temperature (number or inf)")->capture_default_str();
        sub->add_option("--epsilon", epsilon, "stopping threshold")->capture_default_str();
        sub->add_option("--max-outer", max_outer, "outer iteration cap")->capture_default_str();
        sub->add_option("--step", step, "descent step size")->capture_default_str();
        sub->add_option("--inner-iters", inner_iters, "descent iterations per outer step")->capture_default_str();
        sub->add_flag("--no-backtracking", no_backtracking, "fixed-step descent");
        sub->add_option("--grad-tol", grad_tol, "descent gradient-norm stop")->capture_default_str();
        sub->add_flag("--unscaled-stop", unscaled_stop, "stop when max|lambda-delta| < epsilon");
    }

    DroConfig resolve(std::uint64_t seed) const {
        DroConfig c;
        c.beta = parse_real(beta);
        c.epsilon = epsilon;
        c.max_outer = max_outer;
        c.inner.step = step;
        c.inner.iterations = inner_iters;
        c.inner.backtracking = !no_backtracking;
        c.inner.grad_tol = grad_tol;
        c.scaled_stop = !unscaled_stop;
        c.seed = seed;
        c.validate();
        return c;
    }
};

struct ModelFlags {
    std::string data;
    std::string family;
    std::string loss = "hinge";
    double mu = -1.0;  // < 0: 1e-2 for hinge, 0 otherwise
    double cost_epsilon = 0.05;

    double resolved_mu(LossKind l) const {
        if (mu >= 0.0) return mu;
        return l == LossKind::hinge ? 1e-2 : 0.0;
    }
};

struct Loaded {
    CostFamily family;
    std::optional<GroupedDataset> data;
    json source;
};

Loaded load_family(const ModelFlags& m) {
    require(m.data.empty() != m.family.empty(), "give exactly one of --data or --family");
    if (!m.family.empty()) {
        require(m.family == "counterexample", "unknown family '" + m.family + "' (expected counterexample)");
        return {make_counterexample_family(m.cost_epsilon), std::nullopt,
                {{"family", "counterexample"}, {"epsilon", m.cost_epsilon}}};
    }
    const LossKind loss = parse_loss(m.loss);
    auto data = load_dataset(m.data);
    const double mu = m.resolved_mu(loss);
    json src = {{"dataset", dataset_json(m.data, data)}, {"loss", to_string(loss)}, {"mu", mu}};
    auto fam = make_dataset_family(data, loss, mu);
    return {std::move(fam), std::move(data), std::move(src)};
}

json run_skeleton(const std::string& command, json config) {
    return {{"schema", kSchemaVersion}, {"command", command}, {"config", std::move(config)}};
}

json accuracy_json(const std::optional<GroupedDataset>& data, const Vec& w) {
    if (!data || data->task() != TaskKind::classification) return nullptr;
    return group_accuracies(*data, w);
}

// --- commands ---------------------------------------------------------------

struct GenerateFlags {
    std::string scenario;
    TwoPopulationParams two_pop;
    PerturbationGridParams grid;
    std::string base;
    std::string loss = "hinge";
};

int cmd_generate(const Globals& g, GenerateFlags f) {
    require(f.scenario == "two-pop" || f.scenario == "adversarial",
            "unknown scenario '" + f.scenario + "' (expected two-pop or adversarial)");
    f.two_pop.seed = g.seed;
    f.two_pop.validate();
    ensure_dir(g.out);

    GroupedDataset data;
    json params;
    if (f.scenario == "two-pop") {
        data = gen_two_population(f.two_pop);
        params = to_json(f.two_pop);
    } else {
        f.grid.loss = parse_loss(f.loss);
        const GroupedDataset base = f.base.empty() ? pooled(gen_two_population(f.two_pop)) : pooled(load_dataset(f.base));
        data = perturbed_dataset(base, f.grid);
        params = to_json(f.grid);
        params["base"] = f.base.empty() ? json(to_json(f.two_pop)) : json(f.base);
        json offsets = json::array();
        for (const auto& o : adversarial_offsets(f.grid, base.dim())) offsets.push_back(o);
        params["offsets"] = offsets;
    }
    const std::string csv = out_path(g.out, f.scenario + ".csv");
    std::ostringstream os;
    write_csv(os, data);
    write_text(csv, os.str());
    json doc = run_skeleton("generate", params);
    doc["dataset"] = dataset_json(csv, data);
    write_json(out_path(g.out, f.scenario + ".params.json"), doc);
    std::cout << csv << '\n';
    return kExitOk;
}

struct TrainFlags {
    ModelFlags model;
    DroFlags dro;
    std::string mode = "dro";
    std::string calibration = "zero";
    std::string alpha_grid = "0,0.05,0.1,0.25,0.5,1";
    double split = 0.7;
    double size_adjust = 0.0;
    std::string w0;
    std::string name = "run";
};

CalibrationVector resolve_calibration(const TrainFlags& f, const Loaded& l, std::uint64_t seed, json& doc) {
    const std::size_t k = l.family.groups();
    json block = {{"source", f.calibration}};
    CalibrationVector r;
    if (f.calibration == "zero") {
        r = CalibrationVector::zeros(k);
    } else if (f.calibration == "estimate") {
        require(l.data.has_value(), "--calibration estimate needs a dataset");
        const Vec grid = parse_list(f.alpha_grid);
        BaselineOptions opt;
        opt.mu = l.family.mu();
        json baselines = json::array();
        Vec rv;
        for (std::size_t i = 0; i < k; ++i) {
            auto b = estimate_baseline(*l.data, i, l.family.loss(), grid, f.split, seed, opt);
            rv.push_back(b.r_star);
            baselines.push_back(to_json(b));
        }
        doc["baselines"] = baselines;
        r = CalibrationVector(rv);
    } else {
        r = CalibrationVector(parse_list(f.calibration));
        require(r.size() == k, "explicit calibration needs " + std::to_string(k) + " values");
    }
    if (f.size_adjust != 0.0) {
        require(l.data.has_value(), "--size-adjust needs a dataset");
        std::vector<std::size_t> counts;
        for (std::size_t i = 0; i < k; ++i) counts.push_back(l.data->group(i).size());
        r = size_adjusted(r, counts, f.size_adjust);
    }
    block["r"] = r.r;
    block["size_adjustment"] = f.size_adjust;
    doc["calibration"] = block;
    return r;
}

Vec initial_w(const std::string& spec, std::size_t dim) {
    if (spec.empty()) return Vec(dim, 0.0);
    Vec w = parse_list(spec);
    if (w.size() == 1 && dim > 1) w.assign(dim, w[0]);
    require(w.size() == dim, "--w0 needs " + std::to_string(dim) + " values");
    return w;
}

int cmd_train(const Globals& g, const TrainFlags& f) {
    require(f.mode == "erm" || f.mode == "dro", "mode must be erm or dro");
    const Loaded l = load_family(f.model);
    const DroConfig cfg = f.dro.resolve(g.seed);
    const Vec w0 = initial_w(f.w0, l.family.dim());
    ensure_dir(g.out);

    json config = {{"mode", f.mode}, {"source", l.source}, {"dro", to_json(cfg)}, {"w0", w0}, {"name", f.name},
                   {"calibration", f.calibration}, {"alpha_grid", f.alpha_grid}, {"split", f.split}};
    json doc = run_skeleton("train", config);
    doc["mode"] = f.mode;

    const std::string base = out_path(g.out, f.name);
    if (f.mode == "erm") {
        const SimplexWeights lam = l.data ? pooled_weights(*l.data) : SimplexWeights::uniform(l.family.groups());
        const Vec w = descend(l.family, lam, w0, cfg.inner);
        const Vec c = group_costs(l.family, w);
        doc["trajectory"] = json::array();
        doc["final"] = final_json(w, lam.values(), c, CalibrationVector::zeros(c.size()));
        doc["final"]["accuracy"] = accuracy_json(l.data, w);
        doc["final"]["objective"] = *std::max_element(c.begin(), c.end());
        doc["converged"] = nullptr;
        doc["outer_iterations"] = 0;
        doc["refusal"] = nullptr;
        write_json(base + ".json", doc);
        if (!g.quiet) std::cout << base << ".json\n";
        return kExitOk;
    }

    const CalibrationVector r = resolve_calibration(f, l, g.seed, doc);
    const DroSolution sol = lagrangian_dro(l.family, r, cfg, w0);
    doc["trajectory"] = trajectory_json(sol);
    doc["final"] = final_json(sol.w_final, sol.lambda_final.values(), sol.costs_final, r);
    doc["final"]["accuracy"] = accuracy_json(l.data, sol.w_final);
    doc["final"]["objective"] = sol.objective(r);
    doc["converged"] = sol.converged;
    doc["outer_iterations"] = sol.outer_iterations;
    doc["refusal"] = nullptr;
    write_json(base + ".json", doc);

    std::ostringstream traj;
    write_trajectory_csv(traj, sol, l.family.groups());
    write_text(base + ".trajectory.csv", traj.str());

    if (l.family.dim() == 1 && l.family.groups() == 2) {
        const auto map = landscape_scan_1d(
            l.family, {SimplexWeights::one_hot(2, 0), SimplexWeights::one_hot(2, 1), sol.lambda_final}, -3.0, 3.0, 601);
        std::ostringstream land;
        write_landscape_csv(land, map);
        write_text(base + ".landscape.csv", land.str());
    }
    if (!g.quiet) {
        std::cout << base << ".json\n";
        if (!sol.converged) std::cout << "note: stopping rule did not fire within " << cfg.max_outer << " outer iterations\n";
    }
    return kExitOk;
}

struct CalibrateFlags {
    ModelFlags model;
    std::string group = "all";
    std::string alpha_grid = "0,0.05,0.1,0.25,0.5,1";
    double split = 0.7;
    std::string name = "calibration";
};

int cmd_calibrate(const Globals& g, const CalibrateFlags& f) {
    require(!f.model.data.empty(), "calibrate needs --data");
    const LossKind loss = parse_loss(f.model.loss);
    const auto data = load_dataset(f.model.data);
    const Vec grid = parse_list(f.alpha_grid);
    BaselineOptions opt;
    opt.mu = f.model.resolved_mu(loss);
    std::vector<std::size_t> groups;
    if (f.group == "all") {
        for (std::size_t k = 0; k < data.groups(); ++k) groups.push_back(k);
    } else {
        const double k = parse_real(f.group);
        require(k >= 0 && k == std::floor(k) && k < static_cast<double>(data.groups()), "--group out of range");
        groups.push_back(static_cast<std::size_t>(k));
    }
    ensure_dir(g.out);
    json config = {{"source", {{"dataset", dataset_json(f.model.data, data)}, {"loss", to_string(loss)}, {"mu", opt.mu}}},
                   {"alpha_grid", grid}, {"split", f.split}, {"seed", g.seed}, {"inner", to_json(opt.inner)}};
    json doc = run_skeleton("calibrate", config);
    json baselines = json::array();
    for (std::size_t k : groups) baselines.push_back(to_json(estimate_baseline(data, k, loss, grid, f.split, g.seed, opt)));
    doc["baselines"] = baselines;
    const std::string path = out_path(g.out, f.name + ".json");
    write_json(path, doc);
    if (!g.quiet) std::cout << path << '\n';
    return kExitOk;
}

struct VerifyFlags {
    std::string run;
    std::string family;
    double at = 0.0;
    double cost_epsilon = 0.05;
    double tol = 1e-4;
    std::string radii = "1e-3,1e-2";
    int samples = 200;
    double converse_tol = 1e-8;
    int grid_resolution = 0;
    double agree_tol = 1e-3;
    std::string name = "verify";
};

int cmd_verify(const Globals& g, const VerifyFlags& f) {
    require(f.run.empty() != f.family.empty(), "give exactly one of --run or --family");
    const Vec radii = parse_list(f.radii);
    json checks = json::object();
    std::vector<std::string> failures;
    json config = {{"tol", f.tol}, {"radii", radii}, {"samples", f.samples}, {"converse_tol", f.converse_tol},
                   {"agree_tol", f.agree_tol}, {"seed", g.seed}};
    std::optional<LandscapeMap> landscape;

    if (!f.family.empty()) {
        require(f.family == "counterexample", "unknown family '" + f.family + "' (expected counterexample)");
        const auto fam = make_counterexample_family(f.cost_epsilon);
        const Vec w{f.at};
        config["source"] = {{"family", "counterexample"}, {"epsilon", f.cost_epsilon}, {"at", f.at}};
        const auto st = check_stationarity(fam, w, f.tol, g.seed);
        checks["stationarity"] = to_json(st);
        if (!st.is_stationary) failures.push_back("stationarity");
        const auto cv = check_converse(fam, w, radii, f.samples, g.seed, f.converse_tol);
        checks["converse"] = to_json(cv);
        if (!cv.passed) failures.push_back("converse");
        std::vector<SimplexWeights> grid;
        for (double l2 : {0.0, 0.5, 0.75, 0.875, 1.0}) grid.push_back(SimplexWeights(Vec{1.0 - l2, l2}));
        landscape = landscape_scan_1d(fam, grid, -3.0, 3.0, 6001);
        checks["landscape"] = to_json(*landscape);
        if (!landscape->left_min_threshold) failures.push_back("landscape");
    } else {
        if (!fs::exists(f.run)) throw IoError("run file not found: " + f.run);
        json run;
        try {
            std::ifstream in(f.run);
            run = json::parse(in);
        } catch (const json::parse_error& e) {
            throw IoError("cannot parse run file " + f.run + ": " + e.what());
        }
        require(run.value("schema", "") == kSchemaVersion, "run file is not a dro-lab/1 document");
        require(run.value("command", "") == "train", "verify --run expects a train run document");
        const json& src = run.at("config").at("source");
        ModelFlags m;
        if (src.contains("family")) {
            m.family = src.at("family").get<std::string>();
            m.cost_epsilon = src.at("epsilon").get<double>();
        } else {
            m.data = src.at("dataset").at("path").get<std::string>();
            m.loss = src.at("loss").get<std::string>();
            m.mu = src.at("mu").get<double>();
        }
        const Loaded l = load_family(m);
        const Vec w = run.at("final").at("w").get<Vec>();
        const CalibrationVector r(run.at("final").at("calibration").get<Vec>());
        require(w.size() == l.family.dim() && r.size() == l.family.groups(), "run file does not match its family");
        config["source"] = {{"run", f.run}};

        if (l.family.smooth()) {
            const auto st = check_stationarity(l.family, w, f.tol, g.seed);
            checks["stationarity"] = to_json(st);
            if (!st.is_stationary) failures.push_back("stationarity");
        } else {
            checks["stationarity"] = {{"skipped", "nondifferentiable loss"}};
        }
        const auto cv = check_converse(l.family, w, radii, f.samples, g.seed, f.converse_tol);
        checks["converse"] = to_json(cv);
        if (!cv.passed) failures.push_back("converse");

        const std::size_t k = l.family.groups();
        if (run.value("mode", "") == "dro" && l.family.convex() && (k == 2 || k == 3)) {
            const int res = f.grid_resolution > 0 ? f.grid_resolution : (k == 2 ? 2001 : 101);
            const DescentConfig inner{0.5, 2000, true, 1e-4, 40, 1e-5};
            const auto dual = dual_grid_oracle(l.family, r, res, inner);
            const Vec c = group_costs(l.family, w);
            double objective = -std::numeric_limits<double>::infinity();
            for (std::size_t i = 0; i < k; ++i) objective = std::max(objective, c[i] - r[i]);
            json d = to_json(dual);
            d["grid_resolution"] = res;
            d["primal_objective"] = objective;
            d["difference"] = std::abs(objective - dual.value);
            d["agrees"] = std::abs(objective - dual.value) <= f.agree_tol;
            if (!d["agrees"].get<bool>()) failures.push_back("dual");
            checks["dual"] = d;
        }
        if (l.family.dim() == 1 && k == 2) {
            landscape = landscape_scan_1d(l.family, {SimplexWeights::uniform(2)}, -3.0, 3.0, 6001);
            checks["landscape"] = to_json(*landscape);
        }
    }

    ensure_dir(g.out);
    json doc = run_skeleton("verify", config);
    doc["verify"] = checks;
    doc["failures"] = failures;
    doc["passed"] = failures.empty();
    const std::string base = out_path(g.out, f.name);
    write_json(base + ".json", doc);
    if (landscape) {
        std::ostringstream os;
        write_landscape_csv(os, *landscape);
        write_text(base + ".landscape.csv", os.str());
    }
    if (!g.quiet) std::cout << base << ".json\n";
    if (!failures.empty()) {
        std::cerr << "verification failed:";
        for (const auto& s : failures) std::cerr << ' ' << s;
        std::cerr << '\n';
        return kExitVerify;
    }
    return kExitOk;
}

struct RecommendFlags {
    ModelFlags model;
    DroFlags dro;
    std::string accept = "inf";
    std::string alpha_grid = "0,0.05,0.1,0.25,0.5,1";
    double split = 0.7;
    double size_adjust = 0.0;
    std::string name = "recommend";
};

int cmd_recommend(const Globals& g, const RecommendFlags& f) {
    require(!f.model.data.empty(), "recommend needs --data");
    const LossKind loss = parse_loss(f.model.loss);
    const auto data = load_dataset(f.model.data);
    const DroConfig cfg = f.dro.resolve(g.seed);
    Vec accept = parse_list(f.accept);
    if (accept.size() == 1) accept.assign(data.groups(), accept[0]);
    require(accept.size() == data.groups(), "--accept needs one bound or one per group");

    RecommendationOptions opt;
    opt.alpha_grid = parse_list(f.alpha_grid);
    opt.split_ratio = f.split;
    opt.baseline.mu = f.model.resolved_mu(loss);
    opt.size_adjustment = f.size_adjust;
    ensure_dir(g.out);

    json acc = json::array();
    for (double a : accept) acc.push_back(number_or_inf(a));
    json config = {{"source", {{"dataset", dataset_json(f.model.data, data)}, {"loss", to_string(loss)}, {"mu", opt.baseline.mu}}},
                   {"dro", to_json(cfg)}, {"acceptability", acc}, {"alpha_grid", opt.alpha_grid},
                   {"split", opt.split_ratio}, {"size_adjustment", opt.size_adjustment}};
    json doc = run_skeleton("recommend", config);

    const auto rep = recommend_pipeline(data, loss, accept, cfg, opt);
    json baselines = json::array();
    for (const auto& b : rep.baselines) baselines.push_back(to_json(b));
    doc["baselines"] = baselines;
    doc["calibration"] = {{"source", "estimate"}, {"r", rep.calibration.r}};
    if (rep.refused()) {
        doc["trajectory"] = json::array();
        doc["final"] = nullptr;
        doc["converged"] = nullptr;
        doc["outer_iterations"] = 0;
        doc["refusal"] = rep.refused_groups;
    } else {
        const auto& sol = *rep.solution;
        doc["trajectory"] = trajectory_json(sol);
        json fin = final_json(sol.w_final, sol.lambda_final.values(), sol.costs_final, rep.calibration);
        fin["validation_costs"] = rep.validation_costs;
        fin["validation_shortfalls"] = rep.shortfalls;
        fin["floor_margins"] = rep.floor_margins;
        fin["accuracy"] = accuracy_json(data, sol.w_final);
        fin["objective"] = sol.objective(rep.calibration);
        doc["final"] = fin;
        doc["converged"] = sol.converged;
        doc["outer_iterations"] = sol.outer_iterations;
        doc["refusal"] = nullptr;
    }
    const std::string path = out_path(g.out, f.name + ".json");
    write_json(path, doc);
    if (!g.quiet) {
        std::cout << path << '\n';
        if (rep.refused()) {
            std::cout << "refused: r* above the acceptability bound for group(s)";
            for (auto k : rep.refused_groups) std::cout << ' ' << k;
            std::cout << '\n';
        }
    }
    return kExitOk;
}

void add_model_flags(CLI::App* sub, ModelFlags& m, bool allow_family) {
    sub->add_option("--data", m.data, "grouped dataset CSV");
    if (allow_family) {
        sub->add_option("--family", m.family, "analytic family (counterexample)");
        sub->add_option("--cost-epsilon", m.cost_epsilon, "counterexample curvature eps")->capture_default_str();
    }
    sub->add_option("--loss", m.loss, "squared | logistic | hinge")->capture_default_str();
    sub->add_option("--mu", m.mu, "L2 strength (default 1e-2 for hinge, 0 otherwise)");
}

std::string active_subcommand(int argc, char** argv, const std::vector<std::string>& names) {
    for (int i = 1; i < argc; ++i)
        if (std::find(names.begin(), names.end(), argv[i]) != names.end()) return argv[i];
    return {};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"dro-lab: calibrated distributionally robust optimization toolkit"};
    app.require_subcommand(1);
    const std::vector<std::string> names{"generate", "train", "calibrate", "verify", "recommend"};
    app.config_formatter(std::make_shared<JsonConfig>(active_subcommand(argc, argv, names)));
    app.set_config("--config", "", "JSON config file (flags override it)");
    app.allow_config_extras(CLI::config_extras_mode::error);

    Globals g;
    app.add_option("--seed", g.seed, "random seed")->capture_default_str();
    app.add_option("-o,--out", g.out, "output directory")->capture_default_str();
    app.add_flag("--quiet", g.quiet, "suppress informational output");

    GenerateFlags gen;
    auto* sg = app.add_subcommand("generate", "write a scenario dataset and its params");
    sg->add_option("scenario", gen.scenario, "two-pop | adversarial")->required();
    sg->add_option("--n-majority", gen.two_pop.n_majority)->capture_default_str();
    sg->add_option("--n-minority", gen.two_pop.n_minority)->capture_default_str();
    sg->add_option("--margin", gen.two_pop.margin)->capture_default_str();
    sg->add_option("--rotation", gen.two_pop.rotation, "radians")->capture_default_str();
    sg->add_option("--noise", gen.two_pop.noise)->capture_default_str();
    sg->add_option("--spread", gen.two_pop.spread)->capture_default_str();
    sg->add_option("--positive-fraction", gen.two_pop.positive_fraction)->capture_default_str();
    sg->add_option("--base", gen.base, "single-group base CSV for adversarial (default: pooled two-pop)");
    sg->add_option("--radius", gen.grid.radius, "l-inf radius kappa")->capture_default_str();
    sg->add_option("--grid", gen.grid.grid, "offset steps per side")->capture_default_str();
    sg->add_option("--cap", gen.grid.cap, "family size cap")->capture_default_str();
    sg->add_option("--loss", gen.loss, "loss recorded for the adversarial family")->capture_default_str();

    TrainFlags tr;
    auto* st = app.add_subcommand("train", "ERM or Lagrangian DRO training");
    add_model_flags(st, tr.model, true);
    tr.dro.add(st);
    st->add_option("--mode", tr.mode, "erm | dro")->capture_default_str();
    st->add_option("--calibration", tr.calibration, "zero | estimate | comma list")->capture_default_str();
    st->add_option("--alpha-grid", tr.alpha_grid)->capture_default_str();
    st->add_option("--split", tr.split, "training fraction for baselines")->capture_default_str();
    st->add_option("--size-adjust", tr.size_adjust, "c_adj in r_k - c_adj/sqrt(n_k)")->capture_default_str();
    st->add_option("--w0", tr.w0, "initial parameters (comma list)");
    st->add_option("--name", tr.name, "output basename")->capture_default_str();

    CalibrateFlags ca;
    auto* sc = app.add_subcommand("calibrate", "estimate per-group baselines r*");
    add_model_flags(sc, ca.model, false);
    sc->add_option("--group", ca.group, "group index or all")->capture_default_str();
    sc->add_option("--alpha-grid", ca.alpha_grid)->capture_default_str();
    sc->add_option("--split", ca.split)->capture_default_str();
    sc->add_option("--name", ca.name)->capture_default_str();

    VerifyFlags ve;
    auto* sv = app.add_subcommand("verify", "check stationarity, converse and duality");
    sv->add_option("--run", ve.run, "train run JSON");
    sv->add_option("--family", ve.family, "analytic family (counterexample)");
    sv->add_option("--at", ve.at, "point to check for --family")->capture_default_str();
    sv->add_option("--cost-epsilon", ve.cost_epsilon)->capture_default_str();
    sv->add_option("--tol", ve.tol, "stationarity tolerance")->capture_default_str();
    sv->add_option("--radii", ve.radii)->capture_default_str();
    sv->add_option("--samples", ve.samples)->capture_default_str();
    sv->add_option("--converse-tol", ve.converse_tol)->capture_default_str();
    sv->add_option("--grid-resolution", ve.grid_resolution, "dual grid (0: 2001 for K=2, 101 for K=3)");
    sv->add_option("--agree-tol", ve.agree_tol)->capture_default_str();
    sv->add_option("--name", ve.name)->capture_default_str();

    RecommendFlags rc;
    auto* sr = app.add_subcommand("recommend", "baselines, acceptability gate, calibrated DRO");
    add_model_flags(sr, rc.model, false);
    rc.dro.add(sr);
    sr->add_option("--accept", rc.accept, "per-group max acceptable r* (one value or list)")->capture_default_str();
    sr->add_option("--alpha-grid", rc.alpha_grid)->capture_default_str();
    sr->add_option("--split", rc.split)->capture_default_str();
    sr->add_option("--size-adjust", rc.size_adjust)->capture_default_str();
    sr->add_option("--name", rc.name)->capture_default_str();

    for (auto* sub : {sg, st, sc, sv, sr}) sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ConfigError& e) {
        const std::string prefix = "INI was not able to parse ";
        std::string msg = e.what();
        if (msg.rfind(prefix, 0) == 0) msg = "unknown config key: " + msg.substr(prefix.size());
        std::cerr << "error: " << msg << "\n";
        return kExitConfig;
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitConfig;
    }

    try {
        if (*sg) return cmd_generate(g, gen);
        if (*st) return cmd_train(g, tr);
        if (*sc) return cmd_calibrate(g, ca);
        if (*sv) return cmd_verify(g, ve);
        if (*sr) return cmd_recommend(g, rc);
    } catch (const DivergenceError& e) {
        std::cerr << "error: divergence: " << e.what() << '\n';
        return kExitDivergence;
    } catch (const ContractViolation& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const json::exception& e) {
        std::cerr << "error: malformed JSON input: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitConfig;
    }
    return kExitConfig;
}
