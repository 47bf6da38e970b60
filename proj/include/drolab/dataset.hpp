#pragma once

#include "drolab/core.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace drolab {

enum class TaskKind { regression, classification };

inline const char* to_string(TaskKind t) {
    return t == TaskKind::regression ? "regression" : "classification";
}

struct Example {
    Vec features;
    double label = 0.0;
};

/**
 * K labeled example sets, one per subpopulation. All examples share the
 * feature dimension and the task kind; classification labels are +-1.
 */
class GroupedDataset {
public:
    GroupedDataset() = default;

    GroupedDataset(TaskKind task, std::vector<std::vector<Example>> groups)
        : task_(task), groups_(std::move(groups)) {
        require(!groups_.empty(), "dataset needs at least one group");
        require(!groups_.front().empty(), "every group must be nonempty");
        dim_ = groups_.front().front().features.size();
        require(dim_ >= 1, "feature dimension must be at least one");
        for (const auto& g : groups_) {
            require(!g.empty(), "every group must be nonempty");
            for (const auto& ex : g) {
                require(ex.features.size() == dim_, "inconsistent feature dimension");
                require(all_finite(ex.features) && std::isfinite(ex.label),
                        "dataset values must be finite");
                if (task_ == TaskKind::classification)
                    require(ex.label == 1.0 || ex.label == -1.0,
                            "classification labels must be +1 or -1");
            }
        }
    }

    TaskKind task() const noexcept { return task_; }
    std::size_t dim() const noexcept { return dim_; }
    std::size_t groups() const noexcept { return groups_.size(); }
    const std::vector<Example>& group(std::size_t k) const {
        require(k < groups_.size(), "group index out of range");
        return groups_[k];
    }
    const std::vector<std::vector<Example>>& all_groups() const noexcept { return groups_; }

    std::size_t total_size() const noexcept {
        std::size_t n = 0;
        for (const auto& g : groups_) n += g.size();
        return n;
    }

private:
    TaskKind task_ = TaskKind::classification;
    std::size_t dim_ = 0;
    std::vector<std::vector<Example>> groups_;
};

/// Shortest decimal form that round-trips a double.
inline std::string format_double(double x) {
    char buf[32];
    for (int prec = 1; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof buf, "%.*g", prec, x);
        if (std::strtod(buf, nullptr) == x) break;
    }
    return buf;
}

// CSV layout: header `group,label,f1,...,fn`, one example per row, group is
// 0-based, LF line endings.

inline void write_csv(std::ostream& out, const GroupedDataset& data) {
    out << "group,label";
    for (std::size_t j = 0; j < data.dim(); ++j) out << ",f" << (j + 1);
    out << '\n';
    for (std::size_t k = 0; k < data.groups(); ++k) {
        for (const auto& ex : data.group(k)) {
            out << k << ',' << format_double(ex.label);
            for (double f : ex.features) out << ',' << format_double(f);
            out << '\n';
        }
    }
}

inline void write_csv(const std::string& path, const GroupedDataset& data) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    write_csv(out, data);
    if (!out) throw std::runtime_error("failed writing " + path);
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

inline double parse_number(const std::string& s, std::size_t row) {
    std::size_t pos = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &pos);
    } catch (const std::exception&) {
        throw ContractViolation("row " + std::to_string(row) + ": not a number: '" + s + "'");
    }
    if (pos != s.size())
        throw ContractViolation("row " + std::to_string(row) + ": trailing characters in '" + s + "'");
    return v;
}

}  // namespace detail

/**
 * Reads a grouped dataset. When `task` is empty the kind is inferred:
 * classification if every label is exactly +-1, regression otherwise.
 * Group ids must form the range 0..K-1 with every group present.
 */
inline GroupedDataset read_csv(std::istream& in, std::optional<TaskKind> task = std::nullopt) {
    std::string line;
    if (!std::getline(in, line)) throw ContractViolation("empty dataset file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto header = detail::split_csv_line(line);
    require(header.size() >= 3 && header[0] == "group" && header[1] == "label",
            "dataset header must be group,label,f1,...,fn");
    const std::size_t n = header.size() - 2;

    std::vector<std::vector<Example>> groups;
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto cells = detail::split_csv_line(line);
        require(cells.size() == n + 2,
                "row " + std::to_string(row) + ": expected " + std::to_string(n + 2) + " columns");
        const double g = detail::parse_number(cells[0], row);
        require(g >= 0 && g == std::floor(g) && g < 1e6,
                "row " + std::to_string(row) + ": group must be a nonnegative integer");
        const auto k = static_cast<std::size_t>(g);
        if (groups.size() <= k) groups.resize(k + 1);
        Example ex;
        ex.label = detail::parse_number(cells[1], row);
        ex.features.reserve(n);
        for (std::size_t j = 0; j < n; ++j) ex.features.push_back(detail::parse_number(cells[j + 2], row));
        groups[k].push_back(std::move(ex));
    }
    for (std::size_t k = 0; k < groups.size(); ++k)
        require(!groups[k].empty(), "group " + std::to_string(k) + " has no examples");

    if (!task) {
        bool pm1 = true;
        for (const auto& g : groups)
            for (const auto& ex : g) pm1 = pm1 && (ex.label == 1.0 || ex.label == -1.0);
        task = pm1 ? TaskKind::classification : TaskKind::regression;
    }
    return GroupedDataset(*task, std::move(groups));
}

inline GroupedDataset read_csv(const std::string& path, std::optional<TaskKind> task = std::nullopt) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    return read_csv(in, task);
}

}  // namespace drolab
