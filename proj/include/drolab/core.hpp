#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace drolab {

using Vec = std::vector<double>;

/// Tolerance used when accepting caller-supplied mixture weights.
inline constexpr double kSimplexTol = 1e-9;

/// Raised when a caller violates a documented precondition
/// (dimension mismatch, index out of range, invalid configuration).
class ContractViolation : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Raised when an iteration produces a non-finite cost or gradient.
class DivergenceError : public std::runtime_error {
public:
    DivergenceError(const std::string& what, long iteration)
        : std::runtime_error(what + " (iteration " + std::to_string(iteration) + ")"),
          iteration_(iteration) {}

    long iteration() const noexcept { return iteration_; }

private:
    long iteration_;
};

/// Raised by oracles that only support small problem sizes.
class UnsupportedSize : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw ContractViolation(msg);
}

inline double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

inline bool all_finite(std::span<const double> a) {
    return std::all_of(a.begin(), a.end(), [](double x) { return std::isfinite(x); });
}

// y += alpha * x
inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
    for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

/**
 * Mixture coefficients on the probability simplex.
 *
 * Construction validates nonnegativity and the unit sum (within a
 * tolerance), clamps tiny negative round-off to zero and renormalizes, so
 * every instance satisfies |sum - 1| <= 1e-12.
 */
class SimplexWeights {
public:
    SimplexWeights() = default;

    explicit SimplexWeights(Vec values, double tol = kSimplexTol) : values_(std::move(values)) {
        require(!values_.empty(), "simplex weights must be nonempty");
        double sum = 0.0;
        for (double& v : values_) {
            require(std::isfinite(v), "simplex weights must be finite");
            require(v >= -tol, "simplex weight below zero");
            if (v < 0.0) v = 0.0;
            sum += v;
        }
        require(std::abs(sum - 1.0) <= tol, "simplex weights must sum to one");
        for (double& v : values_) v /= sum;
    }

    static SimplexWeights uniform(std::size_t k) {
        require(k >= 1, "simplex needs at least one coordinate");
        return SimplexWeights(Vec(k, 1.0 / static_cast<double>(k)));
    }

    static SimplexWeights one_hot(std::size_t k, std::size_t hot) {
        require(hot < k, "one-hot index out of range");
        Vec v(k, 0.0);
        v[hot] = 1.0;
        return SimplexWeights(std::move(v));
    }

    /// Normalizes arbitrary nonnegative masses (at least one positive).
    static SimplexWeights normalized(Vec masses) {
        double sum = 0.0;
        for (double m : masses) {
            require(std::isfinite(m) && m >= 0.0, "masses must be finite and nonnegative");
            sum += m;
        }
        require(sum > 0.0, "masses must not all be zero");
        for (double& m : masses) m /= sum;
        return SimplexWeights(std::move(masses));
    }

    std::size_t size() const noexcept { return values_.size(); }
    double operator[](std::size_t i) const { return values_[i]; }
    const Vec& values() const noexcept { return values_; }
    std::span<const double> span() const noexcept { return values_; }

    friend bool operator==(const SimplexWeights&, const SimplexWeights&) = default;

private:
    Vec values_;
};

/// Per-group calibration offsets r_k, in cost units.
struct CalibrationVector {
    Vec r;

    CalibrationVector() = default;
    explicit CalibrationVector(Vec values) : r(std::move(values)) {
        require(all_finite(r), "calibration entries must be finite");
    }

    static CalibrationVector zeros(std::size_t k) { return CalibrationVector(Vec(k, 0.0)); }

    std::size_t size() const noexcept { return r.size(); }
    double operator[](std::size_t i) const { return r[i]; }
};

}  // namespace drolab
