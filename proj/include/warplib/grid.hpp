#pragma once

#include <cmath>
#include <cstddef>
#include <utility>
#include <vector>

#include "warplib/errors.hpp"

namespace warplib {

// Discrete derivatives below this are treated as a monotonicity violation.
inline constexpr double kDerivativeFloor = 1e-8;
// sup|h| guard before exponentiation.
inline constexpr double kExpOverflowGuard = 700.0;

/// Uniform grid t_i = i/(n_points-1) on [0,1].
class Grid {
public:
    Grid() = default;
    explicit Grid(int n_points) : n_(n_points) {
        if (n_points < 3)
            throw InvalidArgument("Grid needs n_points >= 3, got " +
                                  std::to_string(n_points));
    }

    int n_points() const { return n_; }
    double dt() const { return 1.0 / (n_ - 1); }
    double point(int i) const { return static_cast<double>(i) / (n_ - 1); }

    std::vector<double> points() const {
        std::vector<double> t(n_);
        for (int i = 0; i < n_; ++i) t[i] = point(i);
        return t;
    }

    friend bool operator==(const Grid& a, const Grid& b) { return a.n_ == b.n_; }
    friend bool operator!=(const Grid& a, const Grid& b) { return a.n_ != b.n_; }

private:
    int n_ = 0;
};

inline void require_same_grid(const Grid& a, const Grid& b, const char* where) {
    if (a != b)
        throw GridMismatch(std::string(where) + ": grids differ (" +
                           std::to_string(a.n_points()) + " vs " +
                           std::to_string(b.n_points()) + " points)");
}

/// Sampled real-valued function on a Grid. No constraints beyond finiteness.
struct RealFunction {
    Grid grid;
    std::vector<double> values;

    RealFunction() = default;
    RealFunction(Grid g, std::vector<double> v) : grid(g), values(std::move(v)) {
        if (static_cast<int>(values.size()) != grid.n_points())
            throw InvalidArgument("RealFunction: value count != grid size");
        for (double x : values)
            if (!std::isfinite(x))
                throw InvalidArgument("RealFunction: non-finite value");
    }
};

/// Zero-integral function, element of H(0,1) on a grid. Use make_clr_function
/// to validate; the default constructor leaves an empty object.
struct ClrFunction {
    Grid grid;
    std::vector<double> values;
};

/// Strictly increasing boundary-fixed function, element of Gamma_1 on a grid.
struct WarpingFunction {
    Grid grid;
    std::vector<double> values;
};

namespace detail {
inline double trapezoid_raw(const std::vector<double>& v, double dt) {
    double s = 0.5 * (v.front() + v.back());
    for (std::size_t i = 1; i + 1 < v.size(); ++i) s += v[i];
    return s * dt;
}
}  // namespace detail

inline ClrFunction make_clr_function(Grid grid, std::vector<double> values,
                                     double zero_integral_tol = 1e-10) {
    if (static_cast<int>(values.size()) != grid.n_points())
        throw InvalidArgument("ClrFunction: value count != grid size");
    for (double x : values)
        if (!std::isfinite(x)) throw InvalidArgument("ClrFunction: non-finite value");
    double integral = detail::trapezoid_raw(values, grid.dt());
    if (std::abs(integral) > zero_integral_tol)
        throw InvalidArgument("ClrFunction: trapezoid integral " +
                              std::to_string(integral) + " exceeds tolerance");
    return ClrFunction{grid, std::move(values)};
}

inline WarpingFunction make_warping_function(Grid grid, std::vector<double> values) {
    if (static_cast<int>(values.size()) != grid.n_points())
        throw InvalidArgument("WarpingFunction: value count != grid size");
    if (values.front() != 0.0 || values.back() != 1.0)
        throw NonMonotone("WarpingFunction: endpoints must be exactly 0 and 1");
    const double dt = grid.dt();
    for (std::size_t i = 0; i + 1 < values.size(); ++i) {
        double slope = (values[i + 1] - values[i]) / dt;
        if (!(slope > kDerivativeFloor) || !std::isfinite(slope))
            throw NonMonotone("WarpingFunction: discrete derivative " +
                              std::to_string(slope) + " at index " +
                              std::to_string(i));
    }
    return WarpingFunction{grid, std::move(values)};
}

inline WarpingFunction identity_warping(Grid grid) {
    std::vector<double> v(grid.n_points());
    for (int i = 0; i < grid.n_points(); ++i) v[i] = grid.point(i);
    v.front() = 0.0;
    v.back() = 1.0;
    return WarpingFunction{grid, std::move(v)};
}

}  // namespace warplib
