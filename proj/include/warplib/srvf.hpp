#pragma once

#include <cmath>
#include <vector>

#include "warplib/grid.hpp"
#include "warplib/numerics.hpp"

namespace warplib {

/// Square-root velocity function q = f' / sqrt(|f'|).
struct SrvfFunction {
    Grid grid;
    std::vector<double> values;
};

/// Flat segments (|f'| < derivative floor) map to q = 0.
inline SrvfFunction srvf(const RealFunction& f) {
    std::vector<double> d = discrete_derivative(f.values, f.grid.dt());
    std::vector<double> q(d.size());
    for (std::size_t i = 0; i < d.size(); ++i)
        q[i] = std::abs(d[i]) < kDerivativeFloor ? 0.0 : d[i] / std::sqrt(std::abs(d[i]));
    return SrvfFunction{f.grid, std::move(q)};
}

/// Group action (q, gamma) = sqrt(gamma') q(gamma). q at off-grid points is
/// linearly interpolated.
inline SrvfFunction srvf_warp(const SrvfFunction& q, const WarpingFunction& gamma) {
    require_same_grid(q.grid, gamma.grid, "srvf_warp");
    std::vector<double> gd = discrete_derivative(gamma.values, gamma.grid.dt());
    std::vector<double> out(q.values.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        double slope = std::max(gd[i], 0.0);
        out[i] = std::sqrt(slope) * interp_linear(q.values, gamma.values[i]);
    }
    return SrvfFunction{q.grid, std::move(out)};
}

inline double srvf_norm(const SrvfFunction& q) {
    return l2_norm(q.values, q.grid.dt());
}

}  // namespace warplib
