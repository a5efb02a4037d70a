#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "warplib/grid.hpp"
#include "warplib/numerics.hpp"

namespace warplib {

/// Centered log-ratio transform h = log(gamma') - integral(log(gamma')).
/// Maps Gamma_1 isometrically onto the zero-integral subspace of L2.
inline ClrFunction clr_transform(const WarpingFunction& gamma) {
    const double dt = gamma.grid.dt();
    std::vector<double> deriv = derivative_highorder(gamma.values, dt);
    std::vector<double> h(deriv.size());
    for (std::size_t i = 0; i < deriv.size(); ++i) {
        if (!(deriv[i] > kDerivativeFloor))
            throw NonMonotone("clr_transform: derivative " + std::to_string(deriv[i]) +
                              " at index " + std::to_string(i));
        h[i] = std::log(deriv[i]);
    }
    const double mean = trapezoid(h, dt);
    for (double& x : h) x -= mean;
    return ClrFunction{gamma.grid, std::move(h)};
}

/// Inverse CLR: gamma(t) = int_0^t exp(h) / int_0^1 exp(h). Endpoints are
/// snapped to exactly 0 and 1 after the cumulative quadrature.
inline WarpingFunction clr_inverse(const ClrFunction& h) {
    if (sup_norm(h.values) > kExpOverflowGuard)
        throw NumericalFailure("clr_inverse: sup|h| exceeds the exp overflow guard");
    const double dt = h.grid.dt();
    std::vector<double> e(h.values.size());
    for (std::size_t i = 0; i < e.size(); ++i) e[i] = std::exp(h.values[i]);
    std::vector<double> gamma = cumulative_trapezoid_corrected(e, dt);
    const double total = gamma.back();
    for (double& x : gamma) x /= total;
    gamma.front() = 0.0;
    gamma.back() = 1.0;
    return make_warping_function(h.grid, std::move(gamma));
}

/// Group perturbation f (+) g: densities multiply, then renormalize.
inline WarpingFunction warp_perturb(const WarpingFunction& f, const WarpingFunction& g) {
    require_same_grid(f.grid, g.grid, "warp_perturb");
    ClrFunction hf = clr_transform(f);
    ClrFunction hg = clr_transform(g);
    for (std::size_t i = 0; i < hf.values.size(); ++i) hf.values[i] += hg.values[i];
    return clr_inverse(hf);
}

/// Power operation alpha (.) f: density raised to alpha, renormalized.
inline WarpingFunction warp_power(double alpha, const WarpingFunction& f) {
    ClrFunction h = clr_transform(f);
    if (std::abs(alpha) * sup_norm(h.values) > kExpOverflowGuard)
        throw NumericalFailure("warp_power: |alpha|*sup|clr(f)| exceeds the overflow guard");
    for (double& x : h.values) x *= alpha;
    return clr_inverse(h);
}

/// Inner product on Gamma_1: <clr(f), clr(g)> in L2.
inline double warp_inner(const WarpingFunction& f, const WarpingFunction& g) {
    require_same_grid(f.grid, g.grid, "warp_inner");
    ClrFunction hf = clr_transform(f);
    ClrFunction hg = clr_transform(g);
    return trapezoid_inner(hf.values, hg.values, f.grid.dt());
}

inline double warp_norm(const WarpingFunction& f) {
    return std::sqrt(std::max(0.0, warp_inner(f, f)));
}

}  // namespace warplib
