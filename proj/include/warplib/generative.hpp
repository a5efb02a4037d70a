#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "warplib/basis.hpp"
#include "warplib/clr.hpp"
#include "warplib/distribution.hpp"
#include "warplib/grid.hpp"

namespace warplib {

/// Truncated second-order process X_m = sum_i G_i phi_i with user-chosen
/// coefficient distributions; the warping is clr_inverse(X_m).
struct GenerativeSpec {
    FourierBasis basis;
    std::vector<CoefficientDistribution> coeff_dists;

    int m() const { return static_cast<int>(coeff_dists.size()); }
};

inline GenerativeSpec make_generative_spec(FourierBasis basis,
                                           std::vector<CoefficientDistribution> dists) {
    if (static_cast<int>(dists.size()) != basis.m)
        throw InvalidArgument("GenerativeSpec: coefficient count != basis.m");
    for (const auto& d : dists) {
        validate(d);
        double mean = dist_mean(d);
        double tol = 1e-9;
        if (std::holds_alternative<KdeDist>(d)) {
            const auto& k = std::get<KdeDist>(d);
            double sd = std::sqrt(dist_variance(d));
            tol = 4.0 * sd / std::sqrt(static_cast<double>(k.samples.size())) + 1e-9;
        }
        if (std::abs(mean) > tol)
            throw InvalidArgument("GenerativeSpec: coefficient distribution mean " +
                                  std::to_string(mean) + " is not zero");
    }
    return GenerativeSpec{std::move(basis), std::move(dists)};
}

/// One draw of X_m(t) = sum G_i phi_i(t). Stream i of the seed drives G_i.
inline ClrFunction sample_clr(const GenerativeSpec& spec, std::uint64_t seed) {
    const int n = spec.basis.grid.n_points();
    std::vector<double> x(n, 0.0);
    for (int i = 0; i < spec.m(); ++i) {
        CounterRng rng(seed, static_cast<std::uint64_t>(i));
        double g = sample(spec.coeff_dists[i], rng);
        const auto& phi = spec.basis.values[i];
        for (int j = 0; j < n; ++j) x[j] += g * phi[j];
    }
    // Fourier combinations integrate to ~0; re-center to kill quadrature drift.
    double mean = trapezoid(x, spec.basis.grid.dt());
    for (double& v : x) v -= mean;
    return ClrFunction{spec.basis.grid, std::move(x)};
}

inline WarpingFunction sample_warping(const GenerativeSpec& spec, std::uint64_t seed) {
    return clr_inverse(sample_clr(spec, seed));
}

/// The five coefficient choices of the generative illustration:
///   a: N(0, 1/i^2)   b: La(0, 1/(sqrt(2) i))   c: U(-sqrt(3)/i, sqrt(3)/i)
///   d: N(0, 1/(2i)^2)   e: N(0, 1/(5i)^2)
inline GenerativeSpec scenario_spec(char scenario, Grid grid, int m = 20) {
    FourierBasis basis = make_fourier_basis(grid, m);
    std::vector<CoefficientDistribution> dists;
    dists.reserve(m);
    for (int i = 1; i <= m; ++i) {
        const double di = static_cast<double>(i);
        switch (scenario) {
            case 'a':
                dists.push_back(NormalDist{0.0, 1.0 / di});
                break;
            case 'b':
                dists.push_back(LaplaceDist{0.0, 1.0 / (std::numbers::sqrt2 * di)});
                break;
            case 'c':
                dists.push_back(UniformDist{-std::numbers::sqrt3 / di,
                                            std::numbers::sqrt3 / di});
                break;
            case 'd':
                dists.push_back(NormalDist{0.0, 1.0 / (2.0 * di)});
                break;
            case 'e':
                dists.push_back(NormalDist{0.0, 1.0 / (5.0 * di)});
                break;
            default:
                throw InvalidArgument("scenario must be one of a..e, got '" +
                                      std::string(1, scenario) + "'");
        }
    }
    return make_generative_spec(std::move(basis), std::move(dists));
}

}  // namespace warplib
