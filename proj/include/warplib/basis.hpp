#pragma once

#include <cmath>
#include <numbers>
#include <vector>

#include "warplib/grid.hpp"

namespace warplib {

/// Bounded Fourier orthonormal system of the zero-integral space E(0,1):
/// phi_{2j-1} = sqrt(2) sin(2j pi t), phi_{2j} = sqrt(2) cos(2j pi t).
struct FourierBasis {
    Grid grid;
    int m = 0;
    std::vector<std::vector<double>> values;  // m rows, one per basis function
};

inline FourierBasis make_fourier_basis(Grid grid, int m) {
    if (m < 1) throw InvalidArgument("make_fourier_basis: m must be >= 1");
    FourierBasis basis{grid, m, {}};
    basis.values.reserve(m);
    const double sqrt2 = std::numbers::sqrt2;
    for (int k = 1; k <= m; ++k) {
        const int j = (k + 1) / 2;  // frequency index
        std::vector<double> row(grid.n_points());
        for (int i = 0; i < grid.n_points(); ++i) {
            double arg = 2.0 * j * std::numbers::pi * grid.point(i);
            row[i] = (k % 2 == 1) ? sqrt2 * std::sin(arg) : sqrt2 * std::cos(arg);
        }
        basis.values.push_back(std::move(row));
    }
    return basis;
}

}  // namespace warplib
