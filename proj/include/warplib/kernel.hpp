#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "warplib/basis.hpp"
#include "warplib/grid.hpp"
#include "warplib/numerics.hpp"

namespace warplib {

/// Variance sequence for the Mercer kernel K(s,t) = sum mu_i phi_i(s) phi_i(t).
struct KernelSpec {
    std::vector<double> mu;
    int m() const { return static_cast<int>(mu.size()); }
};

/// Dense symmetric kernel matrix K(t_i, t_j) on a grid.
struct DiscreteKernel {
    Grid grid;
    Eigen::MatrixXd matrix;
};

inline DiscreteKernel build_kernel(const KernelSpec& spec, const FourierBasis& basis) {
    if (spec.m() > basis.m)
        throw InvalidArgument("build_kernel: spec.m exceeds basis.m");
    for (double mu : spec.mu)
        if (mu < 0.0)
            throw NegativeVariance("build_kernel: mu = " + std::to_string(mu));
    const int n = basis.grid.n_points();
    Eigen::MatrixXd k = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < spec.m(); ++i) {
        Eigen::Map<const Eigen::VectorXd> phi(basis.values[i].data(), n);
        k.noalias() += spec.mu[i] * (phi * phi.transpose());
    }
    k = 0.5 * (k + k.transpose().eval());  // exact symmetry
    return DiscreteKernel{basis.grid, std::move(k)};
}

/// Discrete Mercer eigendecomposition. The integral operator is approximated
/// as W^{1/2} K W^{1/2} (W = trapezoid weights); eigenvectors are rescaled so
/// the eigenfunctions have unit trapezoid norm. Eigenvalues in (-1e-8, 0) are
/// clamped to zero; more negative ones are an error.
inline std::vector<std::pair<double, ClrFunction>> eigendecompose(
    const DiscreteKernel& kernel) {
    const int n = kernel.grid.n_points();
    const double dt = kernel.grid.dt();
    std::vector<double> w = trapezoid_weights(n, dt);
    Eigen::VectorXd sw(n);
    for (int i = 0; i < n; ++i) sw[i] = std::sqrt(w[i]);

    Eigen::MatrixXd weighted = sw.asDiagonal() * kernel.matrix * sw.asDiagonal();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(weighted);
    if (solver.info() != Eigen::Success)
        throw NumericalFailure("eigendecompose: eigen solver did not converge");

    std::vector<std::pair<double, ClrFunction>> out;
    out.reserve(n);
    for (int k = n - 1; k >= 0; --k) {  // descending order
        double lambda = solver.eigenvalues()[k];
        if (lambda < 0.0) {
            if (lambda < -1e-8)
                throw NumericalFailure("eigendecompose: eigenvalue " +
                                       std::to_string(lambda) + " below the PSD floor");
            lambda = 0.0;
        }
        std::vector<double> e(n);
        for (int i = 0; i < n; ++i) e[i] = solver.eigenvectors()(i, k) / sw[i];
        // sign convention: integral over [0, 1/2] is non-negative
        const int h = (n - 1) / 2;
        double half = 0.5 * (e[0] + e[h]) * dt;
        for (int i = 1; i < h; ++i) half += e[i] * dt;
        if (half < 0.0)
            for (double& x : e) x = -x;
        out.emplace_back(lambda, ClrFunction{kernel.grid, std::move(e)});
    }
    return out;
}

}  // namespace warplib
