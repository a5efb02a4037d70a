#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "test_support.hpp"
#include "warplib/basis.hpp"
#include "warplib/kernel.hpp"
#include "warplib/numerics.hpp"

using namespace warplib;

namespace {
const Grid kGrid(1001);
}

TEST_CASE("fourier basis point values", "[basis]") {
    FourierBasis b1 = make_fourier_basis(kGrid, 1);
    CHECK(b1.values[0][250] == Catch::Approx(std::numbers::sqrt2).margin(1e-12));

    FourierBasis b2 = make_fourier_basis(kGrid, 2);
    CHECK(b2.values[1][0] == Catch::Approx(std::numbers::sqrt2).margin(1e-12));
}

TEST_CASE("fourier basis is orthonormal with zero integrals", "[basis]") {
    FourierBasis basis = make_fourier_basis(kGrid, 8);
    const double dt = kGrid.dt();
    for (int i = 0; i < basis.m; ++i) {
        CHECK(std::abs(trapezoid(basis.values[i], dt)) < 1e-9);
        CHECK(trapezoid_inner(basis.values[i], basis.values[i], dt) ==
              Catch::Approx(1.0).margin(1e-6));
        for (int j = 0; j < i; ++j)
            CHECK(std::abs(trapezoid_inner(basis.values[i], basis.values[j], dt)) < 1e-6);
    }
}

TEST_CASE("build_kernel point value and zero kernel", "[kernel]") {
    FourierBasis basis = make_fourier_basis(kGrid, 2);
    DiscreteKernel k = build_kernel(KernelSpec{{1.0, 0.25}}, basis);
    // K(0,0) = 1*2*sin^2(0) + 0.25*2*cos^2(0) = 0.5
    CHECK(k.matrix(0, 0) == Catch::Approx(0.5).margin(1e-12));

    DiscreteKernel zero = build_kernel(KernelSpec{{0.0, 0.0}}, basis);
    CHECK(zero.matrix.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("build_kernel rejects negative variances", "[kernel]") {
    FourierBasis basis = make_fourier_basis(kGrid, 2);
    CHECK_THROWS_AS(build_kernel(KernelSpec{{1.0, -0.1}}, basis), NegativeVariance);
}

TEST_CASE("mercer trace identity", "[kernel]") {
    const int m = 20;
    FourierBasis basis = make_fourier_basis(kGrid, m);
    KernelSpec spec;
    double mu_sum = 0.0;
    for (int i = 1; i <= m; ++i) {
        spec.mu.push_back(1.0 / (static_cast<double>(i) * i));
        mu_sum += spec.mu.back();
    }
    DiscreteKernel k = build_kernel(spec, basis);
    std::vector<double> w = trapezoid_weights(kGrid.n_points(), kGrid.dt());
    double trace = 0.0;
    for (int i = 0; i < kGrid.n_points(); ++i) trace += w[i] * k.matrix(i, i);
    CHECK(trace == Catch::Approx(mu_sum).epsilon(0.01));
}

TEST_CASE("eigendecompose recovers sorted variances", "[kernel]") {
    const Grid grid(401);
    FourierBasis basis = make_fourier_basis(grid, 4);
    // deliberately unsorted mu
    KernelSpec spec{{0.25, 1.0, 0.06125, 0.5}};
    DiscreteKernel k = build_kernel(spec, basis);
    auto pairs = eigendecompose(k);
    REQUIRE(pairs.size() >= 4);
    CHECK(pairs[0].first == Catch::Approx(1.0).epsilon(1e-4));
    CHECK(pairs[1].first == Catch::Approx(0.5).epsilon(1e-4));
    CHECK(pairs[2].first == Catch::Approx(0.25).epsilon(1e-4));
    CHECK(pairs[3].first == Catch::Approx(0.06125).epsilon(1e-4));
    for (std::size_t i = 0; i + 1 < pairs.size(); ++i)
        CHECK(pairs[i].first >= pairs[i + 1].first);
}

TEST_CASE("eigendecompose rank-one and zero kernels", "[kernel]") {
    const Grid grid(401);
    FourierBasis basis = make_fourier_basis(grid, 1);
    DiscreteKernel k = build_kernel(KernelSpec{{1.0}}, basis);
    auto pairs = eigendecompose(k);
    CHECK(pairs[0].first == Catch::Approx(1.0).epsilon(1e-4));
    CHECK(pairs[1].first <= 1e-8);

    DiscreteKernel zero = build_kernel(KernelSpec{{0.0}}, basis);
    for (const auto& [lambda, e] : eigendecompose(zero)) CHECK(lambda <= 1e-12);
}

TEST_CASE("eigendecomposition reconstructs the kernel", "[kernel]") {
    const Grid grid(201);
    FourierBasis basis = make_fourier_basis(grid, 6);
    KernelSpec spec{{1.0, 0.5, 0.25, 0.125, 0.0625, 0.03125}};
    DiscreteKernel k = build_kernel(spec, basis);
    auto pairs = eigendecompose(k);
    Eigen::MatrixXd rebuilt = Eigen::MatrixXd::Zero(grid.n_points(), grid.n_points());
    for (const auto& [lambda, e] : pairs) {
        Eigen::Map<const Eigen::VectorXd> v(e.values.data(), grid.n_points());
        rebuilt += lambda * (v * v.transpose());
    }
    CHECK((rebuilt - k.matrix).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("eigenfunctions are orthonormal and zero-integral", "[kernel]") {
    const Grid grid(401);
    FourierBasis basis = make_fourier_basis(grid, 5);
    KernelSpec spec{{1.0, 0.8, 0.6, 0.4, 0.2}};
    auto pairs = eigendecompose(build_kernel(spec, basis));
    const double dt = grid.dt();
    for (int i = 0; i < 5; ++i) {
        CHECK(std::abs(trapezoid(pairs[i].second.values, dt)) < 1e-6);
        for (int j = 0; j <= i; ++j) {
            double ip = trapezoid_inner(pairs[i].second.values, pairs[j].second.values, dt);
            CHECK(ip == Catch::Approx(i == j ? 1.0 : 0.0).margin(1e-6));
        }
    }
}

TEST_CASE("sorted variances recovered for random permutations", "[kernel]") {
    const Grid grid(201);
    FourierBasis basis = make_fourier_basis(grid, 6);
    std::vector<double> mu{0.9, 0.1, 0.7, 0.3, 0.5, 0.2};
    auto pairs = eigendecompose(build_kernel(KernelSpec{mu}, basis));
    std::sort(mu.rbegin(), mu.rend());
    for (std::size_t i = 0; i < mu.size(); ++i)
        CHECK(pairs[i].first == Catch::Approx(mu[i]).epsilon(1e-3));
}
