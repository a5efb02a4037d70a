#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <variant>
#include <vector>

#include "warplib/clr.hpp"
#include "warplib/distribution.hpp"
#include "warplib/grid.hpp"
#include "warplib/numerics.hpp"

namespace warplib {

struct CumulativeVariance {
    double fraction = 0.95;
};
struct FixedCount {
    int m = 1;
};
struct EigenvalueFloor {
    double delta = 0.0;
};
using CutoffRule = std::variant<CumulativeVariance, FixedCount, EigenvalueFloor>;

enum class CoeffFit {
    Kde,
    Normal,
    Laplace,
    CenteredExponential,
    PiecewiseUniformSymmetric,
    Auto,
};

/// Fitted Karhunen-Loeve model of CLR-transformed warpings.
struct FpcaModel {
    Grid grid;
    ClrFunction mean;
    std::vector<std::pair<double, ClrFunction>> eigenpairs;  // decreasing lambda
    int retained_m = 0;
    std::vector<CoefficientDistribution> coeff_models;
    Eigen::MatrixXd scores;       // N x retained_m, rows follow the input order
    double total_variance = 0.0;  // trapezoid trace of the sample covariance
};

namespace detail {

inline void fix_sign_half_integral(std::vector<double>& e, double dt) {
    const int n = static_cast<int>(e.size());
    const int h = (n - 1) / 2;
    double half = 0.5 * (e[0] + e[h]) * dt;
    for (int i = 1; i < h; ++i) half += e[i] * dt;
    if (half < 0.0)
        for (double& x : e) x = -x;
}

inline CoefficientDistribution fit_kde(std::vector<double> z) {
    std::sort(z.begin(), z.end());
    double bw = silverman_bandwidth(z);
    return KdeDist{std::move(z), bw};
}

inline CoefficientDistribution fit_normal(const std::vector<double>& z) {
    double n = static_cast<double>(z.size());
    double mean = std::accumulate(z.begin(), z.end(), 0.0) / n;
    double var = 0.0;
    for (double x : z) var += (x - mean) * (x - mean);
    double sd = std::sqrt(std::max(var / (n - 1), 1e-300));
    return NormalDist{mean, sd};
}

inline CoefficientDistribution fit_laplace(const std::vector<double>& z) {
    std::vector<double> s = z;
    std::nth_element(s.begin(), s.begin() + s.size() / 2, s.end());
    double median = s[s.size() / 2];
    double mad = 0.0;
    for (double x : z) mad += std::abs(x - median);
    mad /= static_cast<double>(z.size());
    return LaplaceDist{median, std::max(mad, 1e-300)};
}

inline CoefficientDistribution fit_centered_exponential(const std::vector<double>& z) {
    double n = static_cast<double>(z.size());
    double mean = std::accumulate(z.begin(), z.end(), 0.0) / n;
    double var = 0.0, skew = 0.0;
    for (double x : z) {
        var += (x - mean) * (x - mean);
        skew += (x - mean) * (x - mean) * (x - mean);
    }
    double sd = std::sqrt(std::max(var / (n - 1), 1e-300));
    return ExponentialDist{1.0 / sd, true, skew < 0.0};
}

inline CoefficientDistribution fit_piecewise_uniform_symmetric(
    const std::vector<double>& z) {
    double lo = 1e300, hi = 0.0;
    for (double x : z) {
        lo = std::min(lo, std::abs(x));
        hi = std::max(hi, std::abs(x));
    }
    if (!(hi > lo)) {
        lo = hi * 0.5;
        hi = hi + 1e-12;
    }
    PiecewiseUniformDist d;
    d.intervals = {{-hi, -lo, 1.0}, {lo, hi, 1.0}};
    return d;
}

inline double ks_statistic(std::vector<double> z, const CoefficientDistribution& d) {
    std::sort(z.begin(), z.end());
    const double n = static_cast<double>(z.size());
    double ks = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) {
        double f = dist_cdf(d, z[i]);
        ks = std::max(ks, std::abs(f - static_cast<double>(i) / n));
        ks = std::max(ks, std::abs(static_cast<double>(i + 1) / n - f));
    }
    return ks;
}

inline CoefficientDistribution fit_coefficients(const std::vector<double>& z,
                                                CoeffFit kind) {
    switch (kind) {
        case CoeffFit::Kde:
            return fit_kde(z);
        case CoeffFit::Normal:
            return fit_normal(z);
        case CoeffFit::Laplace:
            return fit_laplace(z);
        case CoeffFit::CenteredExponential:
            return fit_centered_exponential(z);
        case CoeffFit::PiecewiseUniformSymmetric:
            return fit_piecewise_uniform_symmetric(z);
        case CoeffFit::Auto: {
            CoefficientDistribution candidates[] = {
                fit_normal(z), fit_laplace(z), fit_centered_exponential(z),
                fit_piecewise_uniform_symmetric(z)};
            double best_ks = 1e300;
            const CoefficientDistribution* best = nullptr;
            for (const auto& c : candidates) {
                double ks = ks_statistic(z, c);
                if (ks < best_ks) {
                    best_ks = ks;
                    best = &c;
                }
            }
            // reject all parametric fits at roughly the 1% KS level
            if (best_ks * std::sqrt(static_cast<double>(z.size())) > 1.63)
                return fit_kde(z);
            return *best;
        }
    }
    return fit_kde(z);
}

}  // namespace detail

/// Fit mean, eigenstructure and per-component coefficient models to observed
/// warpings in CLR space. The sample covariance uses 1/(N-1); the
/// eigenproblem is solved on the quadrature-weighted Gram matrix, which gives
/// the same nonzero spectrum as the n x n covariance operator. Accumulation
/// runs in a canonical (lexicographic) input order so the fit does not depend
/// on how the sample was ordered.
inline FpcaModel fpca_fit(const std::vector<WarpingFunction>& warpings,
                          const CutoffRule& rule,
                          const std::vector<CoeffFit>& coeff_family = {CoeffFit::Kde}) {
    const int N = static_cast<int>(warpings.size());
    if (N < 2) throw InvalidArgument("fpca_fit: need at least 2 warpings");
    const Grid grid = warpings[0].grid;
    for (const auto& g : warpings) require_same_grid(grid, g.grid, "fpca_fit");
    const int n = grid.n_points();
    const double dt = grid.dt();

    std::vector<std::vector<double>> clr(N);
    for (int i = 0; i < N; ++i) clr[i] = clr_transform(warpings[i]).values;

    std::vector<int> order(N);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&clr](int a, int b) { return clr[a] < clr[b]; });

    std::vector<double> mean(n, 0.0);
    for (int i : order)
        for (int j = 0; j < n; ++j) mean[j] += clr[i][j];
    for (double& x : mean) x /= N;

    std::vector<double> w = trapezoid_weights(n, dt);
    Eigen::VectorXd sw(n);
    for (int j = 0; j < n; ++j) sw[j] = std::sqrt(w[j]);

    // B has one weighted, centered function per row (canonical order).
    Eigen::MatrixXd b(N, n);
    for (int r = 0; r < N; ++r) {
        const auto& x = clr[order[r]];
        for (int j = 0; j < n; ++j) b(r, j) = (x[j] - mean[j]) * sw[j];
    }
    Eigen::MatrixXd gram = (b * b.transpose()) / static_cast<double>(N - 1);
    gram = 0.5 * (gram + gram.transpose().eval());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(gram);
    if (solver.info() != Eigen::Success)
        throw NumericalFailure("fpca_fit: eigen solver did not converge");

    const double total_var = gram.trace();
    std::vector<double> lambda(N);
    for (int k = 0; k < N; ++k)
        lambda[k] = std::max(0.0, solver.eigenvalues()[N - 1 - k]);

    const double rank_floor = std::max(1e-14, 1e-12 * (lambda.empty() ? 0.0 : lambda[0]));
    int rank = 0;
    while (rank < N && lambda[rank] > rank_floor) ++rank;

    int m = 0;
    if (std::holds_alternative<CumulativeVariance>(rule)) {
        double fraction = std::get<CumulativeVariance>(rule).fraction;
        if (!(fraction > 0.0 && fraction <= 1.0))
            throw InvalidArgument("CumulativeVariance fraction must be in (0,1]");
        double acc = 0.0;
        while (m < rank && acc < fraction * total_var - 1e-15) acc += lambda[m++];
    } else if (std::holds_alternative<FixedCount>(rule)) {
        int want = std::get<FixedCount>(rule).m;
        if (want < 1) throw InvalidArgument("FixedCount m must be >= 1");
        if (rank == 0)
            throw DegenerateSample("fpca_fit: zero total variance but FixedCount(" +
                                   std::to_string(want) + ") demands components");
        m = std::min(want, rank);
    } else {
        double delta = std::get<EigenvalueFloor>(rule).delta;
        if (!(delta > 0.0)) throw InvalidArgument("EigenvalueFloor delta must be > 0");
        while (m < rank && lambda[m] > delta) ++m;
    }

    FpcaModel model;
    model.grid = grid;
    model.mean = ClrFunction{grid, mean};
    model.retained_m = m;
    model.total_variance = total_var;
    model.eigenpairs.reserve(m);
    for (int k = 0; k < m; ++k) {
        Eigen::VectorXd u = solver.eigenvectors().col(N - 1 - k);
        Eigen::VectorXd v = b.transpose() * u;
        v /= std::sqrt(static_cast<double>(N - 1) * lambda[k]);
        std::vector<double> e(n);
        for (int j = 0; j < n; ++j) e[j] = v[j] / sw[j];
        detail::fix_sign_half_integral(e, dt);
        model.eigenpairs.emplace_back(lambda[k], ClrFunction{grid, std::move(e)});
    }
    // Tail eigenvalues (rank..N) are kept out of the model; the retained list
    // already carries everything the resampler needs.

    model.scores.resize(N, m);
    for (int i = 0; i < N; ++i) {
        for (int k = 0; k < m; ++k) {
            double acc = 0.0;
            const auto& e = model.eigenpairs[k].second.values;
            for (int j = 0; j < n; ++j) acc += w[j] * (clr[i][j] - mean[j]) * e[j];
            model.scores(i, k) = acc;
        }
    }

    model.coeff_models.reserve(m);
    for (int k = 0; k < m; ++k) {
        CoeffFit kind = coeff_family.empty()
                            ? CoeffFit::Kde
                            : coeff_family[std::min<std::size_t>(k, coeff_family.size() - 1)];
        std::vector<double> z(N);
        for (int i = 0; i < N; ++i) z[i] = model.scores(i, k);
        std::sort(z.begin(), z.end());  // canonical order for bit-identical models
        model.coeff_models.push_back(detail::fit_coefficients(z, kind));
    }
    return model;
}

/// Projections of clr(gamma) - mean onto the retained eigenfunctions.
inline std::vector<double> fpca_scores(const FpcaModel& model, const WarpingFunction& gamma) {
    require_same_grid(model.grid, gamma.grid, "fpca_scores");
    const int n = model.grid.n_points();
    std::vector<double> w = trapezoid_weights(n, model.grid.dt());
    std::vector<double> x = clr_transform(gamma).values;
    std::vector<double> out(model.retained_m, 0.0);
    for (int k = 0; k < model.retained_m; ++k) {
        const auto& e = model.eigenpairs[k].second.values;
        double acc = 0.0;
        for (int j = 0; j < n; ++j) acc += w[j] * (x[j] - model.mean.values[j]) * e[j];
        out[k] = acc;
    }
    return out;
}

/// Draw new warpings: X = mean + sum G_k e_k with G_k ~ fitted D_k, then map
/// back through the inverse CLR. Stream (r, k) of the seed drives draw r's
/// coefficient k, so draws are independent and reproducible.
inline std::vector<WarpingFunction> fpca_resample(const FpcaModel& model, int count,
                                                  std::uint64_t seed) {
    if (count < 0) throw InvalidArgument("fpca_resample: count must be >= 0");
    const int n = model.grid.n_points();
    std::vector<WarpingFunction> out;
    out.reserve(count);
    for (int r = 0; r < count; ++r) {
        std::vector<double> x = model.mean.values;
        for (int k = 0; k < model.retained_m; ++k) {
            CounterRng rng(seed, static_cast<std::uint64_t>(r) *
                                     (model.retained_m + 1) +
                                 static_cast<std::uint64_t>(k));
            double g = sample(model.coeff_models[k], rng);
            const auto& e = model.eigenpairs[k].second.values;
            for (int j = 0; j < n; ++j) x[j] += g * e[j];
        }
        double drift = trapezoid(x, model.grid.dt());
        for (double& v : x) v -= drift;
        out.push_back(clr_inverse(ClrFunction{model.grid, std::move(x)}));
    }
    return out;
}

}  // namespace warplib
