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
#include "warplib/grid.hpp"
#include "warplib/numerics.hpp"
#include "warplib/rng.hpp"

namespace warplib {

/// Sample mean on Gamma_1: inverse CLR of the pointwise average of CLRs.
inline WarpingFunction warp_mean(const std::vector<WarpingFunction>& warpings) {
    if (warpings.empty()) throw InvalidArgument("warp_mean: empty sample");
    const Grid grid = warpings[0].grid;
    const int n = grid.n_points();
    std::vector<double> acc(n, 0.0);
    for (const auto& g : warpings) {
        require_same_grid(grid, g.grid, "warp_mean");
        std::vector<double> h = clr_transform(g).values;
        for (int j = 0; j < n; ++j) acc[j] += h[j];
    }
    for (double& x : acc) x /= static_cast<double>(warpings.size());
    double drift = trapezoid(acc, grid.dt());
    for (double& x : acc) x -= drift;
    return clr_inverse(ClrFunction{grid, std::move(acc)});
}

struct AnovaResult {
    double l2_stat = 0.0;
    double f_stat = 0.0;
    double p_l2 = 1.0;
    double p_f = 1.0;
    int n_boot = 0;
    std::uint64_t seed = 0;
};

namespace inf_detail {

struct AnovaStats {
    double l2 = 0.0;
    double f = 0.0;
};

// Reorder rows so the statistics are accumulated in a canonical order:
// members sorted within each group, groups sorted by their member lists.
// Floating-point sums then come out bit-identical under reordering and
// relabeling.
inline void canonicalize_groups(std::vector<std::vector<double>>& rows,
                                std::vector<int>& sizes) {
    std::vector<std::vector<std::vector<double>>> groups;
    int offset = 0;
    for (int sz : sizes) {
        std::vector<std::vector<double>> g(rows.begin() + offset,
                                           rows.begin() + offset + sz);
        std::sort(g.begin(), g.end());
        groups.push_back(std::move(g));
        offset += sz;
    }
    std::sort(groups.begin(), groups.end());
    rows.clear();
    sizes.clear();
    for (auto& g : groups) {
        sizes.push_back(static_cast<int>(g.size()));
        for (auto& r : g) rows.push_back(std::move(r));
    }
}

// SSR/SSE main-effects statistics on already-transformed rows.
inline AnovaStats anova_statistics(const std::vector<std::vector<double>>& rows,
                                   const std::vector<int>& sizes, double dt) {
    const int n = static_cast<int>(rows[0].size());
    const int k = static_cast<int>(sizes.size());
    const int total = static_cast<int>(rows.size());
    std::vector<double> grand(n, 0.0);
    for (const auto& r : rows)
        for (int j = 0; j < n; ++j) grand[j] += r[j];
    for (double& x : grand) x /= total;

    std::vector<double> ssr(n, 0.0), sse(n, 0.0);
    int offset = 0;
    for (int g = 0; g < k; ++g) {
        std::vector<double> mean(n, 0.0);
        for (int i = 0; i < sizes[g]; ++i)
            for (int j = 0; j < n; ++j) mean[j] += rows[offset + i][j];
        for (double& x : mean) x /= sizes[g];
        for (int j = 0; j < n; ++j) {
            double d = mean[j] - grand[j];
            ssr[j] += sizes[g] * d * d;
        }
        for (int i = 0; i < sizes[g]; ++i)
            for (int j = 0; j < n; ++j) {
                double d = rows[offset + i][j] - mean[j];
                sse[j] += d * d;
            }
        offset += sizes[g];
    }
    AnovaStats out;
    out.l2 = trapezoid(ssr, dt);
    double sse_total = trapezoid(sse, dt);
    double denom = sse_total / (total - k);
    out.f = denom > 0.0 ? (out.l2 / (k - 1)) / denom : 0.0;
    return out;
}

}  // namespace inf_detail

/// Bootstrap fANOVA of group mean equality on CLR-transformed warpings.
/// The null distribution resamples pooled group-centered residuals with
/// replacement. The resampler canonicalizes group order (sizes sorted) and
/// residual order (lexicographic), so p-values do not depend on how groups
/// or members were listed.
inline AnovaResult fanova_test(const std::vector<std::vector<WarpingFunction>>& groups,
                               int n_boot, std::uint64_t seed) {
    if (groups.size() < 2)
        throw TooFewGroups("fanova_test: need k >= 2 groups, got " +
                           std::to_string(groups.size()));
    for (const auto& g : groups)
        if (g.size() < 2)
            throw TooFewGroups("fanova_test: every group needs >= 2 members");
    if (n_boot < 1) throw InvalidArgument("fanova_test: n_boot must be >= 1");

    const Grid grid = groups[0][0].grid;
    const int n = grid.n_points();
    const double dt = grid.dt();

    std::vector<std::vector<double>> rows;
    std::vector<int> sizes;
    for (const auto& g : groups) {
        sizes.push_back(static_cast<int>(g.size()));
        for (const auto& wf : g) {
            require_same_grid(grid, wf.grid, "fanova_test");
            rows.push_back(clr_transform(wf).values);
        }
    }
    const int total = static_cast<int>(rows.size());
    inf_detail::canonicalize_groups(rows, sizes);
    inf_detail::AnovaStats observed = inf_detail::anova_statistics(rows, sizes, dt);

    // pooled group-centered residuals + grand mean, in canonical order; the
    // sqrt(n_i/(n_i-1)) factor undoes the variance shrinkage of centering
    std::vector<double> grand(n, 0.0);
    for (const auto& r : rows)
        for (int j = 0; j < n; ++j) grand[j] += r[j];
    for (double& x : grand) x /= total;

    std::vector<std::vector<double>> residuals;
    residuals.reserve(total);
    int offset = 0;
    for (int g = 0; g < static_cast<int>(sizes.size()); ++g) {
        std::vector<double> mean(n, 0.0);
        for (int i = 0; i < sizes[g]; ++i)
            for (int j = 0; j < n; ++j) mean[j] += rows[offset + i][j];
        for (double& x : mean) x /= sizes[g];
        double inflate = std::sqrt(sizes[g] / (sizes[g] - 1.0));
        for (int i = 0; i < sizes[g]; ++i) {
            std::vector<double> res(n);
            for (int j = 0; j < n; ++j)
                res[j] = inflate * (rows[offset + i][j] - mean[j]);
            residuals.push_back(std::move(res));
        }
        offset += sizes[g];
    }
    std::sort(residuals.begin(), residuals.end());
    std::vector<int> canon_sizes = sizes;

    int exceed_l2 = 0, exceed_f = 0;
    std::vector<std::vector<double>> boot_rows(total, std::vector<double>(n));
    for (int b = 0; b < n_boot; ++b) {
        CounterRng rng(seed, static_cast<std::uint64_t>(b));
        for (int i = 0; i < total; ++i) {
            auto idx = static_cast<std::size_t>(rng.uniform() * total);
            if (idx >= residuals.size()) idx = residuals.size() - 1;
            for (int j = 0; j < n; ++j)
                boot_rows[i][j] = grand[j] + residuals[idx][j];
        }
        inf_detail::AnovaStats s =
            inf_detail::anova_statistics(boot_rows, canon_sizes, dt);
        if (s.l2 >= observed.l2) ++exceed_l2;
        if (s.f >= observed.f) ++exceed_f;
    }

    AnovaResult out;
    out.l2_stat = observed.l2;
    out.f_stat = observed.f;
    out.p_l2 = (1.0 + exceed_l2) / (n_boot + 1.0);
    out.p_f = (1.0 + exceed_f) / (n_boot + 1.0);
    out.n_boot = n_boot;
    out.seed = seed;
    return out;
}

struct IdentityLink {};
struct LogisticLink {};
using RegressionLink = std::variant<IdentityLink, LogisticLink>;

/// Functional regression with CLR-transformed warpings as the predictor.
/// beta lives in the span of the predictors' fPCA eigenfunctions; alpha is
/// reported in the <f, beta> parameterization (not the centered-score one).
struct FunctionalRegressionModel {
    double alpha = 0.0;
    ClrFunction beta;
    int basis_dim = 0;
    RegressionLink link;
    Eigen::VectorXd basis_coefs;  // coefficients of beta in the score basis
    bool converged = true;
    bool separation_flag = false;
};

namespace inf_detail {

struct PredictorPca {
    std::vector<double> mean;
    std::vector<std::vector<double>> eigenfunctions;
};

// fPCA of raw predictor functions (no zero-integral requirement, so the
// machinery stays usable for shifted inputs).
inline PredictorPca predictor_pca(const std::vector<std::vector<double>>& x, int dim,
                                  const Grid& grid) {
    const int n = grid.n_points();
    const int count = static_cast<int>(x.size());
    const double dt = grid.dt();
    PredictorPca out;
    out.mean.assign(n, 0.0);
    for (const auto& row : x)
        for (int j = 0; j < n; ++j) out.mean[j] += row[j];
    for (double& v : out.mean) v /= count;

    std::vector<double> w = trapezoid_weights(n, dt);
    Eigen::VectorXd sw(n);
    for (int j = 0; j < n; ++j) sw[j] = std::sqrt(w[j]);
    Eigen::MatrixXd b(count, n);
    for (int i = 0; i < count; ++i)
        for (int j = 0; j < n; ++j) b(i, j) = (x[i][j] - out.mean[j]) * sw[j];
    Eigen::MatrixXd gram = (b * b.transpose()) / static_cast<double>(count - 1);
    gram = 0.5 * (gram + gram.transpose().eval());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(gram);
    if (solver.info() != Eigen::Success)
        throw NumericalFailure("predictor_pca: eigen solver did not converge");
    for (int k = 0; k < dim; ++k) {
        double lambda = solver.eigenvalues()[count - 1 - k];
        if (lambda <= 1e-14)
            throw RankDeficient("regression: fewer informative components than basis_dim");
        Eigen::VectorXd v = b.transpose() * solver.eigenvectors().col(count - 1 - k);
        v /= std::sqrt(static_cast<double>(count - 1) * lambda);
        std::vector<double> e(n);
        for (int j = 0; j < n; ++j) e[j] = v[j] / sw[j];
        const int h = (n - 1) / 2;
        double half = 0.5 * (e[0] + e[h]) * dt;
        for (int i = 1; i < h; ++i) half += e[i] * dt;
        if (half < 0.0)
            for (double& val : e) val = -val;
        out.eigenfunctions.push_back(std::move(e));
    }
    return out;
}

inline Eigen::MatrixXd score_design(const PredictorPca& pca,
                                    const std::vector<std::vector<double>>& x,
                                    const Grid& grid) {
    const int n = grid.n_points();
    const int count = static_cast<int>(x.size());
    const int dim = static_cast<int>(pca.eigenfunctions.size());
    std::vector<double> w = trapezoid_weights(n, grid.dt());
    Eigen::MatrixXd design(count, dim + 1);
    for (int i = 0; i < count; ++i) {
        design(i, 0) = 1.0;
        for (int k = 0; k < dim; ++k) {
            double acc = 0.0;
            for (int j = 0; j < n; ++j)
                acc += w[j] * (x[i][j] - pca.mean[j]) * pca.eigenfunctions[k][j];
            design(i, k + 1) = acc;
        }
    }
    return design;
}

inline FunctionalRegressionModel assemble_model(const PredictorPca& pca,
                                                const Eigen::VectorXd& coefs,
                                                const Grid& grid, RegressionLink link) {
    const int n = grid.n_points();
    const int dim = static_cast<int>(pca.eigenfunctions.size());
    std::vector<double> beta(n, 0.0);
    for (int k = 0; k < dim; ++k)
        for (int j = 0; j < n; ++j) beta[j] += coefs[k + 1] * pca.eigenfunctions[k][j];
    // alpha in the <f, beta> parameterization: subtract <mean, beta>
    std::vector<double> w = trapezoid_weights(n, grid.dt());
    double mean_dot_beta = 0.0;
    for (int j = 0; j < n; ++j) mean_dot_beta += w[j] * pca.mean[j] * beta[j];

    FunctionalRegressionModel model;
    model.alpha = coefs[0] - mean_dot_beta;
    model.beta = ClrFunction{grid, std::move(beta)};
    model.basis_dim = dim;
    model.link = link;
    model.basis_coefs = coefs;
    return model;
}

}  // namespace inf_detail

/// OLS of y on an intercept plus fPCA scores of the predictors.
inline FunctionalRegressionModel fit_linear_raw(const std::vector<std::vector<double>>& x,
                                                const std::vector<double>& y,
                                                int basis_dim, const Grid& grid) {
    const int count = static_cast<int>(x.size());
    if (count != static_cast<int>(y.size()))
        throw InvalidArgument("fit_linear: predictor/response length mismatch");
    if (basis_dim < 1) throw InvalidArgument("fit_linear: basis_dim must be >= 1");
    if (basis_dim > count - 1)
        throw InvalidArgument("fit_linear: basis_dim must be <= N-1");
    inf_detail::PredictorPca pca = inf_detail::predictor_pca(x, basis_dim, grid);
    Eigen::MatrixXd design = inf_detail::score_design(pca, x, grid);
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
    if (qr.rank() < design.cols())
        throw RankDeficient("fit_linear: collinear scores");
    Eigen::VectorXd yv = Eigen::Map<const Eigen::VectorXd>(y.data(), count);
    Eigen::VectorXd coefs = qr.solve(yv);
    return inf_detail::assemble_model(pca, coefs, grid, IdentityLink{});
}

inline FunctionalRegressionModel fit_linear(const std::vector<WarpingFunction>& warpings,
                                            const std::vector<double>& y, int basis_dim) {
    if (warpings.empty()) throw InvalidArgument("fit_linear: empty sample");
    const Grid grid = warpings[0].grid;
    std::vector<std::vector<double>> x;
    x.reserve(warpings.size());
    for (const auto& g : warpings) {
        require_same_grid(grid, g.grid, "fit_linear");
        x.push_back(clr_transform(g).values);
    }
    return fit_linear_raw(x, y, basis_dim, grid);
}

/// Logistic regression by iteratively reweighted least squares on fPCA
/// scores. Stops when the log-likelihood change is <= 1e-8 or after 100
/// iterations; perfect separation leaves the model flagged.
inline FunctionalRegressionModel fit_logistic_raw(
    const std::vector<std::vector<double>>& x, const std::vector<int>& z, int basis_dim,
    const Grid& grid) {
    const int count = static_cast<int>(x.size());
    if (count != static_cast<int>(z.size()))
        throw InvalidArgument("fit_logistic: predictor/label length mismatch");
    if (basis_dim < 1) throw InvalidArgument("fit_logistic: basis_dim must be >= 1");
    bool has0 = false, has1 = false;
    for (int v : z) {
        if (v == 0) has0 = true;
        else if (v == 1) has1 = true;
        else throw InvalidArgument("fit_logistic: labels must be 0 or 1");
    }
    if (!has0 || !has1) throw SingleClass("fit_logistic: only one class present");

    inf_detail::PredictorPca pca = inf_detail::predictor_pca(x, basis_dim, grid);
    Eigen::MatrixXd design = inf_detail::score_design(pca, x, grid);
    const int p = static_cast<int>(design.cols());

    Eigen::VectorXd coefs = Eigen::VectorXd::Zero(p);
    double prev_ll = -1e300;
    bool converged = false;
    for (int it = 0; it < 100; ++it) {
        Eigen::VectorXd eta = design * coefs;
        Eigen::VectorXd prob(count), weight(count), resid(count);
        double ll = 0.0;
        for (int i = 0; i < count; ++i) {
            double pr = 1.0 / (1.0 + std::exp(-eta[i]));
            pr = std::clamp(pr, 1e-12, 1.0 - 1e-12);
            prob[i] = pr;
            weight[i] = pr * (1.0 - pr);
            resid[i] = z[i] - pr;
            ll += z[i] * std::log(pr) + (1 - z[i]) * std::log(1.0 - pr);
        }
        Eigen::MatrixXd xtwx = design.transpose() * weight.asDiagonal() * design;
        xtwx.diagonal().array() += 1e-10;  // guard the Newton solve
        Eigen::VectorXd step = xtwx.ldlt().solve(design.transpose() * resid);
        coefs += step;
        if (std::abs(ll - prev_ll) <= 1e-8) {
            converged = true;
            break;
        }
        prev_ll = ll;
    }
    // Perfect separation: every margin correctly signed and saturated. The
    // likelihood has no finite maximizer then, so the model is flagged.
    Eigen::VectorXd eta = design * coefs;
    bool separated = true;
    double min_margin = 1e300;
    for (int i = 0; i < count; ++i) {
        double margin = (z[i] == 1 ? eta[i] : -eta[i]);
        separated = separated && margin > 0.0;
        min_margin = std::min(min_margin, std::abs(eta[i]));
    }
    bool separation = separated && min_margin > 10.0;
    FunctionalRegressionModel model =
        inf_detail::assemble_model(pca, coefs, grid, LogisticLink{});
    model.converged = converged && !separation;
    model.separation_flag = separation;
    return model;
}

inline FunctionalRegressionModel fit_logistic(const std::vector<WarpingFunction>& warpings,
                                              const std::vector<int>& z, int basis_dim) {
    if (warpings.empty()) throw InvalidArgument("fit_logistic: empty sample");
    const Grid grid = warpings[0].grid;
    std::vector<std::vector<double>> x;
    x.reserve(warpings.size());
    for (const auto& g : warpings) {
        require_same_grid(grid, g.grid, "fit_logistic");
        x.push_back(clr_transform(g).values);
    }
    return fit_logistic_raw(x, z, basis_dim, grid);
}

inline double predict_raw(const FunctionalRegressionModel& model,
                          const std::vector<double>& f, const Grid& grid) {
    const int n = grid.n_points();
    std::vector<double> w = trapezoid_weights(n, grid.dt());
    double eta = model.alpha;
    for (int j = 0; j < n; ++j) eta += w[j] * f[j] * model.beta.values[j];
    if (std::holds_alternative<LogisticLink>(model.link))
        return 1.0 / (1.0 + std::exp(-eta));
    return eta;
}

/// Linear predictor (identity link) or class probability (logistic link).
inline double predict(const FunctionalRegressionModel& model, const WarpingFunction& gamma) {
    require_same_grid(model.beta.grid, gamma.grid, "predict");
    return predict_raw(model, clr_transform(gamma).values, gamma.grid);
}

}  // namespace warplib
