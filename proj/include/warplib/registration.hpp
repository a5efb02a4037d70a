#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "warplib/clr.hpp"
#include "warplib/grid.hpp"
#include "warplib/numerics.hpp"
#include "warplib/srvf.hpp"

namespace warplib {

struct IsotropicKernel {
    double a = 1.0;
};

struct DiagonalKernel {
    RealFunction r;
};

/// Piecewise Dirac kernel: a on the first half diagonal, b on the second,
/// c coupling points half a period apart. Positive definite iff ab > c^2.
struct BlockKernel {
    double a = 1.0;
    double b = 1.0;
    double c = 0.0;
};

struct FullMatrixKernel {
    Eigen::MatrixXd h;
};

using PenaltyKernel =
    std::variant<IsotropicKernel, DiagonalKernel, BlockKernel, FullMatrixKernel>;

inline IsotropicKernel make_isotropic_kernel(double a) {
    if (!(a > 0.0)) throw InvalidArgument("IsotropicKernel: a must be > 0");
    return IsotropicKernel{a};
}

inline DiagonalKernel make_diagonal_kernel(RealFunction r) {
    for (double x : r.values)
        if (!(x > 0.0)) throw InvalidArgument("DiagonalKernel: r(t) must be > 0");
    return DiagonalKernel{std::move(r)};
}

inline BlockKernel make_block_kernel(double a, double b, double c) {
    if (!(a > 0.0 && b > 0.0 && a * b > c * c))
        throw InvalidArgument("BlockKernel needs a > 0, b > 0 and ab > c^2");
    return BlockKernel{a, b, c};
}

/// Validates symmetry and positive definiteness of W^{1/2} H W^{1/2}.
inline FullMatrixKernel make_full_matrix_kernel(Eigen::MatrixXd h, double dt) {
    if (h.rows() != h.cols())
        throw InvalidArgument("FullMatrixKernel: matrix must be square");
    if ((h - h.transpose()).cwiseAbs().maxCoeff() >
        1e-10 * std::max(1.0, h.cwiseAbs().maxCoeff()))
        throw InvalidArgument("FullMatrixKernel: matrix must be symmetric");
    const int n = static_cast<int>(h.rows());
    std::vector<double> w = trapezoid_weights(n, dt);
    Eigen::VectorXd sw(n);
    for (int i = 0; i < n; ++i) sw[i] = std::sqrt(w[i]);
    Eigen::MatrixXd weighted = sw.asDiagonal() * h * sw.asDiagonal();
    // LDLT flags semi-definite matrices as NumericalIssue, so judge by the
    // pivot ratio instead of info().
    Eigen::LDLT<Eigen::MatrixXd> ldlt(weighted);
    double dmax = std::abs(ldlt.vectorD().maxCoeff());
    double floor = -1e-10 * std::max(dmax, 1e-30);
    if (ldlt.vectorD().minCoeff() < floor)
        throw InvalidArgument(
            "FullMatrixKernel: matrix is not positive definite under quadrature "
            "weighting");
    return FullMatrixKernel{std::move(h)};
}

struct AlignConfig {
    double lambda = 0.0;
    double learning_rate = 1.0;  // initial step; fixed step when backtracking is off
    double grad_tolerance = 1e-4;
    int max_iters = 5000;
    std::optional<WarpingFunction> init_warping;  // single start when set
    bool backtracking = true;
    bool multistart = true;  // explore a small start dictionary when no init given
};

struct AlignResult {
    WarpingFunction warping;
    std::vector<double> trace;  // loss values of the final descent
    bool converged = false;
};

namespace reg_detail {

// Penalty value and the centered-form factor u = (dP/dzeta) / (2w), so the
// phi-gradient of the penalty is 2*lambda*(u - integral(u)). Each variant is
// the exact derivative of its own discrete quadratic form.
struct PenaltyEval {
    double value = 0.0;
    std::vector<double> u;
};

inline PenaltyEval penalty_eval(const std::vector<double>& zeta, double dt,
                                const PenaltyKernel& kernel) {
    const int n = static_cast<int>(zeta.size());
    PenaltyEval out;
    if (std::holds_alternative<IsotropicKernel>(kernel)) {
        double a = std::get<IsotropicKernel>(kernel).a;
        out.value = a * trapezoid_inner(zeta, zeta, dt);
        out.u.resize(n);
        for (int i = 0; i < n; ++i) out.u[i] = a * zeta[i];
    } else if (std::holds_alternative<DiagonalKernel>(kernel)) {
        const auto& r = std::get<DiagonalKernel>(kernel).r.values;
        if (static_cast<int>(r.size()) != n)
            throw GridMismatch("DiagonalKernel: r grid differs from phi grid");
        std::vector<double> rz(n);
        for (int i = 0; i < n; ++i) rz[i] = r[i] * zeta[i];
        out.value = trapezoid_inner(rz, zeta, dt);
        out.u = std::move(rz);
    } else if (std::holds_alternative<BlockKernel>(kernel)) {
        if ((n - 1) % 2 != 0)
            throw InvalidArgument(
                "BlockKernel needs a grid with even n_points-1 so t+1/2 stays on "
                "the grid");
        const auto& k = std::get<BlockKernel>(kernel);
        const int h = (n - 1) / 2;
        std::vector<double> v(h + 1, dt);
        v.front() = 0.5 * dt;
        v.back() = 0.5 * dt;
        std::vector<double> w = trapezoid_weights(n, dt);
        double p = 0.0;
        std::vector<double> dp(n, 0.0);
        for (int j = 0; j <= h; ++j) {
            double z1 = zeta[j], z2 = zeta[j + h];
            p += v[j] * (k.a * z1 * z1 + k.b * z2 * z2 + 2.0 * k.c * z1 * z2);
            dp[j] += 2.0 * v[j] * (k.a * z1 + k.c * z2);
            dp[j + h] += 2.0 * v[j] * (k.b * z2 + k.c * z1);
        }
        out.value = p;
        out.u.resize(n);
        for (int i = 0; i < n; ++i) out.u[i] = dp[i] / (2.0 * w[i]);
    } else {
        const auto& h = std::get<FullMatrixKernel>(kernel).h;
        if (h.rows() != n)
            throw GridMismatch("FullMatrixKernel: matrix size differs from phi grid");
        std::vector<double> w = trapezoid_weights(n, dt);
        Eigen::VectorXd wz(n);
        for (int i = 0; i < n; ++i) wz[i] = w[i] * zeta[i];
        Eigen::VectorXd hz = h * wz;
        out.value = wz.dot(hz);
        out.u.assign(hz.data(), hz.data() + n);
    }
    return out;
}

// Loss and exact gradient of the discrete objective. q2 and its derivative
// are evaluated at warped points through one C1 Hermite interpolant whose
// knot slopes are the central differences of q2, so the finite-difference
// directional derivative of the loss matches <grad, g> to interpolation
// smoothness rather than cell-crossing noise.
struct Engine {
    const std::vector<double>* q1;
    HermiteInterpolant q2;
    double dt;
    int n;
    std::vector<double> w;

    Engine(const std::vector<double>& q1v, const std::vector<double>& q2v,
           const std::vector<double>& q2_slopes, double dt_)
        : q1(&q1v),
          q2(q2v, q2_slopes, dt_),
          dt(dt_),
          n(static_cast<int>(q1v.size())),
          w(trapezoid_weights(n, dt_)) {}

    double loss(const std::vector<double>& phi, const PenaltyKernel& kernel,
                double lambda) const {
        std::vector<double> e(n), gam;
        for (int i = 0; i < n; ++i) e[i] = std::exp(phi[i]);
        gam = cumulative_trapezoid(e, dt);
        std::vector<double> integrand(n);
        for (int i = 0; i < n; ++i)
            integrand[i] = -2.0 * (*q1)[i] * q2.value(gam[i]) * std::sqrt(e[i]);
        double data = trapezoid(integrand, dt);
        if (lambda == 0.0) return data;
        double mean = trapezoid(phi, dt);
        std::vector<double> zeta(n);
        for (int i = 0; i < n; ++i) zeta[i] = phi[i] - mean;
        return data + lambda * penalty_eval(zeta, dt, kernel).value;
    }

    std::pair<double, std::vector<double>> loss_and_grad(const std::vector<double>& phi,
                                                         const PenaltyKernel& kernel,
                                                         double lambda) const {
        std::vector<double> e(n), s(n);
        for (int i = 0; i < n; ++i) {
            e[i] = std::exp(phi[i]);
            s[i] = std::sqrt(e[i]);
        }
        std::vector<double> gam = cumulative_trapezoid(e, dt);

        double data = 0.0;
        std::vector<double> q2g(n), a(n);
        for (int i = 0; i < n; ++i) {
            q2g[i] = q2.value(gam[i]);
            a[i] = w[i] * (*q1)[i] * q2.derivative(gam[i]) * s[i];
        }
        {
            std::vector<double> integrand(n);
            for (int i = 0; i < n; ++i) integrand[i] = -2.0 * (*q1)[i] * q2g[i] * s[i];
            data = trapezoid(integrand, dt);
        }

        // tail_k = sum_i a_i * c_{ik}, the exact adjoint of the cumulative
        // trapezoid: c_{ik} = dt for 0 < k < i, dt/2 for k in {0, i}.
        std::vector<double> suffix(n + 1, 0.0);
        for (int i = n - 1; i >= 0; --i) suffix[i] = suffix[i + 1] + a[i];
        std::vector<double> grad(n);
        for (int k = 0; k < n; ++k) {
            double tail = k == 0 ? 0.5 * dt * suffix[1]
                                 : dt * suffix[k + 1] + 0.5 * dt * a[k];
            grad[k] = -2.0 * e[k] * tail / w[k] - (*q1)[k] * q2g[k] * s[k];
        }

        double value = data;
        if (lambda != 0.0) {
            double mean = trapezoid(phi, dt);
            std::vector<double> zeta(n);
            for (int i = 0; i < n; ++i) zeta[i] = phi[i] - mean;
            PenaltyEval pen = penalty_eval(zeta, dt, kernel);
            value += lambda * pen.value;
            double ubar = trapezoid(pen.u, dt);
            for (int k = 0; k < n; ++k)
                grad[k] += 2.0 * lambda * (pen.u[k] - ubar);
        }
        return {value, std::move(grad)};
    }
};

inline void check_normalized(const std::vector<double>& phi, double dt) {
    std::vector<double> e(phi.size());
    for (std::size_t i = 0; i < phi.size(); ++i) e[i] = std::exp(phi[i]);
    double total = trapezoid(e, dt);
    if (std::abs(total - 1.0) > 1e-4)
        throw NotNormalized("loss: integral(exp(phi)) = " + std::to_string(total));
}

inline std::vector<double> normalize_phi(std::vector<double> phi, double dt) {
    if (sup_norm(phi) > kExpOverflowGuard)
        throw NumericalFailure("normalize_phi: sup|phi| exceeds the overflow guard");
    std::vector<double> e(phi.size());
    for (std::size_t i = 0; i < phi.size(); ++i) e[i] = std::exp(phi[i]);
    double shift = std::log(trapezoid(e, dt));
    for (double& x : phi) x -= shift;
    return phi;
}

// Component of g along the normalization constraint normal exp(phi) removed.
inline std::vector<double> project_gradient(const std::vector<double>& g,
                                            const std::vector<double>& phi, double dt) {
    std::vector<double> e(phi.size());
    for (std::size_t i = 0; i < phi.size(); ++i) e[i] = std::exp(phi[i]);
    double num = trapezoid_inner(g, e, dt);
    double den = trapezoid_inner(e, e, dt);
    std::vector<double> out(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) out[i] = g[i] - (num / den) * e[i];
    return out;
}

struct DescentOutcome {
    std::vector<double> phi;
    double loss = 0.0;
    std::vector<double> trace;
    bool converged = false;
};

inline DescentOutcome descend(const Engine& engine, std::vector<double> phi,
                              const PenaltyKernel& kernel, double lambda,
                              double tolerance, int max_iters, double step0,
                              bool backtracking) {
    const double dt = engine.dt;
    auto [value, grad] = engine.loss_and_grad(phi, kernel, lambda);
    std::vector<double> gp = project_gradient(grad, phi, dt);
    DescentOutcome out;
    out.trace.push_back(value);
    double step = step0;
    bool converged = false;
    for (int it = 0; it < max_iters; ++it) {
        double gnorm = sup_norm(gp);
        if (gnorm <= tolerance) {
            converged = true;
            break;
        }
        if (!backtracking) {
            std::vector<double> cand(phi.size());
            for (std::size_t i = 0; i < phi.size(); ++i)
                cand[i] = phi[i] - step0 * gp[i];
            if (sup_norm(cand) > 60.0) break;  // diverging fixed-step run
            cand = normalize_phi(std::move(cand), dt);
            auto [cv, cg] = engine.loss_and_grad(cand, kernel, lambda);
            phi = std::move(cand);
            value = cv;
            gp = project_gradient(cg, phi, dt);
            out.trace.push_back(value);
            continue;
        }
        double slope = trapezoid_inner(gp, gp, dt);
        double trial = std::min(step, 10.0 / std::max(gnorm, 1e-12));
        bool accepted = false;
        for (int bt = 0; bt < 60; ++bt) {
            std::vector<double> cand(phi.size());
            for (std::size_t i = 0; i < phi.size(); ++i)
                cand[i] = phi[i] - trial * gp[i];
            if (sup_norm(cand) < 60.0) {
                cand = normalize_phi(std::move(cand), dt);
                auto [cv, cg] = engine.loss_and_grad(cand, kernel, lambda);
                if (std::isfinite(cv) && cv <= value - 1e-4 * trial * slope) {
                    phi = std::move(cand);
                    value = cv;
                    gp = project_gradient(cg, phi, dt);
                    out.trace.push_back(value);
                    step = trial * 2.0;
                    accepted = true;
                    break;
                }
            }
            trial *= 0.5;
        }
        if (!accepted) break;  // no descent direction left at this resolution
    }
    out.phi = std::move(phi);
    out.loss = value;
    out.converged = converged;
    return out;
}

// Start dictionary for the multistart exploration: identity, the exponential
// one-parameter family, and first/second Fourier modes at two amplitudes.
inline std::vector<std::vector<double>> start_dictionary(const Grid& grid) {
    const int n = grid.n_points();
    std::vector<std::vector<double>> inits;
    inits.emplace_back(n, 0.0);
    for (double a : {-3.0, -2.0, -1.0, 1.0, 2.0, 3.0}) {
        std::vector<double> phi(n);
        for (int i = 0; i < n; ++i) phi[i] = a * (grid.point(i) - 0.5);
        inits.push_back(std::move(phi));
    }
    for (int k : {1, 2}) {
        for (double amp : {0.8, -0.8, 1.6, -1.6}) {
            std::vector<double> ps(n), pc(n);
            for (int i = 0; i < n; ++i) {
                double arg = 2.0 * k * std::numbers::pi * grid.point(i);
                ps[i] = amp * std::numbers::sqrt2 * std::sin(arg);
                pc[i] = amp * std::numbers::sqrt2 * std::cos(arg);
            }
            inits.push_back(std::move(ps));
            inits.push_back(std::move(pc));
        }
    }
    return inits;
}

}  // namespace reg_detail

/// Penalized registration loss J(phi). phi must be normalized so that
/// integral(exp(phi)) = 1 (checked within 1e-4).
inline double loss(const RealFunction& phi, const SrvfFunction& q1,
                   const SrvfFunction& q2, const PenaltyKernel& kernel, double lambda) {
    require_same_grid(phi.grid, q1.grid, "loss");
    require_same_grid(phi.grid, q2.grid, "loss");
    const double dt = phi.grid.dt();
    reg_detail::check_normalized(phi.values, dt);
    std::vector<double> slopes = discrete_derivative(q2.values, dt);
    reg_detail::Engine engine(q1.values, q2.values, slopes, dt);
    return engine.loss(phi.values, kernel, lambda);
}

/// Gradient of J with respect to phi under the trapezoid L2 pairing.
inline RealFunction loss_gradient(const RealFunction& phi, const SrvfFunction& q1,
                                  const SrvfFunction& q2, const PenaltyKernel& kernel,
                                  double lambda) {
    require_same_grid(phi.grid, q1.grid, "loss_gradient");
    require_same_grid(phi.grid, q2.grid, "loss_gradient");
    const double dt = phi.grid.dt();
    reg_detail::check_normalized(phi.values, dt);
    std::vector<double> slopes = discrete_derivative(q2.values, dt);
    reg_detail::Engine engine(q1.values, q2.values, slopes, dt);
    auto [value, grad] = engine.loss_and_grad(phi.values, kernel, lambda);
    (void)value;
    return RealFunction(phi.grid, std::move(grad));
}

/// Data term evaluated through the group action; the independent second path
/// for checking the loss at lambda = 0.
inline double alignment_data_loss(const RealFunction& f1, const RealFunction& f2,
                                  const WarpingFunction& gamma) {
    SrvfFunction q1 = srvf(f1);
    SrvfFunction q2w = srvf_warp(srvf(f2), gamma);
    std::vector<double> integrand(q1.values.size());
    for (std::size_t i = 0; i < integrand.size(); ++i)
        integrand[i] = -2.0 * q1.values[i] * q2w.values[i];
    return trapezoid(integrand, f1.grid.dt());
}

/// Penalized alignment of f2 onto f1 by projected gradient descent on phi
/// with renormalization each step. Without an explicit init_warping the
/// optimizer explores a fixed start dictionary and polishes the best start.
inline AlignResult align(const RealFunction& f1, const RealFunction& f2,
                         const PenaltyKernel& kernel, const AlignConfig& config) {
    require_same_grid(f1.grid, f2.grid, "align");
    if (config.lambda < 0.0) throw InvalidArgument("align: lambda must be >= 0");
    if (config.max_iters < 1) throw InvalidArgument("align: max_iters must be >= 1");
    if (!(config.learning_rate > 0.0))
        throw InvalidArgument("align: learning_rate must be > 0");
    const Grid grid = f1.grid;
    const double dt = grid.dt();

    SrvfFunction q1 = srvf(f1);
    SrvfFunction q2 = srvf(f2);
    std::vector<double> slopes = discrete_derivative(q2.values, dt);
    reg_detail::Engine engine(q1.values, q2.values, slopes, dt);

    std::vector<double> phi0;
    if (config.init_warping) {
        require_same_grid(grid, config.init_warping->grid, "align init");
        phi0 = clr_transform(*config.init_warping).values;
        phi0 = reg_detail::normalize_phi(std::move(phi0), dt);
    } else if (config.multistart) {
        auto starts = reg_detail::start_dictionary(grid);
        int explore = std::max(200, config.max_iters / 4);
        double best = 0.0;
        for (auto& start : starts) {
            auto cand = reg_detail::descend(
                engine, reg_detail::normalize_phi(std::move(start), dt), kernel,
                config.lambda, config.grad_tolerance * 10.0, explore,
                config.learning_rate, config.backtracking);
            if (phi0.empty() || cand.loss < best) {
                best = cand.loss;
                phi0 = std::move(cand.phi);
            }
        }
    } else {
        phi0.assign(grid.n_points(), 0.0);
    }

    auto outcome = reg_detail::descend(engine, std::move(phi0), kernel, config.lambda,
                                       config.grad_tolerance, config.max_iters,
                                       config.learning_rate, config.backtracking);

    std::vector<double> e(outcome.phi.size());
    for (std::size_t i = 0; i < e.size(); ++i) e[i] = std::exp(outcome.phi[i]);
    std::vector<double> gamma = cumulative_trapezoid(e, dt);
    double total = gamma.back();
    for (double& x : gamma) x /= total;
    gamma.front() = 0.0;
    gamma.back() = 1.0;
    return AlignResult{make_warping_function(grid, std::move(gamma)),
                       std::move(outcome.trace), outcome.converged};
}

/// Dynamic-programming alignment over monotone lattice paths; the lambda = 0
/// oracle. Slopes are limited to coprime steps up to 7 in each direction.
inline WarpingFunction align_dp(const RealFunction& f1, const RealFunction& f2,
                                int dp_grid = 200) {
    require_same_grid(f1.grid, f2.grid, "align_dp");
    if (dp_grid < 10) throw InvalidArgument("align_dp: dp_grid must be >= 10");
    const int fine = f1.grid.n_points();
    SrvfFunction q1 = srvf(f1);
    SrvfFunction q2 = srvf(f2);

    const int d = dp_grid;
    auto tt = [d](int i) { return static_cast<double>(i) / d; };

    std::vector<std::pair<int, int>> steps;
    for (int di = 1; di <= 7; ++di)
        for (int dj = 1; dj <= 7; ++dj)
            if (std::gcd(di, dj) == 1) steps.emplace_back(di, dj);

    auto seg_cost = [&](int i1, int j1, int i2, int j2) {
        const double a = tt(i1), b = tt(i2);
        const double m = static_cast<double>(j2 - j1) / (i2 - i1);
        const int pts = std::max(2, static_cast<int>(std::ceil((b - a) * (fine - 1))) + 1);
        const double h = (b - a) / (pts - 1);
        double acc = 0.0;
        for (int p = 0; p < pts; ++p) {
            double x = a + h * p;
            double gx = tt(j1) + m * (x - a);
            double v = interp_linear(q1.values, x) -
                       std::sqrt(m) * interp_linear(q2.values, gx);
            double term = v * v;
            acc += (p == 0 || p == pts - 1) ? 0.5 * term : term;
        }
        return acc * h;
    };

    const double inf = 1e300;
    std::vector<double> cost((d + 1) * (d + 1), inf);
    std::vector<int> parent((d + 1) * (d + 1), -1);
    auto at = [d](int i, int j) { return i * (d + 1) + j; };
    cost[at(0, 0)] = 0.0;
    for (int i = 1; i <= d; ++i) {
        for (int j = 1; j <= d; ++j) {
            double best = inf;
            int bp = -1;
            for (const auto& [di, dj] : steps) {
                int pi = i - di, pj = j - dj;
                if (pi < 0 || pj < 0) continue;
                double base = cost[at(pi, pj)];
                if (base >= inf) continue;
                double c = base + seg_cost(pi, pj, i, j);
                if (c < best) {
                    best = c;
                    bp = at(pi, pj);
                }
            }
            cost[at(i, j)] = best;
            parent[at(i, j)] = bp;
        }
    }

    std::vector<std::pair<double, double>> path;
    int node = at(d, d);
    while (node >= 0) {
        path.emplace_back(tt(node / (d + 1)), tt(node % (d + 1)));
        node = parent[node];
    }
    std::reverse(path.begin(), path.end());

    std::vector<double> gamma(fine);
    std::size_t seg = 0;
    for (int i = 0; i < fine; ++i) {
        double x = f1.grid.point(i);
        while (seg + 2 < path.size() && path[seg + 1].first < x) ++seg;
        const auto& [x0, y0] = path[seg];
        const auto& [x1, y1] = path[seg + 1];
        gamma[i] = y0 + (y1 - y0) * (x - x0) / (x1 - x0);
    }
    gamma.front() = 0.0;
    gamma.back() = 1.0;
    return make_warping_function(f1.grid, std::move(gamma));
}

}  // namespace warplib
