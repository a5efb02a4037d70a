#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "warplib/grid.hpp"

namespace warplib {

/// Composite trapezoid integral over [0,1].
inline double trapezoid_integral(const RealFunction& f) {
    return detail::trapezoid_raw(f.values, f.grid.dt());
}

inline double trapezoid(const std::vector<double>& v, double dt) {
    return detail::trapezoid_raw(v, dt);
}

/// Trapezoid quadrature weights: dt everywhere, dt/2 at the endpoints.
inline std::vector<double> trapezoid_weights(int n, double dt) {
    std::vector<double> w(n, dt);
    w.front() = 0.5 * dt;
    w.back() = 0.5 * dt;
    return w;
}

/// Running integral with value 0 at t=0.
inline std::vector<double> cumulative_trapezoid(const std::vector<double>& v, double dt) {
    std::vector<double> out(v.size());
    out[0] = 0.0;
    for (std::size_t i = 1; i < v.size(); ++i)
        out[i] = out[i - 1] + 0.5 * dt * (v[i - 1] + v[i]);
    return out;
}

inline RealFunction cumulative_trapezoid(const RealFunction& f) {
    return RealFunction(f.grid, cumulative_trapezoid(f.values, f.grid.dt()));
}

/// Central differences in the interior, one-sided second order at the ends.
inline std::vector<double> discrete_derivative(const std::vector<double>& v, double dt) {
    const std::size_t n = v.size();
    std::vector<double> d(n);
    for (std::size_t i = 1; i + 1 < n; ++i) d[i] = (v[i + 1] - v[i - 1]) / (2.0 * dt);
    d[0] = (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * dt);
    d[n - 1] = (3.0 * v[n - 1] - 4.0 * v[n - 2] + v[n - 3]) / (2.0 * dt);
    return d;
}

inline RealFunction discrete_derivative(const RealFunction& f) {
    return RealFunction(f.grid, discrete_derivative(f.values, f.grid.dt()));
}

/// Fourth-order five-point derivative (one-sided at the borders). Falls back
/// to the second-order scheme on very small grids.
inline std::vector<double> derivative_highorder(const std::vector<double>& v, double dt) {
    const std::size_t n = v.size();
    if (n < 5) return discrete_derivative(v, dt);
    std::vector<double> d(n);
    const double inv = 1.0 / (12.0 * dt);
    d[0] = (-25 * v[0] + 48 * v[1] - 36 * v[2] + 16 * v[3] - 3 * v[4]) * inv;
    d[1] = (-3 * v[0] - 10 * v[1] + 18 * v[2] - 6 * v[3] + v[4]) * inv;
    for (std::size_t i = 2; i + 2 < n; ++i)
        d[i] = (-v[i + 2] + 8 * v[i + 1] - 8 * v[i - 1] + v[i - 2]) * inv;
    d[n - 2] = (3 * v[n - 1] + 10 * v[n - 2] - 18 * v[n - 3] + 6 * v[n - 4] - v[n - 5]) * inv;
    d[n - 1] = (25 * v[n - 1] - 48 * v[n - 2] + 36 * v[n - 3] - 16 * v[n - 4] + 3 * v[n - 5]) * inv;
    return d;
}

/// Cumulative trapezoid with the Euler-Maclaurin endpoint correction, the
/// fourth-order companion of derivative_highorder. The pair keeps the CLR
/// round trip inside tol(grid); the plain second-order pair cannot.
inline std::vector<double> cumulative_trapezoid_corrected(const std::vector<double>& v,
                                                          double dt) {
    std::vector<double> out = cumulative_trapezoid(v, dt);
    if (v.size() < 5) return out;
    std::vector<double> d = derivative_highorder(v, dt);
    const double c = dt * dt / 12.0;
    for (std::size_t i = 1; i < v.size(); ++i) out[i] -= c * (d[i] - d[0]);
    return out;
}

inline double trapezoid_inner(const std::vector<double>& a, const std::vector<double>& b,
                              double dt) {
    double s = 0.5 * (a.front() * b.front() + a.back() * b.back());
    for (std::size_t i = 1; i + 1 < a.size(); ++i) s += a[i] * b[i];
    return s * dt;
}

/// L2 inner product under the trapezoid rule; same grid assumed.
inline double l2_inner(const RealFunction& a, const RealFunction& b) {
    require_same_grid(a.grid, b.grid, "l2_inner");
    return trapezoid_inner(a.values, b.values, a.grid.dt());
}

inline double l2_norm(const std::vector<double>& a, double dt) {
    return std::sqrt(std::max(0.0, trapezoid_inner(a, a, dt)));
}

inline double sup_norm(const std::vector<double>& a) {
    double m = 0.0;
    for (double x : a) m = std::max(m, std::abs(x));
    return m;
}

inline double sup_distance(const std::vector<double>& a, const std::vector<double>& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

/// Linear interpolation of samples y on the uniform grid of [0,1] at x,
/// extending the end cells linearly outside [0,1].
inline double interp_linear(const std::vector<double>& y, double x) {
    const int n = static_cast<int>(y.size());
    const double dt = 1.0 / (n - 1);
    int idx = static_cast<int>(std::floor(x / dt));
    idx = std::clamp(idx, 0, n - 2);
    double frac = x / dt - idx;
    return y[idx] * (1.0 - frac) + y[idx + 1] * frac;
}

/// Cubic Hermite interpolant with caller-supplied knot slopes. Value and
/// derivative stay consistent, so the interpolant is C1 across cells.
class HermiteInterpolant {
public:
    HermiteInterpolant(const std::vector<double>& y, const std::vector<double>& slopes,
                       double dt)
        : y_(&y), m_(&slopes), dt_(dt), n_(static_cast<int>(y.size())) {}

    double value(double x) const {
        auto [i, s] = locate(x);
        const double h00 = (2 * s - 3) * s * s + 1;
        const double h10 = ((s - 2) * s + 1) * s;
        const double h01 = (3 - 2 * s) * s * s;
        const double h11 = (s - 1) * s * s;
        return h00 * (*y_)[i] + h10 * dt_ * (*m_)[i] + h01 * (*y_)[i + 1] +
               h11 * dt_ * (*m_)[i + 1];
    }

    double derivative(double x) const {
        auto [i, s] = locate(x);
        const double d00 = (6 * s * s - 6 * s) / dt_;
        const double d10 = 3 * s * s - 4 * s + 1;
        const double d01 = (-6 * s * s + 6 * s) / dt_;
        const double d11 = 3 * s * s - 2 * s;
        return d00 * (*y_)[i] + d10 * (*m_)[i] + d01 * (*y_)[i + 1] + d11 * (*m_)[i + 1];
    }

private:
    std::pair<int, double> locate(double x) const {
        int idx = static_cast<int>(std::floor(x / dt_));
        idx = std::clamp(idx, 0, n_ - 2);
        return {idx, x / dt_ - idx};
    }

    const std::vector<double>* y_;
    const std::vector<double>* m_;
    double dt_;
    int n_;
};

/// Gaussian smoothing by direct convolution, replicating the end samples.
inline std::vector<double> gaussian_smooth(const std::vector<double>& y, double dt,
                                           double sigma) {
    if (sigma <= 0.0) return y;
    const int n = static_cast<int>(y.size());
    const int rad = static_cast<int>(std::ceil(4.0 * sigma / dt));
    std::vector<double> k(2 * rad + 1);
    double sum = 0.0;
    for (int j = -rad; j <= rad; ++j) {
        double u = j * dt / sigma;
        k[j + rad] = std::exp(-0.5 * u * u);
        sum += k[j + rad];
    }
    for (double& x : k) x /= sum;
    std::vector<double> out(n, 0.0);
    for (int i = 0; i < n; ++i) {
        double acc = 0.0;
        for (int j = -rad; j <= rad; ++j) {
            int idx = std::clamp(i + j, 0, n - 1);
            acc += k[j + rad] * y[idx];
        }
        out[i] = acc;
    }
    return out;
}

}  // namespace warplib
