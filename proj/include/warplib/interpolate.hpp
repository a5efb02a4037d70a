#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "warplib/errors.hpp"

namespace warplib {

/// Monotone cubic interpolation after Fritsch and Carlson: knot slopes are
/// harmonic-mean combinations clipped so the interpolant never overshoots
/// monotone data.
class MonotoneCubic {
public:
    MonotoneCubic(std::vector<double> x, std::vector<double> y)
        : x_(std::move(x)), y_(std::move(y)) {
        const std::size_t n = x_.size();
        if (n < 2 || y_.size() != n)
            throw InvalidArgument("MonotoneCubic: need matching x/y with >= 2 points");
        for (std::size_t i = 0; i + 1 < n; ++i)
            if (!(x_[i + 1] > x_[i]))
                throw InvalidArgument("MonotoneCubic: x must be strictly increasing");

        std::vector<double> h(n - 1), delta(n - 1);
        for (std::size_t i = 0; i + 1 < n; ++i) {
            h[i] = x_[i + 1] - x_[i];
            delta[i] = (y_[i + 1] - y_[i]) / h[i];
        }
        m_.assign(n, 0.0);
        m_[0] = delta[0];
        m_[n - 1] = delta[n - 2];
        for (std::size_t i = 1; i + 1 < n; ++i) {
            if (delta[i - 1] * delta[i] <= 0.0) {
                m_[i] = 0.0;
            } else {
                double w1 = 2.0 * h[i] + h[i - 1];
                double w2 = h[i] + 2.0 * h[i - 1];
                m_[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
            }
        }
        // clip end slopes and enforce the Fritsch-Carlson region
        for (std::size_t i = 0; i + 1 < n; ++i) {
            if (delta[i] == 0.0) {
                m_[i] = 0.0;
                m_[i + 1] = 0.0;
                continue;
            }
            double a = m_[i] / delta[i];
            double b = m_[i + 1] / delta[i];
            if (a < 0.0) m_[i] = 0.0;
            if (b < 0.0) m_[i + 1] = 0.0;
            double norm = std::hypot(a, b);
            if (norm > 3.0) {
                m_[i] = 3.0 * a / norm * delta[i];
                m_[i + 1] = 3.0 * b / norm * delta[i];
            }
        }
    }

    double operator()(double x) const {
        const std::size_t n = x_.size();
        if (x <= x_.front()) return y_.front();
        if (x >= x_.back()) return y_.back();
        std::size_t i =
            std::upper_bound(x_.begin(), x_.end(), x) - x_.begin() - 1;
        i = std::min(i, n - 2);
        double h = x_[i + 1] - x_[i];
        double s = (x - x_[i]) / h;
        double h00 = (2 * s - 3) * s * s + 1;
        double h10 = ((s - 2) * s + 1) * s;
        double h01 = (3 - 2 * s) * s * s;
        double h11 = (s - 1) * s * s;
        return h00 * y_[i] + h10 * h * m_[i] + h01 * y_[i + 1] + h11 * h * m_[i + 1];
    }

private:
    std::vector<double> x_, y_, m_;
};

}  // namespace warplib
