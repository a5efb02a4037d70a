#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <variant>
#include <vector>

#include "warplib/errors.hpp"
#include "warplib/rng.hpp"

namespace warplib {

struct NormalDist {
    double mean = 0.0;
    double sd = 1.0;
};

struct LaplaceDist {
    double location = 0.0;
    double scale = 1.0;
};

struct UniformDist {
    double lo = -1.0;
    double hi = 1.0;
};

struct ExponentialDist {
    double rate = 1.0;
    bool centered = false;  // subtract the mean 1/rate
    bool negated = false;   // mirror around the location (left-skewed fits)
};

struct WeightedInterval {
    double lo = 0.0;
    double hi = 0.0;
    double weight = 1.0;
};

struct PiecewiseUniformDist {
    std::vector<WeightedInterval> intervals;
};

/// Smoothed bootstrap: pick a stored sample uniformly, add Gaussian noise of
/// the bandwidth.
struct KdeDist {
    std::vector<double> samples;
    double bandwidth = 0.0;
};

using CoefficientDistribution =
    std::variant<NormalDist, LaplaceDist, UniformDist, ExponentialDist,
                 PiecewiseUniformDist, KdeDist>;

inline void validate(const CoefficientDistribution& dist) {
    std::visit(
        [](const auto& d) {
            using T = std::decay_t<decltype(d)>;
            if constexpr (std::is_same_v<T, NormalDist>) {
                if (!(d.sd > 0.0)) throw InvalidArgument("NormalDist: sd must be > 0");
            } else if constexpr (std::is_same_v<T, LaplaceDist>) {
                if (!(d.scale > 0.0))
                    throw InvalidArgument("LaplaceDist: scale must be > 0");
            } else if constexpr (std::is_same_v<T, UniformDist>) {
                if (!(d.hi > d.lo)) throw InvalidArgument("UniformDist: hi must be > lo");
            } else if constexpr (std::is_same_v<T, ExponentialDist>) {
                if (!(d.rate > 0.0))
                    throw InvalidArgument("ExponentialDist: rate must be > 0");
            } else if constexpr (std::is_same_v<T, PiecewiseUniformDist>) {
                if (d.intervals.empty())
                    throw InvalidArgument("PiecewiseUniformDist: no intervals");
                for (const auto& iv : d.intervals) {
                    if (!(iv.hi > iv.lo))
                        throw InvalidArgument("PiecewiseUniformDist: degenerate interval");
                    if (!(iv.weight > 0.0))
                        throw InvalidArgument("PiecewiseUniformDist: weight must be > 0");
                }
            } else if constexpr (std::is_same_v<T, KdeDist>) {
                if (d.samples.size() < 2)
                    throw InvalidArgument("KdeDist: needs at least 2 samples");
                if (d.bandwidth < 0.0)
                    throw InvalidArgument("KdeDist: bandwidth must be >= 0");
            }
        },
        dist);
}

inline double sample(const CoefficientDistribution& dist, CounterRng& rng) {
    return std::visit(
        [&rng](const auto& d) -> double {
            using T = std::decay_t<decltype(d)>;
            if constexpr (std::is_same_v<T, NormalDist>) {
                return d.mean + d.sd * rng.normal();
            } else if constexpr (std::is_same_v<T, LaplaceDist>) {
                double u = rng.uniform();
                return u < 0.5 ? d.location + d.scale * std::log(2.0 * u)
                               : d.location - d.scale * std::log(2.0 * (1.0 - u));
            } else if constexpr (std::is_same_v<T, UniformDist>) {
                return d.lo + (d.hi - d.lo) * rng.uniform();
            } else if constexpr (std::is_same_v<T, ExponentialDist>) {
                double x = -std::log(rng.uniform()) / d.rate;
                if (d.centered) x -= 1.0 / d.rate;
                return d.negated ? -x : x;
            } else if constexpr (std::is_same_v<T, PiecewiseUniformDist>) {
                double total = 0.0;
                for (const auto& iv : d.intervals) total += iv.weight;
                double u = rng.uniform() * total;
                std::size_t pick = d.intervals.size() - 1;
                for (std::size_t i = 0; i < d.intervals.size(); ++i) {
                    if (u <= d.intervals[i].weight) {
                        pick = i;
                        break;
                    }
                    u -= d.intervals[i].weight;
                }
                const auto& iv = d.intervals[pick];
                double frac = std::clamp(u / iv.weight, 0.0, 1.0);
                return iv.lo + (iv.hi - iv.lo) * frac;
            } else {
                const auto& k = static_cast<const KdeDist&>(d);
                std::size_t idx = static_cast<std::size_t>(rng.uniform() * k.samples.size());
                if (idx >= k.samples.size()) idx = k.samples.size() - 1;
                return k.samples[idx] + k.bandwidth * rng.normal();
            }
        },
        dist);
}

inline double dist_mean(const CoefficientDistribution& dist) {
    return std::visit(
        [](const auto& d) -> double {
            using T = std::decay_t<decltype(d)>;
            if constexpr (std::is_same_v<T, NormalDist>) {
                return d.mean;
            } else if constexpr (std::is_same_v<T, LaplaceDist>) {
                return d.location;
            } else if constexpr (std::is_same_v<T, UniformDist>) {
                return 0.5 * (d.lo + d.hi);
            } else if constexpr (std::is_same_v<T, ExponentialDist>) {
                double m = d.centered ? 0.0 : 1.0 / d.rate;
                return d.negated ? -m : m;
            } else if constexpr (std::is_same_v<T, PiecewiseUniformDist>) {
                double total = 0.0, acc = 0.0;
                for (const auto& iv : d.intervals) {
                    total += iv.weight;
                    acc += iv.weight * 0.5 * (iv.lo + iv.hi);
                }
                return acc / total;
            } else {
                const auto& k = static_cast<const KdeDist&>(d);
                double s = 0.0;
                for (double x : k.samples) s += x;
                return s / static_cast<double>(k.samples.size());
            }
        },
        dist);
}

inline double dist_variance(const CoefficientDistribution& dist) {
    return std::visit(
        [](const auto& d) -> double {
            using T = std::decay_t<decltype(d)>;
            if constexpr (std::is_same_v<T, NormalDist>) {
                return d.sd * d.sd;
            } else if constexpr (std::is_same_v<T, LaplaceDist>) {
                return 2.0 * d.scale * d.scale;
            } else if constexpr (std::is_same_v<T, UniformDist>) {
                double w = d.hi - d.lo;
                return w * w / 12.0;
            } else if constexpr (std::is_same_v<T, ExponentialDist>) {
                return 1.0 / (d.rate * d.rate);
            } else if constexpr (std::is_same_v<T, PiecewiseUniformDist>) {
                double total = 0.0, m1 = 0.0, m2 = 0.0;
                for (const auto& iv : d.intervals) {
                    total += iv.weight;
                    m1 += iv.weight * 0.5 * (iv.lo + iv.hi);
                    m2 += iv.weight * (iv.lo * iv.lo + iv.lo * iv.hi + iv.hi * iv.hi) / 3.0;
                }
                m1 /= total;
                m2 /= total;
                return m2 - m1 * m1;
            } else {
                const auto& k = static_cast<const KdeDist&>(d);
                double n = static_cast<double>(k.samples.size());
                double mean = 0.0;
                for (double x : k.samples) mean += x;
                mean /= n;
                double var = 0.0;
                for (double x : k.samples) var += (x - mean) * (x - mean);
                var = n > 1 ? var / (n - 1) : 0.0;
                return var + k.bandwidth * k.bandwidth;
            }
        },
        dist);
}

inline double dist_cdf(const CoefficientDistribution& dist, double x) {
    return std::visit(
        [x](const auto& d) -> double {
            using T = std::decay_t<decltype(d)>;
            if constexpr (std::is_same_v<T, NormalDist>) {
                return 0.5 * std::erfc(-(x - d.mean) / (d.sd * std::sqrt(2.0)));
            } else if constexpr (std::is_same_v<T, LaplaceDist>) {
                double z = (x - d.location) / d.scale;
                return z < 0.0 ? 0.5 * std::exp(z) : 1.0 - 0.5 * std::exp(-z);
            } else if constexpr (std::is_same_v<T, UniformDist>) {
                if (x <= d.lo) return 0.0;
                if (x >= d.hi) return 1.0;
                return (x - d.lo) / (d.hi - d.lo);
            } else if constexpr (std::is_same_v<T, ExponentialDist>) {
                double shift = d.centered ? 1.0 / d.rate : 0.0;
                auto base = [&](double v) {
                    double u = v + shift;
                    return u <= 0.0 ? 0.0 : 1.0 - std::exp(-d.rate * u);
                };
                return d.negated ? 1.0 - base(-x) : base(x);
            } else if constexpr (std::is_same_v<T, PiecewiseUniformDist>) {
                double total = 0.0;
                for (const auto& iv : d.intervals) total += iv.weight;
                double acc = 0.0;
                for (const auto& iv : d.intervals) {
                    if (x >= iv.hi)
                        acc += iv.weight;
                    else if (x > iv.lo)
                        acc += iv.weight * (x - iv.lo) / (iv.hi - iv.lo);
                }
                return acc / total;
            } else {
                const auto& k = static_cast<const KdeDist&>(d);
                double acc = 0.0;
                for (double s : k.samples) {
                    if (k.bandwidth > 0.0)
                        acc += 0.5 * std::erfc(-(x - s) / (k.bandwidth * std::sqrt(2.0)));
                    else
                        acc += x >= s ? 1.0 : 0.0;
                }
                return acc / static_cast<double>(k.samples.size());
            }
        },
        dist);
}

/// Silverman's rule of thumb: 0.9 min(sd, IQR/1.34) n^{-1/5}.
inline double silverman_bandwidth(const std::vector<double>& samples) {
    const double n = static_cast<double>(samples.size());
    if (samples.size() < 2) return 0.0;
    double mean = 0.0;
    for (double x : samples) mean += x;
    mean /= n;
    double var = 0.0;
    for (double x : samples) var += (x - mean) * (x - mean);
    double sd = std::sqrt(var / (n - 1));
    std::vector<double> sorted = samples;
    std::sort(sorted.begin(), sorted.end());
    auto quantile = [&sorted](double q) {
        double pos = q * (sorted.size() - 1);
        std::size_t lo = static_cast<std::size_t>(pos);
        std::size_t hi = std::min(lo + 1, sorted.size() - 1);
        return sorted[lo] + (pos - lo) * (sorted[hi] - sorted[lo]);
    };
    double iqr = quantile(0.75) - quantile(0.25);
    double spread = sd;
    if (iqr > 0.0) spread = std::min(sd, iqr / 1.34);
    return 0.9 * spread * std::pow(n, -0.2);
}

}  // namespace warplib
