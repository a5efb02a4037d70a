#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "test_support.hpp"
#include "warplib/fpca.hpp"
#include "warplib/io.hpp"
#include "warplib/rng.hpp"

using namespace warplib;
using testsupport::exp_family_warping;

namespace {

const Grid kGrid(201);

// Simulation 1: gamma_a with a ~ Exp(2), via the library RNG.
std::vector<double> sim1_parameters(int count, std::uint64_t seed) {
    std::vector<double> a(count);
    for (int i = 0; i < count; ++i) {
        CounterRng rng(seed, i);
        a[i] = -std::log(rng.uniform()) / 2.0;
    }
    return a;
}

std::vector<WarpingFunction> sim1_sample(const std::vector<double>& a, const Grid& grid) {
    std::vector<WarpingFunction> out;
    out.reserve(a.size());
    for (double ai : a) out.push_back(exp_family_warping(ai, grid));
    return out;
}

// Simulation 2 ensemble: three-family convex mixture.
std::vector<WarpingFunction> sim2_sample(int count, std::uint64_t seed, const Grid& grid) {
    std::vector<WarpingFunction> out;
    out.reserve(count);
    for (int i = 0; i < count; ++i) {
        CounterRng rng(seed, i);
        double a = -std::log(rng.uniform()) / 3.0;  // Exp with mean 1/3
        double d = -std::log(rng.uniform()) / 3.0;
        double b = 0.0;
        for (int k = 0; k < 3; ++k) {
            double z = rng.normal();
            b += z * z;  // chi^2(3)
        }
        double zc = rng.normal();
        double c = zc * zc;  // Gamma(0.5, 2) = chi^2(1)
        double x = rng.uniform(), y = rng.uniform();
        double a1 = x, a2 = std::max(y - x, 0.0);
        std::vector<double> v(grid.n_points());
        for (int j = 0; j < grid.n_points(); ++j) {
            double t = grid.point(j);
            double nested = testsupport::exp_family(d, testsupport::exp_family(-c, t));
            v[j] = a1 * testsupport::exp_family(a, t) +
                   a2 * testsupport::exp_family(b, t) + (1.0 - a1 - a2) * nested;
        }
        v.front() = 0.0;
        v.back() = 1.0;
        out.push_back(make_warping_function(grid, std::move(v)));
    }
    return out;
}

}  // namespace

TEST_CASE("simulation 1a: one dominant component", "[fpca]") {
    std::vector<double> a = sim1_parameters(500, 2024);
    std::vector<WarpingFunction> sample = sim1_sample(a, kGrid);
    FpcaModel model = fpca_fit(sample, CumulativeVariance{0.95});

    REQUIRE(model.retained_m >= 1);
    double mean_a = 0.0;
    for (double ai : a) mean_a += ai;
    mean_a /= a.size();
    double var_a = 0.0;
    for (double ai : a) var_a += (ai - mean_a) * (ai - mean_a);
    var_a /= a.size() - 1;

    // bootstrap standard error of Var(a)/12 over the observed draw
    std::mt19937_64 boot(7);
    std::uniform_int_distribution<std::size_t> pick(0, a.size() - 1);
    std::vector<double> boot_lambda(200);
    for (double& bl : boot_lambda) {
        double m = 0.0, v = 0.0;
        std::vector<double> rs(a.size());
        for (double& r : rs) {
            r = a[pick(boot)];
            m += r;
        }
        m /= rs.size();
        for (double r : rs) v += (r - m) * (r - m);
        bl = v / (rs.size() - 1) / 12.0;
    }
    double bmean = 0.0, bvar = 0.0;
    for (double bl : boot_lambda) bmean += bl;
    bmean /= boot_lambda.size();
    for (double bl : boot_lambda) bvar += (bl - bmean) * (bl - bmean);
    double se = std::sqrt(bvar / (boot_lambda.size() - 1));

    CHECK(std::abs(model.eigenpairs[0].first - 1.0 / 48.0) < 3.0 * se + 3.0 * 0.02 / 12.0);
    CHECK(std::abs(model.eigenpairs[0].first - var_a / 12.0) < 1e-4);
    if (model.retained_m > 1)
        CHECK(model.eigenpairs[1].first / model.eigenpairs[0].first < 0.05);

    // eigenfunction proportional to 2 sqrt(3) (t - 1/2)
    const auto& e1 = model.eigenpairs[0].second.values;
    std::vector<double> f1(kGrid.n_points());
    for (int i = 0; i < kGrid.n_points(); ++i)
        f1[i] = 2.0 * std::numbers::sqrt3 * (kGrid.point(i) - 0.5);
    double dt = kGrid.dt();
    double corr = trapezoid_inner(e1, f1, dt) /
                  std::sqrt(trapezoid_inner(e1, e1, dt) * trapezoid_inner(f1, f1, dt));
    CHECK(std::abs(corr) > 0.999);

    // scores equal (a - mean(a)) / (2 sqrt(3)) up to the eigenfunction sign
    double sign = corr > 0 ? 1.0 : -1.0;
    for (int i = 0; i < 20; ++i) {
        double expected = sign * (a[i] - mean_a) / (2.0 * std::numbers::sqrt3);
        CHECK(model.scores(i, 0) == Catch::Approx(expected).margin(1e-4));
    }
}

TEST_CASE("identical warpings: zero variance, mean preserved", "[fpca]") {
    std::vector<WarpingFunction> sample(10, exp_family_warping(1.5, kGrid));
    FpcaModel model = fpca_fit(sample, CumulativeVariance{0.95});
    CHECK(model.retained_m == 0);
    CHECK(model.total_variance <= 1e-10);
    ClrFunction expected = clr_transform(sample[0]);
    CHECK(testsupport::sup_diff(model.mean.values, expected.values) < 1e-10);

    CHECK_THROWS_AS(fpca_fit(sample, FixedCount{2}), DegenerateSample);

    // resampling a zero-variance model returns the common warping
    std::vector<WarpingFunction> re = fpca_resample(model, 5, 99);
    for (const auto& g : re)
        CHECK(testsupport::sup_diff(g.values, sample[0].values) < 1e-6);
}

TEST_CASE("simulation 2: two components explain most variance", "[fpca]") {
    std::vector<WarpingFunction> sample = sim2_sample(500, 77, kGrid);
    FpcaModel model = fpca_fit(sample, FixedCount{5});
    REQUIRE(model.retained_m >= 2);
    double lead = model.eigenpairs[0].first + model.eigenpairs[1].first;
    CHECK(lead / model.total_variance >= 0.99);
}

TEST_CASE("scores of the mean are zero and reconstruction is tight", "[fpca]") {
    std::vector<double> a = sim1_parameters(200, 5);
    std::vector<WarpingFunction> sample = sim1_sample(a, kGrid);
    FpcaModel model = fpca_fit(sample, CumulativeVariance{0.999});

    WarpingFunction mean_warp = clr_inverse(model.mean);
    for (double s : fpca_scores(model, mean_warp)) CHECK(std::abs(s) < 1e-8);

    // truncation bound on a training member
    double tail = std::max(0.0, model.total_variance);
    for (const auto& [lambda, e] : model.eigenpairs) tail -= lambda;
    double bound = std::sqrt(std::max(tail, 0.0)) + 1e-6;
    const double dt = kGrid.dt();
    for (int i : {0, 7, 42}) {
        std::vector<double> recon = model.mean.values;
        std::vector<double> target = clr_transform(sample[i]).values;
        for (int k = 0; k < model.retained_m; ++k)
            for (int j = 0; j < kGrid.n_points(); ++j)
                recon[j] += model.scores(i, k) * model.eigenpairs[k].second.values[j];
        std::vector<double> diff(recon.size());
        for (std::size_t j = 0; j < recon.size(); ++j) diff[j] = recon[j] - target[j];
        CHECK(l2_norm(diff, dt) <= bound + 1e-9);
    }
}

TEST_CASE("eigen identity and score correlations", "[fpca]") {
    std::vector<WarpingFunction> sample = sim2_sample(300, 31, kGrid);
    FpcaModel model = fpca_fit(sample, FixedCount{6});

    // trace of the sample covariance, computed independently
    const int n = kGrid.n_points();
    const int N = static_cast<int>(sample.size());
    std::vector<std::vector<double>> clrv;
    clrv.reserve(N);
    for (const auto& g : sample) clrv.push_back(clr_transform(g).values);
    std::vector<double> mean(n, 0.0);
    for (const auto& x : clrv)
        for (int j = 0; j < n; ++j) mean[j] += x[j];
    for (double& x : mean) x /= N;
    std::vector<double> var(n, 0.0);
    for (const auto& x : clrv)
        for (int j = 0; j < n; ++j) var[j] += (x[j] - mean[j]) * (x[j] - mean[j]);
    for (double& x : var) x /= (N - 1);
    double trace = trapezoid(var, kGrid.dt());
    CHECK(model.total_variance == Catch::Approx(trace).epsilon(1e-6));

    // empirical decorrelation of training scores
    for (int p = 0; p < model.retained_m; ++p) {
        for (int q = 0; q < p; ++q) {
            double mp = model.scores.col(p).mean(), mq = model.scores.col(q).mean();
            double num = 0.0, dp = 0.0, dq = 0.0;
            for (int i = 0; i < N; ++i) {
                num += (model.scores(i, p) - mp) * (model.scores(i, q) - mq);
                dp += (model.scores(i, p) - mp) * (model.scores(i, p) - mp);
                dq += (model.scores(i, q) - mq) * (model.scores(i, q) - mq);
            }
            if (dp > 0 && dq > 0)
                CHECK(std::abs(num / std::sqrt(dp * dq)) <= 4.0 / std::sqrt(N));
        }
    }

    // score columns are near zero-mean with variance near lambda
    for (int k = 0; k < model.retained_m; ++k) {
        double lambda = model.eigenpairs[k].first;
        double m = model.scores.col(k).mean();
        double v = (model.scores.col(k).array() - m).square().sum() / (N - 1);
        CHECK(std::abs(m) <= 3.0 * std::sqrt(lambda / N) + 1e-12);
        CHECK(std::abs(v - lambda) <= 3.0 * lambda * std::sqrt(2.0 / (N - 1.0)) + 1e-12);
    }
}

TEST_CASE("fit is invariant to input ordering", "[fpca]") {
    std::vector<WarpingFunction> sample = sim2_sample(60, 13, kGrid);
    FpcaModel a = fpca_fit(sample, FixedCount{3});
    std::vector<WarpingFunction> shuffled = sample;
    std::mt19937_64 mt(99);
    std::shuffle(shuffled.begin(), shuffled.end(), mt);
    FpcaModel b = fpca_fit(shuffled, FixedCount{3});

    CHECK(a.mean.values == b.mean.values);
    REQUIRE(a.retained_m == b.retained_m);
    for (int k = 0; k < a.retained_m; ++k) {
        CHECK(a.eigenpairs[k].first == b.eigenpairs[k].first);
        CHECK(a.eigenpairs[k].second.values == b.eigenpairs[k].second.values);
        CHECK(dist_to_json(a.coeff_models[k]) == dist_to_json(b.coeff_models[k]));
    }
}

TEST_CASE("eigenfunction sign convention", "[fpca]") {
    std::vector<WarpingFunction> sample = sim2_sample(100, 17, kGrid);
    FpcaModel model = fpca_fit(sample, FixedCount{3});
    const double dt = kGrid.dt();
    for (const auto& [lambda, e] : model.eigenpairs) {
        const int h = (kGrid.n_points() - 1) / 2;
        double half = 0.5 * (e.values[0] + e.values[h]) * dt;
        for (int i = 1; i < h; ++i) half += e.values[i] * dt;
        CHECK(half >= -1e-12);
    }
}

TEST_CASE("resampled scores match training scores distributionally", "[fpca]") {
    std::vector<double> a = sim1_parameters(500, 1234);
    std::vector<WarpingFunction> sample = sim1_sample(a, kGrid);
    FpcaModel model =
        fpca_fit(sample, CumulativeVariance{0.95}, {CoeffFit::CenteredExponential});
    REQUIRE(model.retained_m == 1);

    std::vector<double> train(model.scores.col(0).data(),
                              model.scores.col(0).data() + sample.size());
    int passes = 0;
    const double critical = testsupport::ks_two_sample_critical(500, 500, 0.01);
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        std::vector<WarpingFunction> re = fpca_resample(model, 500, 56000 + seed);
        std::vector<double> zs(re.size());
        for (std::size_t i = 0; i < re.size(); ++i) zs[i] = fpca_scores(model, re[i])[0];
        if (testsupport::ks_two_sample(train, zs) < critical) ++passes;
    }
    CHECK(passes >= 95);
}

TEST_CASE("resampling is deterministic in the seed", "[fpca]") {
    std::vector<WarpingFunction> sample = sim2_sample(80, 3, kGrid);
    FpcaModel model = fpca_fit(sample, FixedCount{2});
    auto r1 = fpca_resample(model, 7, 1000);
    auto r2 = fpca_resample(model, 7, 1000);
    REQUIRE(r1.size() == r2.size());
    for (std::size_t i = 0; i < r1.size(); ++i) CHECK(r1[i].values == r2[i].values);
}
