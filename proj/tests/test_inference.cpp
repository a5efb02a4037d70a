#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "test_support.hpp"
#include "warplib/fpca.hpp"
#include "warplib/generative.hpp"
#include "warplib/inference.hpp"

using namespace warplib;
using testsupport::exp_family_warping;

namespace {

const Grid kGrid(201);

std::vector<WarpingFunction> random_warpings(int count, std::uint64_t seed,
                                             char scenario = 'd') {
    GenerativeSpec spec = scenario_spec(scenario, kGrid, 10);
    std::vector<WarpingFunction> out;
    out.reserve(count);
    for (int i = 0; i < count; ++i) out.push_back(sample_warping(spec, seed + i));
    return out;
}

}  // namespace

TEST_CASE("warp_mean basics", "[inference]") {
    WarpingFunction g = exp_family_warping(1.7, kGrid);
    WarpingFunction m1 = warp_mean({g});
    CHECK(testsupport::sup_diff(m1.values, g.values) < 1e-6);

    WarpingFunction m2 =
        warp_mean({exp_family_warping(2.0, kGrid), exp_family_warping(-2.0, kGrid)});
    CHECK(testsupport::sup_dist_to_identity(m2) < 1e-6);

    WarpingFunction m3 =
        warp_mean({exp_family_warping(1.0, kGrid), exp_family_warping(3.0, kGrid)});
    CHECK(testsupport::sup_diff(m3.values, exp_family_warping(2.0, kGrid).values) < 1e-6);
}

TEST_CASE("warp_mean commutes with the isometry", "[inference]") {
    std::vector<WarpingFunction> sample = random_warpings(12, 900);
    WarpingFunction mean = warp_mean(sample);
    std::vector<double> clr_mean(kGrid.n_points(), 0.0);
    for (const auto& g : sample) {
        std::vector<double> h = clr_transform(g).values;
        for (int j = 0; j < kGrid.n_points(); ++j) clr_mean[j] += h[j];
    }
    for (double& x : clr_mean) x /= sample.size();
    CHECK(testsupport::sup_diff(clr_transform(mean).values, clr_mean) <
          testsupport::grid_tol(kGrid));
}

TEST_CASE("fanova rejects obvious differences and accepts copies", "[inference]") {
    std::vector<WarpingFunction> g1 = random_warpings(10, 100, 'e');
    AnovaResult same = fanova_test({g1, g1}, 199, 5);
    CHECK(same.l2_stat <= 1e-12);
    CHECK(same.p_l2 > 0.9);
    CHECK(same.p_f > 0.9);

    // shifted group: perturb by a common warping
    std::vector<WarpingFunction> g2;
    WarpingFunction shift = exp_family_warping(2.0, kGrid);
    for (const auto& g : g1) g2.push_back(warp_perturb(g, shift));
    AnovaResult diff = fanova_test({g1, g2}, 199, 5);
    CHECK(diff.p_l2 <= 0.01);
    CHECK(diff.p_f <= 0.01);
}

TEST_CASE("fanova is invariant to member and group reordering", "[inference]") {
    std::vector<WarpingFunction> g1 = random_warpings(8, 300);
    std::vector<WarpingFunction> g2 = random_warpings(9, 400, 'e');

    AnovaResult base = fanova_test({g1, g2}, 99, 11);

    std::vector<WarpingFunction> g1r(g1.rbegin(), g1.rend());
    AnovaResult reordered = fanova_test({g1r, g2}, 99, 11);
    CHECK(base.f_stat == reordered.f_stat);
    CHECK(base.l2_stat == reordered.l2_stat);
    CHECK(base.p_l2 == reordered.p_l2);
    CHECK(base.p_f == reordered.p_f);

    AnovaResult relabeled = fanova_test({g2, g1}, 99, 11);
    CHECK(base.f_stat == relabeled.f_stat);
    CHECK(base.p_l2 == relabeled.p_l2);
    CHECK(base.p_f == relabeled.p_f);
}

TEST_CASE("fanova input validation", "[inference]") {
    std::vector<WarpingFunction> g1 = random_warpings(4, 700);
    CHECK_THROWS_AS(fanova_test({g1}, 99, 1), TooFewGroups);
    std::vector<WarpingFunction> tiny = {g1[0]};
    CHECK_THROWS_AS(fanova_test({g1, tiny}, 99, 1), TooFewGroups);
}

TEST_CASE("null calibration of the bootstrap p-value", "[inference]") {
    // identically distributed groups; p_l2 should be uniform
    const int runs = 200;
    std::vector<double> pvals(runs);
    for (int r = 0; r < runs; ++r) {
        std::vector<WarpingFunction> g1 = random_warpings(8, 10000 + 97 * r);
        std::vector<WarpingFunction> g2 = random_warpings(8, 20000 + 97 * r);
        pvals[r] = fanova_test({g1, g2}, 99, 555 + r).p_l2;
    }
    auto uniform_cdf = [](double x) { return std::clamp(x, 0.0, 1.0); };
    double ks = testsupport::ks_one_sample(pvals, uniform_cdf);
    // level-0.01 Kolmogorov band plus the 1/(B+1) discretization allowance
    CHECK(ks < 1.6276 / std::sqrt(static_cast<double>(runs)) + 0.01);
}

TEST_CASE("planted linear model is recovered exactly", "[inference]") {
    std::vector<WarpingFunction> sample = random_warpings(40, 1200);
    FpcaModel pca = fpca_fit(sample, FixedCount{3});
    const auto& e1 = pca.eigenpairs[0].second.values;

    std::vector<double> y(sample.size());
    const double dt = kGrid.dt();
    for (std::size_t i = 0; i < sample.size(); ++i) {
        std::vector<double> h = clr_transform(sample[i]).values;
        y[i] = 1.0 + trapezoid_inner(h, e1, dt);
    }
    FunctionalRegressionModel model = fit_linear(sample, y, 3);
    CHECK(model.alpha == Catch::Approx(1.0).margin(1e-6));
    CHECK(testsupport::sup_diff(model.beta.values, e1) < 1e-6);

    for (std::size_t i = 0; i < sample.size(); ++i)
        CHECK(predict(model, sample[i]) == Catch::Approx(y[i]).margin(1e-8));
}

TEST_CASE("constant response gives zero beta", "[inference]") {
    std::vector<WarpingFunction> sample = random_warpings(25, 1300);
    std::vector<double> y(sample.size(), 4.2);
    FunctionalRegressionModel model = fit_linear(sample, y, 2);
    CHECK(model.alpha == Catch::Approx(4.2).margin(1e-9));
    CHECK(sup_norm(model.beta.values) < 1e-9);
}

TEST_CASE("noisy planted model is consistent", "[inference]") {
    const int runs = 100;
    int hits = 0;
    for (int r = 0; r < runs; ++r) {
        std::vector<WarpingFunction> sample = random_warpings(200, 50000 + 977 * r, 'a');
        FpcaModel pca = fpca_fit(sample, FixedCount{2});
        const auto& e1 = pca.eigenpairs[0].second.values;
        std::vector<double> y(sample.size());
        const double dt = kGrid.dt();
        CounterRng noise(42 + r, 424);
        for (std::size_t i = 0; i < sample.size(); ++i) {
            std::vector<double> h = clr_transform(sample[i]).values;
            y[i] = 1.0 + trapezoid_inner(h, e1, dt) + 0.1 * noise.normal();
        }
        FunctionalRegressionModel model = fit_linear(sample, y, 2);
        std::vector<double> diff(e1.size());
        for (std::size_t j = 0; j < e1.size(); ++j)
            diff[j] = model.beta.values[j] - e1[j];
        if (l2_norm(diff, dt) <= 0.05) ++hits;
    }
    CHECK(hits >= 95);
}

TEST_CASE("linear fit residuals are orthogonal to scores", "[inference]") {
    std::vector<WarpingFunction> sample = random_warpings(60, 1500);
    FpcaModel pca = fpca_fit(sample, FixedCount{3});
    std::vector<double> y(sample.size());
    for (std::size_t i = 0; i < sample.size(); ++i)
        y[i] = 0.3 + pca.scores(i, 0) * 2.0 - pca.scores(i, 1) + 0.05 * ((i % 5) - 2.0);
    FunctionalRegressionModel model = fit_linear(sample, y, 3);
    std::vector<double> resid(sample.size());
    for (std::size_t i = 0; i < sample.size(); ++i)
        resid[i] = y[i] - predict(model, sample[i]);
    for (int k = 0; k < 3; ++k) {
        double dot = 0.0;
        for (std::size_t i = 0; i < sample.size(); ++i)
            dot += resid[i] * pca.scores(i, k);
        CHECK(std::abs(dot) < 1e-8 * sample.size());
    }
}

TEST_CASE("logistic fit separates planted classes", "[inference]") {
    // two clusters: gentle warps vs strong warps
    std::vector<WarpingFunction> sample;
    std::vector<int> z;
    for (int i = 0; i < 20; ++i) {
        sample.push_back(exp_family_warping(0.3 + 0.02 * i, kGrid));
        z.push_back(0);
        sample.push_back(exp_family_warping(-2.0 - 0.05 * i, kGrid));
        z.push_back(1);
    }
    FunctionalRegressionModel model = fit_logistic(sample, z, 1);
    int correct = 0;
    for (std::size_t i = 0; i < sample.size(); ++i) {
        double p = predict(model, sample[i]);
        correct += (p > 0.5 ? 1 : 0) == z[i];
    }
    CHECK(correct == static_cast<int>(sample.size()));
    CHECK(model.separation_flag);
}

TEST_CASE("logistic fit on overlapping classes converges", "[inference]") {
    std::vector<WarpingFunction> sample = random_warpings(80, 1700);
    std::vector<int> z(sample.size());
    CounterRng rng(5, 0);
    for (std::size_t i = 0; i < z.size(); ++i) z[i] = rng.uniform() < 0.5 ? 0 : 1;
    FunctionalRegressionModel model = fit_logistic(sample, z, 2);
    CHECK(model.converged);
    CHECK_FALSE(model.separation_flag);
}

TEST_CASE("single class is rejected", "[inference]") {
    std::vector<WarpingFunction> sample = random_warpings(10, 1900);
    std::vector<int> z(sample.size(), 1);
    CHECK_THROWS_AS(fit_logistic(sample, z, 1), SingleClass);
}

TEST_CASE("logistic decision is invariant to constant clr shifts", "[inference]") {
    std::vector<WarpingFunction> sample = random_warpings(30, 2100);
    std::vector<int> z(sample.size());
    for (std::size_t i = 0; i < z.size(); ++i) z[i] = i % 2;
    std::vector<std::vector<double>> x, x_shift;
    for (const auto& g : sample) {
        std::vector<double> h = clr_transform(g).values;
        x.push_back(h);
        for (double& v : h) v += 2.5;
        x_shift.push_back(h);
    }
    FunctionalRegressionModel m0 = fit_logistic_raw(x, z, 2, kGrid);
    FunctionalRegressionModel m1 = fit_logistic_raw(x_shift, z, 2, kGrid);
    for (std::size_t i = 0; i < x.size(); ++i) {
        bool c0 = predict_raw(m0, x[i], kGrid) > 0.5;
        bool c1 = predict_raw(m1, x_shift[i], kGrid) > 0.5;
        CHECK(c0 == c1);
    }
}
