#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <gtest/gtest.h>

#include "evomarket/random.hpp"
#include "evomarket/stochastic.hpp"

using namespace evomarket;
namespace bq = boost::math::quadrature;

TEST(Laplace, DensityNormalizedWithClosedFormVariance) {
    bq::exp_sinh<double> half;
    for (auto [b, D] : {std::pair{1.0, 1.0}, {0.5, 2.0}, {3.0, 0.7}}) {
        const double mass = 2.0 * half.integrate([&](double x) { return laplace_pdf(x, b, D); });
        const double var = 2.0 * half.integrate([&](double x) { return x * x * laplace_pdf(x, b, D); });
        EXPECT_NEAR(mass, 1.0, 1e-10);
        EXPECT_NEAR(var, laplace_variance(b, D), 1e-9 * laplace_variance(b, D));
    }
}

TEST(Laplace, CdfIsIntegralOfDensity) {
    const double b = 1.3, D = 0.9, s = laplace_scale(b, D);
    for (double x : {-2.0, -0.3, 0.0, 0.4, 1.7}) {
        // split at the kink
        auto pdf = [&](double u) { return laplace_pdf(u, b, D); };
        const double f = x <= 0.0 ? bq::gauss_kronrod<double, 61>::integrate(pdf, -40.0 * s, x, 15, 1e-14)
                                  : 0.5 + bq::gauss_kronrod<double, 61>::integrate(pdf, 0.0, x, 15, 1e-14);
        EXPECT_NEAR(laplace_cdf(x, 0.0, s), f, 1e-12) << x;
    }
}

TEST(Laplace, FitRecoversDrawnParameters) {
    Rng rng = make_rng(5);
    std::vector<double> xs(200000);
    for (double& x : xs) x = laplace_draw(rng, 0.7, 0.25);
    const LaplaceFit f = laplace_fit(xs);
    EXPECT_NEAR(f.location, 0.7, 0.004);
    EXPECT_NEAR(f.scale, 0.25, 0.003);
    EXPECT_LT(ks_statistic(xs, [](double x) { return laplace_cdf(x, 0.7, 0.25); }), 0.005);
    EXPECT_GT(ks_statistic(xs, [](double x) { return laplace_cdf(x, 0.9, 0.25); }), 0.2);
    EXPECT_THROW(laplace_fit(std::vector<double>{1.0}), domain_error);
}

TEST(Laplace, LowerMedianForEvenSamples) {
    const std::vector<double> xs{4.0, 1.0, 3.0, 2.0};
    const LaplaceFit f = laplace_fit(xs);
    EXPECT_EQ(f.location, 2.0);
    EXPECT_DOUBLE_EQ(f.scale, (2.0 + 1.0 + 0.0 + 1.0) / 4.0);
}

TEST(Langevin, ShortRunIsStationaryLaplace) {
    const PriceNoiseParams p{2.0, 1.0};
    const double dt = 5e-3 * p.relaxation_time();
    const auto path = langevin_price_sim(p, dt, 2'000'000, 3, 0.0, langevin_burn_in_steps(p, dt));
    ASSERT_EQ(path.size(), 2'000'000u);
    const Moments m = moments(path);
    EXPECT_NEAR(m.variance, laplace_variance(p.b, p.D), 0.1 * laplace_variance(p.b, p.D));
    const double scale = laplace_scale(p.b, p.D);
    EXPECT_LT(ks_statistic(path, [&](double x) { return laplace_cdf(x, 0.0, scale); }), 0.02);
    EXPECT_NEAR(m.mean, 0.0, 0.02);
}

TEST(Langevin, DeterministicPerSeed) {
    const PriceNoiseParams p;
    EXPECT_EQ(langevin_price_sim(p, 1e-3, 1000, 9), langevin_price_sim(p, 1e-3, 1000, 9));
    EXPECT_NE(langevin_price_sim(p, 1e-3, 1000, 9), langevin_price_sim(p, 1e-3, 1000, 10));
    EXPECT_EQ(langevin_burn_in_steps(p, 0.01), 1000u);
    EXPECT_EQ(p.force(0.0), 0.0);
    EXPECT_EQ(p.force(0.3), -1.0);
    EXPECT_THROW((PriceNoiseParams{0.0, 1.0}.validate()), domain_error);
}

TEST(Rng, StreamsAreIndependent) {
    Rng a = make_rng(1, 0), b = make_rng(1, 1), c = make_rng(1, 0);
    const auto x = a(), y = b(), z = c();
    EXPECT_NE(x, y);
    EXPECT_EQ(x, z);
}

TEST(Moments, KnownSample) {
    const std::vector<double> xs{1.0, 2.0, 3.0, 4.0, 10.0};
    const Moments m = moments(xs);
    EXPECT_DOUBLE_EQ(m.mean, 4.0);
    EXPECT_DOUBLE_EQ(m.variance, (9.0 + 4.0 + 1.0 + 0.0 + 36.0) / 5.0);
    EXPECT_GT(m.skewness, 0.0);
    const Moments flat = moments(std::vector<double>{2.0, 2.0, 2.0});
    EXPECT_EQ(flat.skewness, 0.0);
}

TEST(Sizes, LognormalDensityNormalized) {
    const SizeDistParams p{0.02, 0.3, 2.0};
    bq::tanh_sinh<double> ts;
    const double mass = ts.integrate([&](double y) { return lognormal_size_pdf(y, 4.0, p); }, 0.0,
                                     std::numeric_limits<double>::infinity());
    EXPECT_NEAR(mass, 1.0, 1e-9);
    EXPECT_THROW(lognormal_size_pdf(-1.0, 1.0, p), domain_error);
    EXPECT_NEAR(growth_rate_transform(2.0, 2.0 * std::exp(0.1)), 0.1, 1e-15);
}

TEST(Sizes, MultiplicativeGrowthMatchesLognormalLaw) {
    const double scale = 0.1;
    const auto y = multiplicative_growth_sim(20000, 50, [&](Rng& r) { return laplace_draw(r, 0.01, scale); }, 4, 1.0);
    std::vector<double> logs;
    for (double v : y) logs.push_back(std::log(v));
    const Moments m = moments(logs);
    EXPECT_NEAR(m.mean, 0.5, 0.02);
    EXPECT_NEAR(m.variance, 50 * 2 * scale * scale, 0.05 * 50 * 2 * scale * scale);
    const SizeDistParams p{0.01, scale * std::sqrt(2.0), 1.0};
    const double ks = ks_statistic(y, [&](double v) {
        return 0.5 * std::erfc(-(std::log(v) - p.u * 50) / (p.omega * std::sqrt(2.0 * 50)));
    });
    EXPECT_LT(ks, 0.02);
}

TEST(Reproduction, StepSizeGuardAndJumps) {
    ReproductionSimParams p;
    EXPECT_THROW(reproduction_param_sim(p, 0.05, 10, 1), step_size_error);
    EXPECT_NEAR(p.noise(), 0.01 * std::sqrt(20.0), 1e-15);
    EXPECT_DOUBLE_EQ(p.long_run_mean(), 5e-5);
    EXPECT_DOUBLE_EQ(ReproductionSimParams::amortization_time(10.0, 4.0), 2.5);
    p.t_A = 1.0;
    const auto path = reproduction_param_sim(p, 0.01, 100000, 2);
    // Poisson count over 1000 time units with rate 1
    EXPECT_NEAR(static_cast<double>(path.jump_steps.size()), 1000.0, 120.0);
}

TEST(Reproduction, ShortWindowsSkipJumps) {
    ReproductionPath path;
    path.dt = 1.0;
    path.gamma.assign(30, 0.0);
    for (std::size_t i = 10; i < 14; ++i) path.gamma[i] = 1.0;
    path.jump_steps = {10};
    const WindowStats ws = short_window_stats(path, 5.0, 4.0);
    // [0,5) and [5,10) end before the jump, then settled from step 15: [15,20), [20,25), [25,30)
    EXPECT_EQ(ws.windows, 5u);
    EXPECT_EQ(ws.mean, 0.0);
    EXPECT_DOUBLE_EQ(path_mean(path), 4.0 / 30.0);
}
