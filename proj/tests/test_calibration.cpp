#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "evomarket/calibration.hpp"
#include "evomarket/optimize.hpp"
#include "evomarket/table1.hpp"

using namespace evomarket;

namespace {
const NoiseModel clean{0.0};
} // namespace

TEST(Optimize, BrentFindsParabolaMinimum) {
    const auto m = minimize_scalar([](double x) { return (x - 1.3) * (x - 1.3) + 2.0; }, -5.0, 5.0, 52);
    EXPECT_NEAR(m.x, 1.3, 1e-7);
    EXPECT_NEAR(m.f, 2.0, 1e-14);
}

TEST(Optimize, WeightedLineFit) {
    const std::vector<double> x{0, 1, 2, 3}, y{1, 3, 5, 7.5}, w{1, 1, 1, 0};
    const LinearFit f = linear_fit(x, y, w);
    EXPECT_NEAR(f.slope, 2.0, 1e-14);
    EXPECT_NEAR(f.intercept, 1.0, 1e-14);
    EXPECT_NEAR(f.sse, 0.0, 1e-24);
    EXPECT_NEAR(fixed_slope_intercept(x, y, 2.0, w), 1.0, 1e-14);
}

TEST(Optimize, NelderMeadRosenbrockInBox) {
    auto rosen = [](const std::array<double, 2>& p) {
        return 100 * std::pow(p[1] - p[0] * p[0], 2) + std::pow(1 - p[0], 2);
    };
    const auto r = nelder_mead<2>(rosen, {-1.2, 1.0}, Box<2>{{-2, -2}, {2, 2}});
    EXPECT_NEAR(r.x[0], 1.0, 1e-5);
    EXPECT_NEAR(r.x[1], 1.0, 1e-5);
    // minimum on the boundary when the box excludes it
    const auto b = nelder_mead<2>(rosen, {-1.2, 0.5}, Box<2>{{-2, -2}, {0.5, 2}});
    EXPECT_NEAR(b.x[0], 0.5, 1e-6);
}

TEST(BoundedLsq, InteriorAndClippedSolutions) {
    const std::vector<std::vector<double>> cols{{1, 1, 1, 1}, {0, 1, 2, 3}};
    const std::vector<double> y{1, 3, 5, 7};
    double sse = -1;
    auto c = detail::bounded_lsq(cols, y, {0, 0}, {10, 10}, &sse);
    ASSERT_TRUE(c);
    EXPECT_NEAR((*c)[0], 1.0, 1e-12);
    EXPECT_NEAR((*c)[1], 2.0, 1e-12);
    EXPECT_NEAR(sse, 0.0, 1e-20);
    // slope capped at 1.5: intercept refits to mean(y - 1.5 x)
    c = detail::bounded_lsq(cols, y, {0, 0}, {10, 1.5}, &sse);
    ASSERT_TRUE(c);
    EXPECT_DOUBLE_EQ((*c)[1], 1.5);
    EXPECT_NEAR((*c)[0], 4.0 - 1.5 * 1.5, 1e-12);
}

TEST(PriceFit, RecoversNoiseFreeDecline) {
    for (const auto& row : {table1::colour_tv(), table1::fax(), table1::bw_tv(), table1::vcr()}) {
        const TimeSeries p = synthesize(SeriesKind::nominal_price, row, clean, 1);
        const PriceFit f = fit_price_decline(p, spec_for(row));
        EXPECT_NEAR(f.a, row.a, 1e-3 * row.a) << row.name;
        EXPECT_NEAR(f.pm_p0, row.pm_p0, 2e-3) << row.name;
    }
}

TEST(PriceFit, DeflationUndoesIncomeGrowth) {
    const auto row = table1::vcr();
    SynthOptions so;
    so.income = table1::us_income();
    const TimeSeries p = synthesize(SeriesKind::nominal_price, row, clean, 1, so);
    FitSpec spec = spec_for(row);
    spec.income = so.income;
    EXPECT_NEAR(fit_price_decline(p, spec).a, row.a, 1e-3 * row.a);
    spec.income.reset();
    EXPECT_GT(std::abs(fit_price_decline(p, spec).a - row.a), 0.01);
}

TEST(PriceFit, TooFewPoints) {
    TimeSeries p{SeriesKind::nominal_price, {1950, 1951, 1952}, {1000, 900, 800}};
    FitSpec spec;
    spec.t0 = 1950;
    spec.p0 = 1000;
    EXPECT_THROW(fit_price_decline(p, spec), fit_error);
}

TEST(GompertzFit, RecoversPureWave) {
    const auto row = table1::colour_tv();
    const GompertzParams g = row.gompertz();
    TimeSeries pen{SeriesKind::penetration, {}, {}};
    for (int i = 0; i < 30; ++i) {
        pen.t.push_back(row.t0 + i);
        const double tp = i - row.dt;
        pen.v.push_back(tp >= 0 ? gompertz_penetration(tp, g) : 0.0);
    }
    const GompertzFit f = fit_gompertz(pen, row.a, spec_for(row));
    EXPECT_NEAR(f.k, row.k, 1e-3 * row.k);
    EXPECT_NEAR(f.n_G0, row.n_G0, 1e-4);
}

TEST(BassFit, RecoversFirstPurchaseRate) {
    const BassParams b{0.004, 1.2, 0.05};
    TimeSeries fp{SeriesKind::first_purchase, {}, {}};
    for (int i = 0; i < 25; ++i) {
        fp.t.push_back(1970 + i);
        fp.v.push_back(bass_rate(i, b));
    }
    FitSpec spec;
    spec.t0 = 1970;
    const BassFit f = fit_bass(fp, spec);
    EXPECT_NEAR(f.A, b.A, 1e-3 * b.A);
    EXPECT_NEAR(f.B, b.B, 1e-3 * b.B);
    EXPECT_NEAR(f.n_B0, b.n_B0, 1e-3 * b.n_B0);
    EXPECT_EQ(f.start_sse.size(), 16u);
    EXPECT_EQ(bass_start_lattice(16, 0.05).size(), 16u);
}

TEST(FisherPry, ExactLogit) {
    const auto row = table1::vhs();
    const TimeSeries s = synthesize(SeriesKind::share, row, clean, 1);
    const FisherPryFit f = fit_fisher_pry(s, spec_for(row));
    EXPECT_NEAR(f.theta, 0.22, 1e-12);
    EXPECT_NEAR(f.C_m, 0.0, 1e-10);
    TimeSeries bad = s;
    bad.v[2] = 1.0;
    EXPECT_THROW(fit_fisher_pry(bad, spec_for(row)), domain_error);
}

TEST(LifecycleFit, RecoversRepurchaseParameters) {
    const auto row = table1::bw_tv();
    const TimeSeries sales = synthesize(SeriesKind::sales, row, clean, 1);
    FitSpec spec = spec_for(row);
    const LifecycleFit f = fit_lifecycle(sales, spec, row.bass(), row.gompertz());
    EXPECT_NEAR(f.Q, row.Q, 0.01);
    EXPECT_NEAR(f.R, row.R, 0.05);
    EXPECT_NEAR(f.t_p, row.t_p, 0.3);
    EXPECT_NEAR(f.Q_prime, row.Q_prime, 0.01);
    EXPECT_NEAR(f.R_prime, row.R_prime, 0.05);
    EXPECT_NEAR(f.t_p_prime, row.t_p_prime, 0.3);
    EXPECT_LT(f.sse, 1e-6);
}

TEST(FitProduct, NoiseFreeRoundTrip) {
    for (const auto& row : {table1::colour_tv(), table1::vcr()}) {
        ProductData d;
        d.prices = synthesize(SeriesKind::nominal_price, row, clean, 1);
        d.penetration = synthesize(SeriesKind::penetration, row, clean, 1);
        d.first_purchase = synthesize(SeriesKind::first_purchase, row, clean, 1);
        const FitResult r = fit_product(d, spec_for(row), std::nullopt, row.name);
        EXPECT_NEAR(r.estimates.a, row.a, 0.01 * row.a) << row.name;
        EXPECT_NEAR(r.estimates.k, row.k, 0.05 * row.k) << row.name;
        EXPECT_NEAR(r.estimates.n_G0, row.n_G0, 0.01) << row.name;
        EXPECT_NEAR(r.estimates.A, row.A, 0.1 * row.A) << row.name;
        EXPECT_NEAR(r.estimates.B, row.B, 0.1 * row.B) << row.name;
        EXPECT_NEAR(r.estimates.n_B0, row.n_B0, 0.1 * row.n_B0) << row.name;
        EXPECT_EQ(r.series_hashes.size(), 3u);
        EXPECT_GE(r.alternations, 1);
    }
}

TEST(FitProduct, NeedsAnInput) {
    EXPECT_THROW(fit_product(ProductData{}, spec_for(table1::vcr())), fit_error);
}

TEST(Synthesize, DeterministicAndNoisy) {
    const auto row = table1::fax();
    const NoiseModel n{0.02};
    const TimeSeries a = synthesize(SeriesKind::penetration, row, n, 4);
    const TimeSeries b = synthesize(SeriesKind::penetration, row, n, 4);
    const TimeSeries c = synthesize(SeriesKind::penetration, row, n, 5);
    EXPECT_EQ(a.v, b.v);
    EXPECT_NE(a.v, c.v);
    EXPECT_EQ(series_hash(a), series_hash(b));
    EXPECT_NE(series_hash(a), series_hash(c));
    for (double v : a.v) EXPECT_LE(v, 1.0);
    const TimeSeries p = synthesize(SeriesKind::nominal_price, row, clean, 1);
    EXPECT_DOUBLE_EQ(p.t.front(), row.t0 + row.dt);
    // p0 normalizes the declining part: p(0) = p0 (1 + p_m/p0)
    EXPECT_DOUBLE_EQ(p.v.front(), 1000.0 * (1.0 + row.pm_p0));
    EXPECT_EQ(a.size(), 30u);
}

TEST(RoundTrip, SmallRunReportsAllParameters) {
    RoundTripOptions opt;
    opt.seeds = 5;
    const RoundTripReport rep = round_trip(table1::fax(), opt);
    EXPECT_EQ(rep.checks.size(), 6u);
    EXPECT_EQ(rep.failures, 0);
    EXPECT_TRUE(rep.pass());
    EXPECT_DOUBLE_EQ(median({3.0, 1.0, 2.0, 10.0}), 2.5);
}
