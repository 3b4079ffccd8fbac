#include <cmath>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <gtest/gtest.h>

#include "evomarket/diffusion.hpp"
#include "evomarket/table1.hpp"

using namespace evomarket;

namespace {
double central_diff(auto f, double t, double h = 1e-5) { return (f(t + h) - f(t - h)) / (2 * h); }
} // namespace

TEST(Bass, RateIsDerivativeOfPenetration) {
    for (const auto& row : {table1::colour_tv(), table1::fax(), table1::bw_tv(), table1::vcr()}) {
        const BassParams p = row.bass();
        for (double t : {0.5, 2.0, 5.0, 9.0}) {
            const double fd = central_diff([&](double s) { return bass_penetration(s, p); }, t);
            EXPECT_NEAR(bass_rate(t, p), fd, 1e-8 * std::max(1.0, fd)) << row.name << " t = " << t;
        }
    }
}

TEST(Bass, RateIntegratesToPenetration) {
    const BassParams p{0.02, 2.5, 0.18};
    const double integral =
        boost::math::quadrature::gauss_kronrod<double, 31>::integrate([&](double t) { return bass_rate(t, p); }, 0.0, 12.0);
    EXPECT_NEAR(integral, bass_penetration(12.0, p), 1e-12);
}

TEST(Bass, LimitsAndPeak) {
    const BassParams p{0.001, 1.8, 0.01};
    EXPECT_DOUBLE_EQ(bass_penetration(0.0, p), 0.0);
    EXPECT_NEAR(bass_penetration(60.0, p), p.n_B0, 1e-15);
    EXPECT_NEAR(bass_rate(0.0, p), p.A * p.n_B0, 1e-15);
    // grid search oracle for the peak
    double best_t = 0.0, best = -1.0;
    for (double t = 0.0; t < 10.0; t += 1e-4)
        if (bass_rate(t, p) > best) best = bass_rate(t, p), best_t = t;
    EXPECT_NEAR(bass_peak_time(p), best_t, 2e-4);
    EXPECT_EQ(bass_peak_time(BassParams{0.5, 0.2, 0.1}), 0.0);
    EXPECT_THROW(bass_penetration(-1.0, p), domain_error);
}

TEST(Bass, OdeMatchesClosedForm) {
    const BassParams p = table1::fax().bass();
    const AdoptionCurve c = bass_ode(p, 20.0, 1e-3);
    ASSERT_EQ(c.size(), 20001u);
    for (std::size_t i = 0; i < c.size(); i += 997) {
        EXPECT_NEAR(c.penetration[i], bass_penetration(c.t[i], p), 1e-10);
        EXPECT_NEAR(c.rate[i], bass_rate(c.t[i], p), 1e-9);
    }
    // homogeneous market: the plateau is the whole population
    const AdoptionCurve h = bass_ode(BassParams{0.03, 0.4, 1.0}, 5.0, 1e-3);
    EXPECT_NEAR(h.penetration.back(), bass_penetration(5.0, BassParams{0.03, 0.4, 1.0}), 1e-12);
    EXPECT_THROW(bass_ode(p, 1.0, 0.0), domain_error);
}

TEST(Bass, CurveIsZeroBeforeLaunch) {
    const std::vector<double> t{-2.0, -0.5, 0.0, 1.0};
    const AdoptionCurve c = bass_curve(BassParams{0.01, 1.0, 0.5}, t, 1976.0);
    EXPECT_EQ(c.penetration[0], 0.0);
    EXPECT_EQ(c.rate[1], 0.0);
    EXPECT_GT(c.rate[2], 0.0);
    EXPECT_EQ(c.origin, 1976.0);
}

TEST(Gompertz, RateIsDerivativeAndPeaksAtOneOverE) {
    const GompertzParams g{0.97, 27.0, 0.103, 0.5};
    for (double t : {1.0, 10.0, 16.0, 30.0}) {
        const double fd = central_diff([&](double s) { return gompertz_penetration(s, g); }, t);
        EXPECT_NEAR(gompertz_rate(t, g), fd, 1e-9);
    }
    const double ti = gompertz_inflection_time(g);
    EXPECT_NEAR(gompertz_penetration(ti, g), g.n_G0 / std::exp(1.0), 1e-14);
    EXPECT_NEAR(central_diff([&](double s) { return gompertz_rate(s, g); }, ti), 0.0, 1e-8);
    EXPECT_NEAR(gompertz_penetration(0.0, g), g.n_G0 * std::exp(-g.k), 1e-25);
}

TEST(Gompertz, ConstantFromPriceIsDimensionless) {
    // k depends only on mu0 / theta
    EXPECT_DOUBLE_EQ(gompertz_k_from_price(2.0, 0.5), gompertz_k_from_price(4.0, 1.0));
    EXPECT_DOUBLE_EQ(gompertz_k_from_price(3.0, 1.0), 4.5);
    EXPECT_NE(gompertz_k_quoted(4.0, 1.0), gompertz_k_quoted(2.0, 0.5));
}

TEST(Gompertz, FromPriceMatchesClosedForm) {
    const MarketStructure m = MarketStructure::with_upper_share(0.02, 0.1, 0.4);
    const PriceDecline d{2.0, 0.1, 0.2};
    Series price = Series::grid(0.0, 0.1, 300);
    for (std::size_t i = 0; i < price.size(); ++i) price.v[i] = mean_price(price.t[i], d).value;
    const AdoptionCurve c = gompertz_from_price(price, m, 0.9);
    const GompertzParams g{0.9, gompertz_k_from_price(d.mu0, m.theta), d.a, 0.0};
    for (std::size_t i = 0; i < c.size(); ++i) EXPECT_NEAR(c.penetration[i], gompertz_penetration(c.t[i], g), 1e-13);
    // interior numerical rate agrees with the analytic rate
    EXPECT_NEAR(c.rate[150], gompertz_rate(c.t[150], g), 1e-3 * gompertz_rate(c.t[150], g));

    Series below = price;
    below.v[3] = 0.05;
    EXPECT_THROW(gompertz_from_price(below, m, 0.9), domain_error);
}

TEST(PriceDecline, HalfLifeAndRates) {
    const PriceDecline d{1.0, 0.2, 0.1};
    EXPECT_NEAR(mean_price(price_half_life(0.1), d).value - 0.2, 0.5, 1e-15);
    const double b = 2.0, D = 0.6;
    EXPECT_NEAR(price_decline_rate_laplace(0.3, 0.98, D, b, 0.5, 0.01),
                price_decline_rate(0.3, 0.98, D * D / (2 * b * b), 0.5, 0.01), 1e-18);
    EXPECT_EQ(price_decline_rate(0.3, 0.98, 0.0, 0.5, 0.01), 0.0);
    EXPECT_THROW(price_decline_rate(0.3, 0.98, -1.0, 0.5, 0.01), domain_error);
    EXPECT_THROW((PriceDecline{1.0, 0.0, 0.0}.validate()), domain_error);
}

TEST(Params, Validation) {
    EXPECT_THROW((BassParams{0.0, 1.0, 0.1}.validate()), domain_error);
    EXPECT_THROW((BassParams{0.01, -1.0, 0.1}.validate()), domain_error);
    EXPECT_THROW((BassParams{0.01, 1.0, 1.5}.validate()), domain_error);
    EXPECT_THROW((GompertzParams{0.9, 0.0, 0.1, 0.0}.validate()), domain_error);
    EXPECT_NO_THROW(table1::bw_tv().bass().validate());
}
