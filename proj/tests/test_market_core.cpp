#include <cmath>
#include <limits>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <gtest/gtest.h>

#include "evomarket/market_core.hpp"

using namespace evomarket;

TEST(MarketVolume, FlatUpToMinimumPrice) {
    const MarketStructure m = MarketStructure::with_upper_share(0.1, 0.3, 0.2);
    EXPECT_DOUBLE_EQ(market_volume(RealPrice{0.0}, m), 1.0);
    EXPECT_DOUBLE_EQ(market_volume(RealPrice{0.3}, m), 1.0);
    EXPECT_DOUBLE_EQ(market_volume_gradient(RealPrice{0.1}, m), 0.0);
    // continuous at mu_m
    EXPECT_NEAR(market_volume(RealPrice{0.3 + 1e-12}, m), 1.0, 1e-12);
}

TEST(MarketVolume, TendsToUpperClassShare) {
    const MarketStructure m = MarketStructure::with_upper_share(0.04, 0.0, 0.5);
    EXPECT_NEAR(market_volume(RealPrice{20.0}, m), 0.04, 1e-15);
    // one theta above mu_m: m_U + m_L e^{-1/2}
    EXPECT_NEAR(market_volume(RealPrice{0.5}, m), 0.04 + 0.96 * std::exp(-0.5), 1e-15);
}

TEST(MarketVolume, GradientMatchesFiniteDifference) {
    const MarketStructure m = MarketStructure::with_upper_share(0.02, 0.1, 0.25);
    for (double mu : {0.12, 0.2, 0.35, 0.6, 1.0}) {
        const double h = 1e-6;
        const double fd = (market_volume(RealPrice{mu + h}, m) - market_volume(RealPrice{mu - h}, m)) / (2 * h);
        EXPECT_NEAR(market_volume_gradient(RealPrice{mu}, m), fd, 1e-8) << "mu = " << mu;
        EXPECT_LT(market_volume_gradient(RealPrice{mu}, m), 0.0);
    }
}

TEST(MarketVolume, RejectsInconsistentStructure) {
    EXPECT_THROW((MarketStructure{0.5, 0.6, 0.0, 1.0}.validate()), domain_error);
    EXPECT_THROW((MarketStructure{0.02, 0.98, -0.1, 1.0}.validate()), domain_error);
    EXPECT_THROW(MarketStructure::with_upper_share(0.02, 0.0, 0.0), domain_error);
    EXPECT_THROW(MarketStructure::with_upper_share(1.2, 0.0, 1.0), domain_error);
}

TEST(Income, DensityIsNormalizedWithMeanI) {
    boost::math::quadrature::exp_sinh<double> q;
    const double I = 3.7;
    const double mass = q.integrate([&](double h) { return income_pdf(h, I); });
    const double mean = q.integrate([&](double h) { return h * income_pdf(h, I); });
    EXPECT_NEAR(mass, 1.0, 1e-10);
    EXPECT_NEAR(mean, I, 1e-9);
    EXPECT_THROW(income_pdf(-1.0, I), domain_error);
    EXPECT_THROW(income_pdf(1.0, 0.0), domain_error);
}

TEST(Income, GeometricGrowthAndRealPrice) {
    const IncomeModel us{4400.0, 0.05, 1954.5};
    EXPECT_DOUBLE_EQ(mean_income(0.0, us), 4400.0);
    EXPECT_NEAR(mean_income(10.0, us), 4400.0 * std::pow(1.05, 10), 1e-9);
    EXPECT_NEAR(real_price(880.0, 4400.0).value, 0.2, 1e-15);
    EXPECT_THROW(real_price(1.0, 0.0), domain_error);
    EXPECT_THROW((IncomeModel{-1.0, 0.0, 0.0}.validate()), domain_error);
    EXPECT_THROW((IncomeModel{1.0, -1.5, 0.0}.validate()), domain_error);
    EXPECT_LT(RealPrice{0.1}, RealPrice{0.2});
}
