#pragma once

// Income model, real prices and the market-volume curve v(mu).

#include <cmath>

#include "evomarket/errors.hpp"

namespace evomarket {

/// Mean annual income growing geometrically from a reference year.
struct IncomeModel {
    double I0 = 1.0;    ///< mean income at t_ref (currency units)
    double T = 0.0;     ///< annual growth rate
    double t_ref = 0.0; ///< reference calendar year

    void validate() const {
        detail::require(I0 > 0.0, "IncomeModel: I0 must be positive");
        detail::require(T > -1.0, "IncomeModel: T must exceed -1");
    }
};

/// Nominal price divided by mean income.
struct RealPrice {
    double value = 0.0;

    constexpr RealPrice() = default;
    constexpr explicit RealPrice(double v) : value(v) {}

    friend constexpr auto operator<=>(const RealPrice&, const RealPrice&) = default;
};

/** Two-class market structure.
 *
 * The upper class (share m_U) is never price limited; the lower class (share m_L) can afford the
 * good with a Gaussian-shaped chance around the minimum real price mu_m, of width theta.
 */
struct MarketStructure {
    double m_U = 0.02;
    double m_L = 0.98;
    double mu_m = 0.0;
    double theta = 1.0;

    /// Builds a structure whose class shares sum to one.
    static MarketStructure with_upper_share(double m_U, double mu_m, double theta) {
        MarketStructure m{m_U, 1.0 - m_U, mu_m, theta};
        m.validate();
        return m;
    }

    void validate() const {
        detail::require(m_U >= 0.0 && m_U <= 1.0, "MarketStructure: m_U must lie in [0, 1]");
        detail::require(std::abs(m_U + m_L - 1.0) <= 1e-12,
                        "MarketStructure: m_U + m_L must equal 1");
        detail::require(mu_m >= 0.0, "MarketStructure: mu_m must be non-negative");
        detail::require(theta > 0.0, "MarketStructure: theta must be positive");
    }
};

/// Boltzmann-Gibbs income density (1/I) exp(-h/I).
inline double income_pdf(double h, double I) {
    detail::require(I > 0.0, "income_pdf: mean income must be positive");
    detail::require(h >= 0.0, "income_pdf: income must be non-negative");
    return std::exp(-h / I) / I;
}

/// I0 (1+T)^t, with t in years since the model's reference year.
inline double mean_income(double t, const IncomeModel& model) {
    return model.I0 * std::pow(1.0 + model.T, t);
}

inline RealPrice real_price(double p, double I) {
    detail::require(I > 0.0, "real_price: mean income must be positive");
    return RealPrice{p / I};
}

/// Scaled market volume v(mu): 1 up to mu_m, then m_U + m_L exp(-(mu-mu_m)^2 / (2 theta^2)).
inline double market_volume(RealPrice mu, const MarketStructure& m) {
    if (mu.value <= m.mu_m) return 1.0;
    const double d = mu.value - m.mu_m;
    return m.m_U + m.m_L * std::exp(-d * d / (2.0 * m.theta * m.theta));
}

/// dv/dmu; zero in the flat regime mu <= mu_m, negative above it.
inline double market_volume_gradient(RealPrice mu, const MarketStructure& m) {
    if (mu.value <= m.mu_m) return 0.0;
    const double d = mu.value - m.mu_m;
    const double t2 = m.theta * m.theta;
    return -m.m_L * d / t2 * std::exp(-d * d / (2.0 * t2));
}

} // namespace evomarket
