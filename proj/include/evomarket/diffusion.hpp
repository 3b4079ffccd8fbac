#pragma once

// Bass diffusion, exponential mean-price decline and Gompertz diffusion.

#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "evomarket/errors.hpp"
#include "evomarket/market_core.hpp"
#include "evomarket/ode.hpp"
#include "evomarket/series.hpp"

namespace evomarket {

/// Bass triple: innovation rate A, imitation rate B (1/year), plateau n_B0 = v(mu0).
struct BassParams {
    double A = 0.01;
    double B = 1.0;
    double n_B0 = 0.1;

    void validate() const {
        detail::require(A > 0.0, "BassParams: A must be positive");
        detail::require(B >= 0.0, "BassParams: B must be non-negative");
        detail::require(n_B0 > 0.0 && n_B0 <= 1.0, "BassParams: n_B0 must lie in (0, 1]");
    }
};

/// <mu>(t) = mu0 exp(-a t) + mu_m.
struct PriceDecline {
    double mu0 = 1.0;
    double mu_m = 0.0;
    double a = 0.1;

    void validate() const {
        detail::require(mu0 >= 0.0, "PriceDecline: mu0 must be non-negative");
        detail::require(a > 0.0, "PriceDecline: a must be positive");
    }
};

/// n_G(t') = n_G0 exp(-k exp(-2 a t')), with the evolutionary clock t' starting dt0 after launch.
struct GompertzParams {
    double n_G0 = 0.9;
    double k = 10.0;
    double a = 0.1;
    double dt0 = 0.0;

    void validate() const {
        detail::require(n_G0 > 0.0, "GompertzParams: n_G0 must be positive");
        detail::require(k > 0.0, "GompertzParams: k must be positive");
        detail::require(a > 0.0, "GompertzParams: a must be positive");
    }
};

/// Penetration n(t) and adoption rate dn/dt on a time grid. `origin` is the calendar year of t = 0.
struct AdoptionCurve {
    std::vector<double> t;
    std::vector<double> penetration;
    std::vector<double> rate;
    double origin = 0.0;

    std::size_t size() const { return t.size(); }
    Series penetration_series() const { return Series{t, penetration}; }
    Series rate_series() const { return Series{t, rate}; }
};

// ---------------------------------------------------------------------------------------------
// Bass

inline double bass_penetration(double t, const BassParams& p) {
    detail::require(t >= 0.0, "bass_penetration: t must be non-negative");
    const double e = std::exp(-(p.A + p.B) * t);
    return p.n_B0 * (1.0 - e) / (1.0 + (p.B / p.A) * e);
}

inline double bass_rate(double t, const BassParams& p) {
    detail::require(t >= 0.0, "bass_rate: t must be non-negative");
    const double s = p.A + p.B;
    const double e = std::exp(-s * t);
    const double den = p.A + p.B * e;
    return p.n_B0 * p.A * s * s * e / (den * den);
}

/// Time of the sales peak; zero when imitation does not dominate innovation (B <= A).
inline double bass_peak_time(const BassParams& p) {
    if (p.B <= p.A) return 0.0;
    return std::log(p.B / p.A) / (p.A + p.B);
}

/** RK4 integration of the Bass equation from n(0) = 0.
 *
 * dn/dt = (A + B n / n_B0)(n_B0 - n): potential adopters are limited to the market volume
 * n_B0 = v(mu0) and imitation acts through the adopted fraction of that volume. This is the
 * equation whose exact solution is bass_penetration(); it reduces to the homogeneous-market form
 * (A + B n)(1 - n) at n_B0 = 1. A zero plateau yields the zero curve.
 */
inline AdoptionCurve bass_ode(const BassParams& p, double horizon, double step = 1e-3) {
    detail::require(step > 0.0, "bass_ode: step must be positive");
    detail::require(horizon >= step, "bass_ode: horizon must be at least one step");
    const auto n_steps = static_cast<std::size_t>(std::llround(horizon / step));
    AdoptionCurve c;
    c.t.resize(n_steps + 1);
    c.penetration.assign(n_steps + 1, 0.0);
    c.rate.assign(n_steps + 1, 0.0);
    for (std::size_t i = 0; i <= n_steps; ++i) c.t[i] = static_cast<double>(i) * step;
    if (p.n_B0 == 0.0) return c;

    auto rhs = [&p](double, const std::array<double, 1>& x, std::array<double, 1>& dx) {
        dx[0] = (p.A + p.B * x[0] / p.n_B0) * (p.n_B0 - x[0]);
    };
    std::array<double, 1> x{0.0};
    std::array<double, 1> dx{};
    rhs(0.0, x, dx);
    c.rate[0] = dx[0];
    for (std::size_t i = 1; i <= n_steps; ++i) {
        rk4_step(rhs, c.t[i - 1], x, step);
        if (!all_finite(x)) throw integration_error("bass_ode: non-finite state");
        c.penetration[i] = x[0];
        rhs(c.t[i], x, dx);
        c.rate[i] = dx[0];
    }
    return c;
}

/// Closed-form Bass curve sampled on `times` (years since launch).
inline AdoptionCurve bass_curve(const BassParams& p, std::span<const double> times, double origin = 0.0) {
    AdoptionCurve c;
    c.origin = origin;
    c.t.assign(times.begin(), times.end());
    for (double t : times) {
        const bool live = t >= 0.0;
        c.penetration.push_back(live ? bass_penetration(t, p) : 0.0);
        c.rate.push_back(live ? bass_rate(t, p) : 0.0);
    }
    return c;
}

// ---------------------------------------------------------------------------------------------
// Mean price

inline RealPrice mean_price(double t, const PriceDecline& d) {
    return RealPrice{d.mu0 * std::exp(-d.a * t) + d.mu_m};
}

/// Years for mu - mu_m to halve.
inline double price_half_life(double a) { return std::log(2.0) / a; }

/** Price decline rate from the microscopic quantities:
 * a = eps <eta gamma psi0> m_L Var(P_mu) / theta^2.
 * A zero variance (single supplier) freezes the price.
 */
inline double price_decline_rate(double mean_eta_gamma_psi0, double m_L, double price_variance,
                                 double theta, double epsilon) {
    detail::require(price_variance >= 0.0, "price_decline_rate: variance must be non-negative");
    detail::require(theta > 0.0, "price_decline_rate: theta must be positive");
    return epsilon * mean_eta_gamma_psi0 * m_L * price_variance / (theta * theta);
}

/// Same rate with the stationary Laplace variance D^2 / (2 b^2) substituted.
inline double price_decline_rate_laplace(double mean_eta_gamma_psi0, double m_L, double D, double b,
                                         double theta, double epsilon) {
    detail::require(b > 0.0, "price_decline_rate_laplace: b must be positive");
    return epsilon * mean_eta_gamma_psi0 * m_L * D * D / (2.0 * theta * theta * b * b);
}

// ---------------------------------------------------------------------------------------------
// Gompertz

inline double gompertz_penetration(double t_prime, const GompertzParams& g) {
    return g.n_G0 * std::exp(-g.k * std::exp(-2.0 * g.a * t_prime));
}

inline double gompertz_rate(double t_prime, const GompertzParams& g) {
    const double e = std::exp(-2.0 * g.a * t_prime);
    return 2.0 * g.a * g.k * g.n_G0 * std::exp(-g.k * e) * e;
}

/// t' where k exp(-2 a t') = 1; the rate peaks there at cumulative penetration n_G0 / e.
inline double gompertz_inflection_time(const GompertzParams& g) { return std::log(g.k) / (2.0 * g.a); }

/** Gompertz constant implied by an exponential price decline through the Gaussian market volume:
 * k = mu0^2 / (2 theta^2).
 *
 * The derivation is sometimes quoted as k = (mu0 / (2 theta^2))^2, which is not dimensionless;
 * gompertz_k_quoted() evaluates that form for comparison only.
 */
inline double gompertz_k_from_price(double mu0, double theta) { return mu0 * mu0 / (2.0 * theta * theta); }

inline double gompertz_k_quoted(double mu0, double theta) {
    const double r = mu0 / (2.0 * theta * theta);
    return r * r;
}

/// Closed-form Gompertz curve on `times` measured on the evolutionary clock t'.
inline AdoptionCurve gompertz_curve(const GompertzParams& g, std::span<const double> times,
                                    double origin = 0.0) {
    AdoptionCurve c;
    c.origin = origin;
    c.t.assign(times.begin(), times.end());
    for (double t : times) {
        c.penetration.push_back(gompertz_penetration(t, g));
        c.rate.push_back(gompertz_rate(t, g));
    }
    return c;
}

/** Adopter density following the market volume at the mean price:
 * n_G(t) = n_G0 exp(-(<mu(t)> - mu_m)^2 / (2 theta^2)).
 *
 * The rate is the numerical time derivative of the resulting penetration on the price grid.
 */
inline AdoptionCurve gompertz_from_price(const Series& mean_price_curve, const MarketStructure& m,
                                         double n_G0, double origin = 0.0) {
    AdoptionCurve c;
    c.origin = origin;
    c.t = mean_price_curve.t;
    c.penetration.reserve(c.t.size());
    const double two_theta2 = 2.0 * m.theta * m.theta;
    for (double mu : mean_price_curve.v) {
        if (mu < m.mu_m) throw domain_error("gompertz_from_price: mean price below mu_m");
        const double d = mu - m.mu_m;
        c.penetration.push_back(n_G0 * std::exp(-d * d / two_theta2));
    }
    c.rate = numerical_derivative(c.t, c.penetration);
    return c;
}

} // namespace evomarket
