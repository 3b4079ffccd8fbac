#pragma once

// Evolutionary dynamics of competing products: micro-level purchase/reproduction, replicator
// equation, Fisher-Pry substitution and the mean-price drift law.

#include <cmath>
#include <cstddef>
#include <utility>
#include <vector>

#include "evomarket/errors.hpp"
#include "evomarket/market_core.hpp"
#include "evomarket/ode.hpp"

namespace evomarket {

/// One model (business unit) on the market.
struct Product {
    double y = 0.0;     ///< unit-sales density
    double x = 0.0;     ///< density of available products
    double mu = 0.0;    ///< real price
    double eta = 1.0;   ///< preference parameter
    double gamma = 0.0; ///< reproduction coefficient (excess supply per unit sold)

    /// Supply density s = (gamma + 1) y.
    double supply() const { return (gamma + 1.0) * y; }

    void validate() const {
        detail::require(y >= 0.0, "Product: y must be non-negative");
        detail::require(x >= 0.0, "Product: x must be non-negative");
        detail::require(eta > 0.0, "Product: eta must be positive");
        detail::require(supply() >= 0.0, "Product: supply must be non-negative");
    }
};

/// Density of potential adopters, split into first-purchase and repurchase parts.
struct DemandState {
    double psi = 0.0;
    double psi_f = 0.0;
    double psi_r = 0.0;
    double q = 0.0;    ///< creation rate of potential adopters
    double psi0 = 0.0; ///< q / sum(eta x)

    void validate() const {
        detail::require(psi >= 0.0 && psi_f >= 0.0 && psi_r >= 0.0, "DemandState: densities must be non-negative");
        detail::require(std::abs(psi - psi_f - psi_r) <= 1e-9 * std::max(1.0, psi),
                        "DemandState: psi must equal psi_f + psi_r");
    }
};

/// Fast time tau = epsilon * t.
struct Clock {
    double tau = 0.0;
    double epsilon = 0.01;

    double years() const { return tau / epsilon; }
};

struct Population {
    std::vector<Product> products;
    Clock clock;

    std::size_t size() const { return products.size(); }

    double total_sales() const {
        double s = 0.0;
        for (const auto& p : products) s += p.y;
        return s;
    }

    double total_supply() const {
        double s = 0.0;
        for (const auto& p : products) s += p.supply();
        return s;
    }

    double total_available() const {
        double s = 0.0;
        for (const auto& p : products) s += p.x;
        return s;
    }

    std::vector<double> shares() const {
        const double yt = total_sales();
        std::vector<double> m;
        m.reserve(products.size());
        for (const auto& p : products) m.push_back(yt > 0.0 ? p.y / yt : 0.0);
        return m;
    }

    void validate() const {
        detail::require(clock.epsilon > 0.0 && clock.epsilon <= 0.1,
                        "Population: epsilon must lie in (0, 0.1]");
        for (const auto& p : products) p.validate();
    }
};

/// Product fitness f = eta gamma psi0 v(mu).
inline double fitness(const Product& prod, double psi0, const MarketStructure& m) {
    detail::require(psi0 > 0.0, "fitness: psi0 must be positive");
    return prod.eta * prod.gamma * psi0 * market_volume(RealPrice{prod.mu}, m);
}

namespace detail {

inline double require_sales(const Population& pop, const char* who) {
    if (pop.products.empty()) throw domain_error(std::string(who) + ": empty population");
    const double yt = pop.total_sales();
    if (!(yt > 0.0)) throw domain_error(std::string(who) + ": zero total sales");
    return yt;
}

} // namespace detail

/// Sales-weighted mean fitness.
inline double mean_fitness(const Population& pop, double psi0, const MarketStructure& m) {
    const double yt = detail::require_sales(pop, "mean_fitness");
    double s = 0.0;
    for (const auto& p : pop.products) s += p.y * fitness(p, psi0, m);
    return s / yt;
}

/// Growth rates r_i = f_i - <f>; their sales-weighted mean is zero.
inline std::vector<double> growth_rates(const Population& pop, double psi0, const MarketStructure& m) {
    const double fbar = mean_fitness(pop, psi0, m);
    std::vector<double> r;
    r.reserve(pop.size());
    for (const auto& p : pop.products) r.push_back(fitness(p, psi0, m) - fbar);
    return r;
}

/// Sales-weighted mean real price.
inline RealPrice sales_mean_price(const Population& pop) {
    const double yt = detail::require_sales(pop, "sales_mean_price");
    double s = 0.0;
    for (const auto& p : pop.products) s += p.y * p.mu;
    return RealPrice{s / yt};
}

/// Sales-weighted price variance.
inline double price_variance(const Population& pop) {
    const double yt = detail::require_sales(pop, "price_variance");
    const double mean = sales_mean_price(pop).value;
    double s = 0.0;
    for (const auto& p : pop.products) s += p.y * (p.mu - mean) * (p.mu - mean);
    return s / yt;
}

/** One replicator step dy_i/dtau = (f_i - <f>) y_i over `dtau`.
 *
 * The shares are integrated with RK4 and rescaled to the pre-step total, which keeps y_t constant
 * exactly. A product with zero sales stays at zero.
 */
inline Population replicator_step(const Population& pop, double dtau, double psi0, const MarketStructure& m) {
    detail::require(dtau > 0.0, "replicator_step: dtau must be positive");
    const double yt = detail::require_sales(pop, "replicator_step");
    const std::size_t n = pop.size();
    std::vector<double> f(n);
    for (std::size_t i = 0; i < n; ++i) f[i] = fitness(pop.products[i], psi0, m);

    std::vector<double> shares = pop.shares();
    auto rhs = [&f, n](double, const std::vector<double>& s, std::vector<double>& ds) {
        double total = 0.0, fbar = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            total += s[i];
            fbar += s[i] * f[i];
        }
        fbar /= total;
        for (std::size_t i = 0; i < n; ++i) ds[i] = (f[i] - fbar) * s[i];
    };
    rk4_step(rhs, pop.clock.tau, shares, dtau);
    if (!all_finite(shares)) throw integration_error("replicator_step: non-finite shares");

    double total = 0.0;
    for (double s : shares) {
        if (s < 0.0) throw step_size_error("replicator_step: step produced negative sales");
        total += s;
    }
    Population out = pop;
    for (std::size_t i = 0; i < n; ++i) out.products[i].y = yt * shares[i] / total;
    out.clock.tau += dtau;
    return out;
}

/// psi_S = q v(<mu>) / sum(eta x).
inline double stationary_psi(double q, double volume, double sum_eta_x) {
    detail::require(sum_eta_x > 0.0, "stationary_psi: sum(eta x) must be positive");
    return q * volume / sum_eta_x;
}

/// sum(eta x): the decay rate of perturbations of psi around its stationary value.
inline double relaxation_rate(const Population& pop) {
    double s = 0.0;
    for (const auto& p : pop.products) s += p.eta * p.x;
    return s;
}

/// Potential-adopter level that makes the micro dynamics stationary for the current population.
inline double stationary_psi(const Population& pop, double q, const MarketStructure& m) {
    double wx = 0.0, wxmu = 0.0;
    for (const auto& p : pop.products) {
        wx += p.eta * p.x;
        wxmu += p.eta * p.x * p.mu;
    }
    detail::require(wx > 0.0, "stationary_psi: no available products");
    return stationary_psi(q, market_volume(RealPrice{wxmu / wx}, m), wx);
}

/** Micro-level dynamics over `dtau`:
 *   y_i = eta_i x_i psi,  dx_i/dtau = gamma_i y_i,  dpsi/dtau = q v(<mu>) - y_t.
 *
 * Purchases deplete the first-purchase and repurchase parts of psi in proportion; newly created
 * potential adopters are repurchase demand. Integrated with RK4.
 */
inline std::pair<Population, DemandState> micro_step(const Population& pop, const DemandState& demand,
                                                     double dtau, const MarketStructure& m) {
    detail::require(dtau > 0.0, "micro_step: dtau must be positive");
    const std::size_t n = pop.size();
    detail::require(n > 0, "micro_step: empty population");

    // state: x_0..x_{n-1}, psi_f, psi_r
    std::vector<double> state(n + 2);
    for (std::size_t i = 0; i < n; ++i) state[i] = pop.products[i].x;
    state[n] = demand.psi_f;
    state[n + 1] = demand.psi_r;

    auto rhs = [&](double, const std::vector<double>& s, std::vector<double>& ds) {
        const double psi = s[n] + s[n + 1];
        double yt = 0.0, wx = 0.0, wxmu = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const auto& p = pop.products[i];
            const double y = p.eta * s[i] * psi;
            ds[i] = p.gamma * y;
            yt += y;
            wx += p.eta * s[i];
            wxmu += p.eta * s[i] * p.mu;
        }
        const double mean_mu = wx > 0.0 ? wxmu / wx : 0.0;
        const double d = demand.q * market_volume(RealPrice{mean_mu}, m);
        const double frac_f = psi > 0.0 ? s[n] / psi : 0.0;
        ds[n] = -yt * frac_f;
        ds[n + 1] = d - yt * (1.0 - frac_f);
    };
    rk4_step(rhs, pop.clock.tau, state, dtau);
    if (!all_finite(state)) throw integration_error("micro_step: non-finite state");
    for (double v : state)
        if (v < 0.0) throw step_size_error("micro_step: step produced a negative density");

    Population out = pop;
    DemandState dout = demand;
    dout.psi_f = state[n];
    dout.psi_r = state[n + 1];
    dout.psi = dout.psi_f + dout.psi_r;
    double wx = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        auto& p = out.products[i];
        p.x = state[i];
        p.y = p.eta * p.x * dout.psi;
        wx += p.eta * p.x;
    }
    dout.psi0 = wx > 0.0 ? demand.q / wx : 0.0;
    out.clock.tau += dtau;
    return {std::move(out), dout};
}

/// Share of product 1 under a constant fitness advantage: ln(m1/m2) = theta eps t + C_m.
inline double fisher_pry_share(double t, double theta, double C_m, double epsilon = 1.0) {
    return 1.0 / (1.0 + std::exp(-(theta * epsilon * t + C_m)));
}

/** d<mu>/dtau = f'(<mu>) Var(P_mu), with f' = <eta gamma psi0> dv/dmu at the sales mean price.
 *
 * Zero variance (a single price) freezes the mean price.
 */
inline double mean_price_drift(const Population& pop, double psi0, const MarketStructure& m) {
    const double yt = detail::require_sales(pop, "mean_price_drift");
    double egp = 0.0;
    for (const auto& p : pop.products) egp += p.y * p.eta * p.gamma * psi0;
    egp /= yt;
    const RealPrice mean = sales_mean_price(pop);
    return egp * market_volume_gradient(mean, m) * price_variance(pop);
}

} // namespace evomarket
