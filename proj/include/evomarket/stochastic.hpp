#pragma once

// Monte-Carlo layer: Langevin price fluctuations and their Laplace stationary law, growth-rate and
// size distributions, and the investment jump process of the reproduction coefficient.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <random>
#include <span>
#include <vector>

#include "evomarket/errors.hpp"
#include "evomarket/random.hpp"

namespace evomarket {

/// Price fluctuations around the mean: restoring force -b sign(dmu) plus white noise of strength D.
struct PriceNoiseParams {
    double b = 1.0;
    double D = 1.0;

    void validate() const {
        detail::require(b > 0.0, "PriceNoiseParams: b must be positive");
        detail::require(D > 0.0, "PriceNoiseParams: D must be positive");
    }

    /// F(dmu) = -b sign(dmu), with sign(0) = 0.
    double force(double dmu) const { return dmu > 0.0 ? -b : (dmu < 0.0 ? b : 0.0); }

    /// Generalized potential 2 b |dmu| / D; the stationary density is proportional to exp(-potential).
    double potential(double dmu) const { return 2.0 * b * std::abs(dmu) / D; }

    /// Relaxation time D / b^2 of the price distribution.
    double relaxation_time() const { return D / (b * b); }

    /// Default Euler-Maruyama step 1e-3 relaxation times.
    double default_dt() const { return 1e-3 * relaxation_time(); }
};

/** Visits an Euler-Maruyama path dmu <- dmu + F(dmu) dt + sqrt(D dt) xi, xi ~ N(0, 1).
 *
 * The first `burn_in` steps are discarded; `visit(x)` then receives the state after each of the
 * following `steps` steps.
 */
template <class Visit>
void langevin_price_walk(const PriceNoiseParams& p, double dt, std::size_t steps, std::uint64_t seed,
                         Visit&& visit, double x0 = 0.0, std::size_t burn_in = 0) {
    p.validate();
    detail::require(dt > 0.0, "langevin_price_sim: dt must be positive");
    detail::require(steps >= 1, "langevin_price_sim: steps must be at least 1");
    Rng rng = make_rng(seed);
    std::normal_distribution<double> xi(0.0, 1.0);
    const double amp = std::sqrt(p.D * dt);
    double x = x0;
    for (std::size_t i = 0; i < burn_in; ++i) x += p.force(x) * dt + amp * xi(rng);
    for (std::size_t i = 0; i < steps; ++i) {
        x += p.force(x) * dt + amp * xi(rng);
        visit(x);
    }
}

inline std::vector<double> langevin_price_sim(const PriceNoiseParams& p, double dt, std::size_t steps,
                                              std::uint64_t seed, double x0 = 0.0, std::size_t burn_in = 0) {
    std::vector<double> path;
    path.reserve(steps);
    langevin_price_walk(p, dt, steps, seed, [&path](double x) { path.push_back(x); }, x0, burn_in);
    return path;
}

/// Burn-in of 10 relaxation times expressed in steps of `dt`.
inline std::size_t langevin_burn_in_steps(const PriceNoiseParams& p, double dt) {
    return static_cast<std::size_t>(std::ceil(10.0 * p.relaxation_time() / dt));
}

// ---------------------------------------------------------------------------------------------
// Laplace law

/// Stationary density (b/D) exp(-2 b |x| / D).
inline double laplace_pdf(double x, double b, double D) {
    detail::require(b > 0.0 && D > 0.0, "laplace_pdf: b and D must be positive");
    return b / D * std::exp(-2.0 * b * std::abs(x) / D);
}

/// Scale D / (2 b) of the stationary law.
inline double laplace_scale(double b, double D) { return D / (2.0 * b); }

/// Variance D^2 / (2 b^2) of the stationary law.
inline double laplace_variance(double b, double D) { return D * D / (2.0 * b * b); }

/// Laplace CDF in (location, scale) form.
inline double laplace_cdf(double x, double location, double scale) {
    const double z = (x - location) / scale;
    return z < 0.0 ? 0.5 * std::exp(z) : 1.0 - 0.5 * std::exp(-z);
}

struct LaplaceFit {
    double location = 0.0;
    double scale = 0.0;
};

/// Maximum-likelihood Laplace fit: lower median and mean absolute deviation from it.
inline LaplaceFit laplace_fit(std::span<const double> samples) {
    if (samples.size() < 2) throw domain_error("laplace_fit: at least two samples required");
    std::vector<double> s(samples.begin(), samples.end());
    const std::size_t mid = (s.size() - 1) / 2;
    std::nth_element(s.begin(), s.begin() + static_cast<std::ptrdiff_t>(mid), s.end());
    const double med = s[mid];
    double mad = 0.0;
    for (double x : samples) mad += std::abs(x - med);
    return {med, mad / static_cast<double>(samples.size())};
}

/// Kolmogorov-Smirnov distance sup |F_n - F| of the samples to a reference CDF.
template <class Cdf>
double ks_statistic(std::span<const double> samples, Cdf&& cdf) {
    detail::require(!samples.empty(), "ks_statistic: no samples");
    std::vector<double> s(samples.begin(), samples.end());
    std::sort(s.begin(), s.end());
    const double n = static_cast<double>(s.size());
    double d = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        const double f = cdf(s[i]);
        d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
    }
    return d;
}

// ---------------------------------------------------------------------------------------------
// Growth rates and sizes

/// Log growth rate ln(y_next / y_prev).
inline double growth_rate_transform(double y_prev, double y_next) {
    detail::require(y_prev > 0.0 && y_next > 0.0, "growth_rate_transform: sales must be positive");
    return std::log(y_next / y_prev);
}

struct SizeDistParams {
    double u = 0.0;     ///< log drift per unit time
    double omega = 1.0; ///< log volatility per sqrt(time)
    double y0 = 1.0;

    void validate() const {
        detail::require(omega > 0.0, "SizeDistParams: omega must be positive");
        detail::require(y0 > 0.0, "SizeDistParams: y0 must be positive");
    }
};

/// Lognormal density of sizes: ln(y / y0) ~ Normal(u t, omega^2 t).
inline double lognormal_size_pdf(double y, double t, const SizeDistParams& p) {
    p.validate();
    detail::require(y > 0.0 && t > 0.0, "lognormal_size_pdf: y and t must be positive");
    const double var = p.omega * p.omega * t;
    const double z = std::log(y / p.y0) - p.u * t;
    return std::exp(-z * z / (2.0 * var)) / (y * std::sqrt(2.0 * std::numbers::pi * var));
}

/// Final sizes of `n_units` units grown by y <- y exp(r), r = rate_sampler(rng), over `steps` steps.
template <class Sampler>
std::vector<double> multiplicative_growth_sim(std::size_t n_units, std::size_t steps, Sampler&& rate_sampler,
                                              std::uint64_t seed, double y0 = 1.0) {
    detail::require(n_units >= 1, "multiplicative_growth_sim: n_units must be at least 1");
    detail::require(y0 > 0.0, "multiplicative_growth_sim: y0 must be positive");
    Rng rng = make_rng(seed);
    std::vector<double> y(n_units, y0);
    for (std::size_t s = 0; s < steps; ++s)
        for (double& v : y) v *= std::exp(rate_sampler(rng));
    return y;
}

struct Moments {
    double mean = 0.0;
    double variance = 0.0;
    double skewness = 0.0;
    double excess_kurtosis = 0.0;
};

/// Population moments (1/n normalization).
inline Moments moments(std::span<const double> x) {
    detail::require(x.size() >= 2, "moments: at least two samples required");
    const double n = static_cast<double>(x.size());
    double mean = 0.0;
    for (double v : x) mean += v;
    mean /= n;
    double m2 = 0.0, m3 = 0.0, m4 = 0.0;
    for (double v : x) {
        const double d = v - mean;
        const double d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    Moments m;
    m.mean = mean;
    m.variance = m2;
    if (m2 > 0.0) {
        m.skewness = m3 / std::pow(m2, 1.5);
        m.excess_kurtosis = m4 / (m2 * m2) - 3.0;
    }
    return m;
}

// ---------------------------------------------------------------------------------------------
// Reproduction coefficient with investment jumps

/** d gamma = -chi gamma dtau + noise_amp dW + kappa dN, N Poisson with rate 1 / t_A.
 *
 * The profit quantities set the jump rate: a profit flow G = g y amortizes an investment of size K
 * in t_A = K / G, so a higher profit per unit g raises the long-run mean kappa / (t_A chi).
 */
struct ReproductionSimParams {
    double chi = 10.0;     ///< compensation rate
    double kappa = 0.05;   ///< mean jump per investment
    double t_A = 100.0;    ///< amortization time
    double noise_amp = -1; ///< negative: default 0.01 sqrt(2 chi), a stationary spread of 0.01

    void validate() const {
        detail::require(chi > 0.0, "ReproductionSimParams: chi must be positive");
        detail::require(t_A > 0.0, "ReproductionSimParams: t_A must be positive");
        detail::require(kappa >= 0.0, "ReproductionSimParams: kappa must be non-negative");
    }

    double noise() const { return noise_amp < 0.0 ? 0.01 * std::sqrt(2.0 * chi) : noise_amp; }

    /// Amortization time of an investment K financed from the profit flow G.
    static double amortization_time(double K, double G) {
        detail::require(K > 0.0 && G > 0.0, "amortization_time: K and G must be positive");
        return K / G;
    }

    /// Long-run mean kappa / (t_A chi).
    double long_run_mean() const { return kappa / (t_A * chi); }
};

struct ReproductionPath {
    double dt = 0.0;
    std::vector<double> gamma;           ///< state after each step
    std::vector<std::size_t> jump_steps; ///< steps at which a jump landed
};

inline ReproductionPath reproduction_param_sim(const ReproductionSimParams& p, double dt, std::size_t steps,
                                               std::uint64_t seed, double gamma0 = 0.0) {
    p.validate();
    detail::require(dt > 0.0, "reproduction_param_sim: dt must be positive");
    if (!(dt * p.chi < 0.5)) throw step_size_error("reproduction_param_sim: dt * chi must stay below 0.5");
    Rng rng = make_rng(seed);
    std::normal_distribution<double> xi(0.0, 1.0);
    std::poisson_distribution<int> jumps(dt / p.t_A);
    const double amp = p.noise() * std::sqrt(dt);

    ReproductionPath out;
    out.dt = dt;
    out.gamma.reserve(steps);
    double g = gamma0;
    for (std::size_t i = 0; i < steps; ++i) {
        g += -p.chi * g * dt;
        if (amp > 0.0) g += amp * xi(rng);
        const int n = jumps(rng);
        if (n > 0) {
            g += p.kappa * n;
            out.jump_steps.push_back(i);
        }
        out.gamma.push_back(g);
    }
    return out;
}

/// Time average of the whole path.
inline double path_mean(const ReproductionPath& path) {
    detail::require(!path.gamma.empty(), "path_mean: empty path");
    double s = 0.0;
    for (double v : path.gamma) s += v;
    return s / static_cast<double>(path.gamma.size());
}

struct WindowStats {
    std::size_t windows = 0;
    double mean = 0.0;     ///< mean of the window averages
    double std_error = 0.0;
};

/** Averages over consecutive windows of `window` time units that contain no jump and start at least
 * `settle` time units after the previous one; summarizes the window means.
 */
inline WindowStats short_window_stats(const ReproductionPath& path, double window, double settle) {
    detail::require(window > 0.0 && settle >= 0.0, "short_window_stats: bad window");
    const auto w = static_cast<std::size_t>(std::llround(window / path.dt));
    const auto s = static_cast<std::size_t>(std::llround(settle / path.dt));
    detail::require(w >= 1, "short_window_stats: window shorter than a step");
    std::vector<double> means;
    std::size_t next_jump = 0;
    std::size_t last_jump_end = 0; // first step that is settled after the latest jump
    std::size_t i = 0;
    while (i + w <= path.gamma.size()) {
        while (next_jump < path.jump_steps.size() && path.jump_steps[next_jump] < i) {
            last_jump_end = path.jump_steps[next_jump] + s + 1;
            ++next_jump;
        }
        if (i < last_jump_end) {
            i = last_jump_end;
            continue;
        }
        if (next_jump < path.jump_steps.size() && path.jump_steps[next_jump] < i + w) {
            i = path.jump_steps[next_jump] + s + 1;
            continue;
        }
        double acc = 0.0;
        for (std::size_t j = i; j < i + w; ++j) acc += path.gamma[j];
        means.push_back(acc / static_cast<double>(w));
        i += w;
    }
    WindowStats st;
    st.windows = means.size();
    if (means.empty()) return st;
    double m = 0.0;
    for (double v : means) m += v;
    m /= static_cast<double>(means.size());
    st.mean = m;
    if (means.size() > 1) {
        double var = 0.0;
        for (double v : means) var += (v - m) * (v - m);
        var /= static_cast<double>(means.size() - 1);
        st.std_error = std::sqrt(var / static_cast<double>(means.size()));
    }
    return st;
}

} // namespace evomarket
