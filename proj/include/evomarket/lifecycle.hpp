#pragma once

// Product life cycle: first purchase plus multiple and replacement purchase for both waves.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "evomarket/diffusion.hpp"
#include "evomarket/errors.hpp"
#include "evomarket/series.hpp"

namespace evomarket {

/// Distribution of product lifetimes: a sharp delta at t_p or a Gaussian truncated at zero.
struct FailureDistribution {
    enum class Kind { delta, gaussian };

    Kind kind = Kind::delta;
    double t_p = 10.0;
    double sigma = 0.0;

    static FailureDistribution delta(double t_p) { return {Kind::delta, t_p, 0.0}; }
    static FailureDistribution gaussian(double t_p, double sigma) { return {Kind::gaussian, t_p, sigma}; }

    void validate() const {
        detail::require(t_p > 0.0, "FailureDistribution: t_p must be positive");
        if (kind == Kind::gaussian)
            detail::require(sigma > 0.0, "FailureDistribution: sigma must be positive");
    }
};

/// Repurchase parameters of one diffusion wave.
struct WaveParams {
    double Q = 0.0; ///< multiple-purchase rate (1/year)
    double R = 0.0; ///< replaced fraction of earlier sales
    FailureDistribution failure = FailureDistribution::delta(10.0);
    int echoes = 1; ///< recurrent replacement waves included

    void validate() const {
        detail::require(Q >= 0.0, "WaveParams: Q must be non-negative");
        detail::require(R >= 0.0 && R <= 1.0, "WaveParams: R must lie in [0, 1]");
        detail::require(echoes >= 1, "WaveParams: echoes must be at least 1");
        failure.validate();
    }
};

/// Repurchase machinery of the Bass wave and its Gompertz counterpart (the primed parameters).
struct LifecycleParams {
    WaveParams bass;
    WaveParams gompertz;

    void validate() const {
        bass.validate();
        gompertz.validate();
    }
};

namespace detail {

// Lifetime density sampled at m * step, m = 0..; truncated at zero and renormalized so that its
// trapezoid sum over the full support is one.
inline std::vector<double> failure_kernel(const FailureDistribution& g, double step) {
    const double upper = g.t_p + 10.0 * g.sigma;
    const auto n = static_cast<std::size_t>(std::ceil(upper / step)) + 1;
    std::vector<double> k(n);
    for (std::size_t m = 0; m < n; ++m) {
        const double z = (static_cast<double>(m) * step - g.t_p) / g.sigma;
        k[m] = std::exp(-0.5 * z * z);
    }
    double mass = 0.0;
    for (std::size_t m = 0; m < n; ++m) mass += (m == 0 || m + 1 == n ? 0.5 : 1.0) * k[m] * step;
    if (!(mass > 1e-300)) {
        // sigma far below the grid step: all mass on the nearest sample
        std::fill(k.begin(), k.end(), 0.0);
        const auto m = static_cast<std::size_t>(std::llround(g.t_p / step));
        k[m] = (m == 0 ? 2.0 : 1.0) / step;
        return k;
    }
    for (double& x : k) x /= mass;
    return k;
}

inline std::vector<double> replacement_echo(const std::vector<double>& y, double R,
                                            const FailureDistribution& g, double step) {
    const std::size_t n = y.size();
    std::vector<double> out(n, 0.0);
    if (g.kind == FailureDistribution::Kind::delta) {
        const auto lag = static_cast<std::size_t>(std::llround(g.t_p / step));
        for (std::size_t i = lag; i < n; ++i) out[i] = R * y[i - lag];
        return out;
    }
    const auto kernel = failure_kernel(g, step);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t mmax = std::min(i, kernel.size() - 1);
        double acc = 0.0;
        for (std::size_t m = 0; m <= mmax; ++m) {
            const double w = (m == 0 || m == i) ? 0.5 : 1.0;
            acc += w * y[i - m] * kernel[m];
        }
        out[i] = R * acc * step;
    }
    return out;
}

} // namespace detail

/** Replacement sales y_R(t) = R * integral_0^t y_f(t - s) Gamma(s) ds on a uniform grid.
 *
 * Echo j feeds echo j-1 through the same convolution, so a delta lifetime produces impulses damped
 * by R^j at multiples of t_p. The output is the sum of echoes 1..echoes.
 */
inline Series replacement_sales(const Series& y_f, double R, const FailureDistribution& gamma,
                                int echoes = 1) {
    gamma.validate();
    detail::require(echoes >= 1, "replacement_sales: echoes must be at least 1");
    const double step = uniform_step(y_f.t);
    if (gamma.kind == FailureDistribution::Kind::delta) {
        const double lag = std::round(gamma.t_p / step) * step;
        if (std::abs(lag - gamma.t_p) > step)
            throw format_error("replacement_sales: grid step does not resolve t_p");
    }
    Series out = Series::zeros_like(y_f);
    std::vector<double> echo = y_f.v;
    for (int j = 0; j < echoes; ++j) {
        echo = detail::replacement_echo(echo, R, gamma, step);
        for (std::size_t i = 0; i < out.size(); ++i) out.v[i] += echo[i];
    }
    return out;
}

/// Multiple purchase Q * n(t).
inline Series multiple_sales(const Series& n, double Q) {
    Series out = n;
    for (double& x : out.v) x *= Q;
    return out;
}

/// First purchase + multiple purchase + replacement purchase of one wave.
inline Series wave_sales(const AdoptionCurve& curve, const WaveParams& w) {
    if (curve.penetration.size() != curve.t.size() || curve.rate.size() != curve.t.size())
        throw format_error("wave_sales: rate and penetration are not on a shared grid");
    const Series y_f = curve.rate_series();
    const Series ym = multiple_sales(curve.penetration_series(), w.Q);
    const Series yr = replacement_sales(y_f, w.R, w.failure, w.echoes);
    Series out = y_f;
    for (std::size_t i = 0; i < out.size(); ++i) out.v[i] += ym.v[i] + yr.v[i];
    return out;
}

/** Aggregate sales: the Bass wave plus the Gompertz wave shifted by dt0 onto the launch clock.
 *
 * The result spans the union of both supports on the common step; missing samples count as zero.
 */
inline Series total_sales(const Series& bass_wave, const Series& gompertz_wave, double dt0) {
    if (gompertz_wave.empty()) return bass_wave;
    if (bass_wave.empty()) {
        Series s = gompertz_wave;
        for (double& t : s.t) t += dt0;
        return s;
    }
    const double step = uniform_step(bass_wave.t);
    const double step_g = uniform_step(gompertz_wave.t);
    if (std::abs(step - step_g) > 1e-9 * step) throw format_error("total_sales: grid steps differ");
    const double g0 = gompertz_wave.t.front() + dt0;
    const double offset = (g0 - bass_wave.t.front()) / step;
    const double offset_r = std::round(offset);
    if (std::abs(offset - offset_r) > 1e-6) throw format_error("total_sales: shifted grids do not align");

    const double start = std::min(bass_wave.t.front(), g0);
    const double end = std::max(bass_wave.t.back(), gompertz_wave.t.back() + dt0);
    const auto n = static_cast<std::size_t>(std::llround((end - start) / step)) + 1;
    Series out = Series::grid(start, step, n);
    const auto ib = static_cast<std::size_t>(std::llround((bass_wave.t.front() - start) / step));
    const auto ig = static_cast<std::size_t>(std::llround((g0 - start) / step));
    for (std::size_t i = 0; i < bass_wave.size(); ++i) out.v[ib + i] += bass_wave.v[i];
    for (std::size_t i = 0; i < gompertz_wave.size(); ++i) out.v[ig + i] += gompertz_wave.v[i];
    return out;
}

/// All components of a simulated life cycle on the launch clock.
struct LifeCycle {
    AdoptionCurve bass;     ///< launch clock
    AdoptionCurve gompertz; ///< evolutionary clock t' = t - dt0
    Series bass_wave;
    Series gompertz_wave;   ///< evolutionary clock
    Series total;           ///< launch clock
};

/// Evaluates both waves on a uniform grid of `step` over [0, horizon] after launch.
inline LifeCycle simulate_life_cycle(const BassParams& bass, const GompertzParams& gomp,
                                     const LifecycleParams& lp, double horizon, double step = 0.1) {
    bass.validate();
    gomp.validate();
    lp.validate();
    detail::require(step > 0.0 && horizon > step, "simulate_life_cycle: bad grid");
    detail::require(gomp.dt0 >= 0.0 && gomp.dt0 < horizon, "simulate_life_cycle: dt0 outside horizon");
    const auto n = static_cast<std::size_t>(std::llround(horizon / step)) + 1;
    const auto ng = static_cast<std::size_t>(std::llround((horizon - gomp.dt0) / step)) + 1;
    const Series grid = Series::grid(0.0, step, n);
    const Series grid_g = Series::grid(0.0, step, ng);

    LifeCycle lc;
    lc.bass = bass_curve(bass, grid.t);
    lc.gompertz = gompertz_curve(gomp, grid_g.t, gomp.dt0);
    lc.bass_wave = wave_sales(lc.bass, lp.bass);
    lc.gompertz_wave = wave_sales(lc.gompertz, lp.gompertz);
    lc.total = total_sales(lc.bass_wave, lc.gompertz_wave, gomp.dt0);
    return lc;
}

/// Indices of strict local maxima of a sampled curve.
inline std::vector<std::size_t> local_maxima(const std::vector<double>& v) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 1; i + 1 < v.size(); ++i) {
        if (v[i] > v[i - 1] && v[i] >= v[i + 1]) idx.push_back(i);
    }
    return idx;
}

} // namespace evomarket
