#pragma once

// Small deterministic optimizers used by the fits.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <utility>
#include <vector>

#include <boost/math/tools/minima.hpp>

#include "evomarket/errors.hpp"

namespace evomarket {

struct Minimum1D {
    double x = 0.0;
    double f = 0.0;
};

/// Bracketed scalar minimization (Brent: golden section with parabolic steps).
template <class F>
Minimum1D minimize_scalar(F&& f, double lo, double hi, int bits = 40) {
    detail::require(lo <= hi, "minimize_scalar: empty bracket");
    if (lo == hi) return {lo, f(lo)};
    std::uintmax_t iters = 200;
    const auto r = boost::math::tools::brent_find_minima(f, lo, hi, bits, iters);
    return {r.first, r.second};
}

struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
    double sse = 0.0; ///< weighted residual sum of squares
};

/// Weighted least-squares line y = intercept + slope x. Empty weights mean unit weights.
inline LinearFit linear_fit(std::span<const double> x, std::span<const double> y, std::span<const double> w = {}) {
    detail::require(x.size() == y.size(), "linear_fit: size mismatch");
    detail::require(w.empty() || w.size() == x.size(), "linear_fit: weight size mismatch");
    double sw = 0.0, sx = 0.0, sy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double wi = w.empty() ? 1.0 : w[i];
        sw += wi;
        sx += wi * x[i];
        sy += wi * y[i];
    }
    detail::require(sw > 0.0, "linear_fit: no weight");
    const double mx = sx / sw, my = sy / sw;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double wi = w.empty() ? 1.0 : w[i];
        sxx += wi * (x[i] - mx) * (x[i] - mx);
        sxy += wi * (x[i] - mx) * (y[i] - my);
    }
    detail::require(sxx > 0.0, "linear_fit: abscissae are all equal");
    LinearFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double wi = w.empty() ? 1.0 : w[i];
        const double r = y[i] - f.intercept - f.slope * x[i];
        f.sse += wi * r * r;
    }
    return f;
}

/// Weighted least-squares intercept of y = intercept + slope x with the slope held fixed.
inline double fixed_slope_intercept(std::span<const double> x, std::span<const double> y, double slope,
                                    std::span<const double> w = {}) {
    double sw = 0.0, s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double wi = w.empty() ? 1.0 : w[i];
        sw += wi;
        s += wi * (y[i] - slope * x[i]);
    }
    detail::require(sw > 0.0, "fixed_slope_intercept: no weight");
    return s / sw;
}

template <std::size_t N>
struct Box {
    std::array<double, N> lo{};
    std::array<double, N> hi{};

    std::array<double, N> clamp(std::array<double, N> x) const {
        for (std::size_t i = 0; i < N; ++i) x[i] = std::clamp(x[i], lo[i], hi[i]);
        return x;
    }
};

template <std::size_t N>
struct SimplexResult {
    std::array<double, N> x{};
    double f = std::numeric_limits<double>::infinity();
    int evaluations = 0;
};

struct SimplexOptions {
    double initial_step = 0.1; ///< relative to the box width
    double ftol = 1e-14;       ///< relative spread of simplex values
    double xtol = 1e-10;       ///< simplex diameter relative to the box width
    int max_evaluations = 4000;
    int restarts = 2;          ///< fresh simplices around the incumbent after convergence
};

/** Nelder-Mead minimization inside a box; trial points are projected onto the box.
 *
 * Deterministic: ties among vertices keep their previous order.
 */
template <std::size_t N, class F>
SimplexResult<N> nelder_mead(F&& f, std::array<double, N> start, const Box<N>& box, const SimplexOptions& opt = {}) {
    SimplexResult<N> best;
    start = box.clamp(start);
    auto eval = [&](const std::array<double, N>& p) {
        ++best.evaluations;
        const double v = f(p);
        return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
    };
    std::array<double, N> width{};
    for (std::size_t i = 0; i < N; ++i) width[i] = box.hi[i] - box.lo[i];

    for (int round = 0; round <= opt.restarts; ++round) {
        std::array<std::array<double, N>, N + 1> s{};
        std::array<double, N + 1> fv{};
        s[0] = start;
        for (std::size_t i = 0; i < N; ++i) {
            s[i + 1] = start;
            const double h = opt.initial_step * width[i];
            s[i + 1][i] = start[i] + h <= box.hi[i] ? start[i] + h : start[i] - h;
        }
        for (std::size_t i = 0; i <= N; ++i) fv[i] = eval(s[i]);

        std::array<std::size_t, N + 1> order{};
        while (best.evaluations < opt.max_evaluations) {
            std::iota(order.begin(), order.end(), std::size_t{0});
            std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return fv[a] < fv[b]; });
            {
                auto s2 = s;
                auto f2 = fv;
                for (std::size_t i = 0; i <= N; ++i) {
                    s[i] = s2[order[i]];
                    fv[i] = f2[order[i]];
                }
            }
            double diam = 0.0;
            for (std::size_t i = 1; i <= N; ++i)
                for (std::size_t j = 0; j < N; ++j)
                    diam = std::max(diam, std::abs(s[i][j] - s[0][j]) / (width[j] > 0.0 ? width[j] : 1.0));
            const double spread = std::abs(fv[N] - fv[0]);
            if (std::isfinite(fv[N]) && spread <= opt.ftol * (std::abs(fv[0]) + 1e-300) && diam <= 1e-4) break;
            if (diam <= opt.xtol) break;

            std::array<double, N> c{};
            for (std::size_t i = 0; i < N; ++i)
                for (std::size_t j = 0; j < N; ++j) c[j] += s[i][j] / static_cast<double>(N);
            auto along = [&](double t) {
                std::array<double, N> p{};
                for (std::size_t j = 0; j < N; ++j) p[j] = c[j] + t * (s[N][j] - c[j]);
                return box.clamp(p);
            };
            const auto xr = along(-1.0);
            const double fr = eval(xr);
            if (fr < fv[0]) {
                const auto xe = along(-2.0);
                const double fe = eval(xe);
                if (fe < fr) {
                    s[N] = xe;
                    fv[N] = fe;
                } else {
                    s[N] = xr;
                    fv[N] = fr;
                }
            } else if (fr < fv[N - 1]) {
                s[N] = xr;
                fv[N] = fr;
            } else {
                const bool outside = fr < fv[N];
                const auto xc = along(outside ? -0.5 : 0.5);
                const double fc = eval(xc);
                if (fc < (outside ? fr : fv[N])) {
                    s[N] = xc;
                    fv[N] = fc;
                } else {
                    for (std::size_t i = 1; i <= N; ++i) {
                        for (std::size_t j = 0; j < N; ++j) s[i][j] = s[0][j] + 0.5 * (s[i][j] - s[0][j]);
                        fv[i] = eval(s[i]);
                    }
                }
            }
        }
        std::size_t ib = 0;
        for (std::size_t i = 1; i <= N; ++i)
            if (fv[i] < fv[ib]) ib = i;
        const bool improved = fv[ib] < best.f;
        if (improved) {
            best.x = s[ib];
            best.f = fv[ib];
        }
        if (best.evaluations >= opt.max_evaluations) break;
        if (round > 0 && !improved) break;
        start = best.x;
    }
    return best;
}

} // namespace evomarket
