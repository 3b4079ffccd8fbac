#pragma once

// Fitting the diffusion model to price, penetration, first-purchase and share series, synthetic
// fixtures generated from product rows, and their round trips.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "evomarket/diffusion.hpp"
#include "evomarket/errors.hpp"
#include "evomarket/evodyn.hpp"
#include "evomarket/lifecycle.hpp"
#include "evomarket/market_core.hpp"
#include "evomarket/optimize.hpp"
#include "evomarket/random.hpp"
#include "evomarket/series.hpp"
#include "evomarket/table1.hpp"

namespace evomarket {

enum class SeriesKind { nominal_price, penetration, sales, first_purchase, share };

inline constexpr std::array<SeriesKind, 5> all_series_kinds{SeriesKind::nominal_price, SeriesKind::penetration,
                                                            SeriesKind::sales, SeriesKind::first_purchase,
                                                            SeriesKind::share};

inline const char* to_string(SeriesKind k) {
    switch (k) {
    case SeriesKind::nominal_price: return "nominal_price";
    case SeriesKind::penetration: return "penetration";
    case SeriesKind::sales: return "sales";
    case SeriesKind::first_purchase: return "first_purchase";
    case SeriesKind::share: return "share";
    }
    return "?";
}

inline std::optional<SeriesKind> parse_series_kind(std::string_view s) {
    for (auto k : all_series_kinds)
        if (s == to_string(k)) return k;
    return std::nullopt;
}

/// Observations (calendar year, value) of one kind.
struct TimeSeries {
    SeriesKind kind = SeriesKind::sales;
    std::vector<double> t;
    std::vector<double> v;

    std::size_t size() const { return t.size(); }
    bool empty() const { return t.empty(); }

    void validate() const {
        if (t.size() != v.size()) throw format_error("TimeSeries: year and value counts differ");
        for (std::size_t i = 0; i < t.size(); ++i) {
            if (!std::isfinite(t[i]) || !std::isfinite(v[i]))
                throw format_error("TimeSeries: non-finite entry at index " + std::to_string(i));
            if (i > 0 && !(t[i] > t[i - 1]))
                throw format_error("TimeSeries: years not strictly increasing at index " + std::to_string(i));
            const bool unit = kind == SeriesKind::penetration || kind == SeriesKind::share;
            if (unit && (v[i] < 0.0 || v[i] > 1.0))
                throw range_error(std::string("TimeSeries: ") + to_string(kind) + " value outside [0, 1] at index " +
                                  std::to_string(i));
            if (kind == SeriesKind::nominal_price && v[i] < 0.0)
                throw range_error("TimeSeries: negative price at index " + std::to_string(i));
        }
    }
};

/// FNV-1a over the kind and the raw bytes of the samples.
inline std::uint64_t series_hash(const TimeSeries& s) {
    std::uint64_t h = 1469598103934665603ull;
    auto feed = [&h](const void* p, std::size_t n) {
        const auto* b = static_cast<const unsigned char*>(p);
        for (std::size_t i = 0; i < n; ++i) {
            h ^= b[i];
            h *= 1099511628211ull;
        }
    };
    const auto k = static_cast<std::uint32_t>(s.kind);
    feed(&k, sizeof k);
    for (std::size_t i = 0; i < s.size(); ++i) {
        feed(&s.t[i], sizeof(double));
        feed(&s.v[i], sizeof(double));
    }
    return h;
}

enum class LifecycleOptimizer { grid_linear, simplex };

/** Analyst choices for a fit.
 *
 * The evolutionary clock starts at t0 + dt. With `n_max` set, the plateaus obey the household
 * normalization n_B0 + n_G0 = n_max and only k is fitted for the Gompertz wave; without it
 * n_G0 is free.
 */
struct FitSpec {
    double t0 = 0.0;
    double dt = 0.0;
    double p0 = 1.0;
    std::optional<IncomeModel> income;
    LifecycleOptimizer optimizer = LifecycleOptimizer::simplex;
    int starts = 16;
    std::optional<double> window_end; ///< last calendar year used by the Bass fit
    std::optional<double> n_max;
    double n_B0_tol = 1e-4;
    int max_alternations = 20;
    int echoes = 1;

    double evolution_start() const { return t0 + dt; }

    void validate() const {
        detail::require(std::isfinite(t0), "FitSpec: t0 must be finite");
        detail::require(dt >= 0.0, "FitSpec: dt must be non-negative");
        detail::require(p0 > 0.0, "FitSpec: p0 must be positive");
        detail::require(starts >= 1, "FitSpec: at least one start required");
        detail::require(max_alternations >= 1, "FitSpec: at least one alternation required");
        detail::require(echoes >= 1, "FitSpec: echoes must be at least 1");
        if (n_max) detail::require(*n_max > 0.0 && *n_max <= 1.0, "FitSpec: n_max must lie in (0, 1]");
        if (income) income->validate();
    }
};

// ---------------------------------------------------------------------------------------------
// Price decline

struct PriceFit {
    double a = 0.0;
    double pm_p0 = 0.0;
    double intercept = 0.0; ///< ln mu'(0); zero for a perfectly normalized p0
    double sse = 0.0;       ///< on log prices
};

/// Nominal prices deflated to the income level at the start of the evolutionary clock.
inline TimeSeries deflate_prices(const TimeSeries& prices, const IncomeModel& income, double t_start) {
    income.validate();
    TimeSeries out = prices;
    const double base = mean_income(t_start - income.t_ref, income);
    for (std::size_t i = 0; i < out.size(); ++i) out.v[i] *= base / mean_income(out.t[i] - income.t_ref, income);
    return out;
}

/// mu'(t') = (p(t') - p_m) / p0 on the points with t' >= 0, deflated first when an income model is set.
inline TimeSeries price_function(const TimeSeries& prices, const FitSpec& spec, double pm_p0) {
    detail::require(spec.p0 > 0.0, "price_function: p0 must be positive");
    detail::require(pm_p0 >= 0.0 && pm_p0 < 1.0, "price_function: p_m/p0 must lie in [0, 1)");
    const TimeSeries p = spec.income ? deflate_prices(prices, *spec.income, spec.evolution_start()) : prices;
    TimeSeries out;
    out.kind = SeriesKind::nominal_price;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double tp = p.t[i] - spec.evolution_start();
        if (tp < -1e-9) continue;
        out.t.push_back(tp);
        out.v.push_back((p.v[i] - pm_p0 * spec.p0) / spec.p0);
    }
    return out;
}

namespace detail {

struct PriceCandidate {
    bool feasible = false;
    PriceFit fit;
};

// Inner linear step at fixed p_m/p0: regression of ln mu' on t', weighted so that residuals
// approximate log-price residuals; the score is the log-price SSE over all points.
inline PriceCandidate price_candidate(const TimeSeries& mu, double pm_p0) {
    PriceCandidate c;
    std::vector<double> x, y, w;
    for (std::size_t i = 0; i < mu.size(); ++i) {
        if (!(mu.v[i] > 0.0)) continue;
        const double p_rel = mu.v[i] + pm_p0;
        x.push_back(mu.t[i]);
        y.push_back(std::log(mu.v[i]));
        w.push_back((mu.v[i] / p_rel) * (mu.v[i] / p_rel));
    }
    if (x.size() < 2) return c;
    LinearFit lf;
    try {
        lf = linear_fit(x, y, w);
    } catch (const domain_error&) {
        return c;
    }
    if (!(-lf.slope > 0.0)) return c;
    c.fit.a = -lf.slope;
    c.fit.pm_p0 = pm_p0;
    c.fit.intercept = lf.intercept;
    double sse = 0.0;
    for (std::size_t i = 0; i < mu.size(); ++i) {
        const double p_rel = mu.v[i] + pm_p0;
        const double model = pm_p0 + std::exp(lf.intercept - c.fit.a * mu.t[i]);
        const double r = std::log(std::max(p_rel, 1e-300)) - std::log(model);
        sse += r * r;
    }
    c.fit.sse = sse;
    c.feasible = true;
    return c;
}

} // namespace detail

/** Grid over p_m/p0 in {0, 0.01, ..., 0.99} with a closed-form decline rate at each point, then a
 * bracketed refinement around the best grid value.
 */
inline PriceFit fit_price_decline(const TimeSeries& prices, const FitSpec& spec) {
    spec.validate();
    const TimeSeries mu0 = price_function(prices, spec, 0.0);
    if (mu0.size() < 4) throw fit_error("fit_price_decline: fewer than 4 prices after the evolution start");
    auto at = [&](double g) {
        TimeSeries mu = mu0;
        for (double& v : mu.v) v -= g;
        return detail::price_candidate(mu, g);
    };
    std::optional<PriceFit> best;
    for (int i = 0; i <= 99; ++i) {
        const auto c = at(0.01 * i);
        if (c.feasible && (!best || c.fit.sse < best->sse)) best = c.fit;
    }
    if (!best) throw fit_error("fit_price_decline: no feasible p_m/p0 (prices do not decline)");
    const double lo = std::max(0.0, best->pm_p0 - 0.01);
    const double hi = std::min(0.999, best->pm_p0 + 0.01);
    const auto m = minimize_scalar(
        [&](double g) {
            const auto c = at(g);
            return c.feasible ? c.fit.sse : std::numeric_limits<double>::max();
        },
        lo, hi);
    const auto refined = at(m.x);
    if (refined.feasible && refined.fit.sse <= best->sse) best = refined.fit;
    return *best;
}

// ---------------------------------------------------------------------------------------------
// Gompertz

struct GompertzFit {
    double k = 0.0;
    double n_G0 = 0.0;
    double sse = 0.0;
    std::size_t points = 0;
};

namespace detail {

struct GompertzCandidate {
    bool feasible = false;
    double k = 0.0;
    double sse = 0.0;
};

// ln(-ln(n / n_G0)) = ln k - 2 a t' is linear with a known slope; the intercept is weighted by the
// local sensitivity (n ln u)^2 so that it approximates the natural-scale least-squares k. Points at
// or above the candidate plateau carry no information about k and are left out of that step.
inline GompertzCandidate gompertz_candidate(std::span<const double> tp, std::span<const double> n, double a,
                                            double n_G0) {
    GompertzCandidate c;
    std::vector<double> x, y, w;
    for (std::size_t i = 0; i < tp.size(); ++i) {
        if (!(n[i] > 0.0) || !(n[i] < n_G0)) continue;
        const double lu = std::log(n[i] / n_G0);
        x.push_back(tp[i]);
        y.push_back(std::log(-lu));
        w.push_back((n[i] * lu) * (n[i] * lu));
    }
    if (x.size() < 2) return c;
    double sw = 0.0;
    for (double v : w) sw += v;
    if (!(sw > 0.0)) return c;
    c.k = std::exp(fixed_slope_intercept(x, y, -2.0 * a, w));
    const GompertzParams g{n_G0, c.k, a, 0.0};
    for (std::size_t i = 0; i < tp.size(); ++i) {
        const double r = n[i] - gompertz_penetration(tp[i], g);
        c.sse += r * r;
    }
    c.feasible = std::isfinite(c.sse);
    return c;
}

} // namespace detail

/** Nested Gompertz fit with the decline rate `a` held fixed.
 *
 * `background` is subtracted from the penetration first (the Bass wave during alternation). Only
 * points on or after the evolution start enter. n_G0 runs over a grid of 0.005 then a bracketed
 * refinement, unless the household normalization pins it to n_max - n_B0.
 */
inline GompertzFit fit_gompertz(const TimeSeries& penetration, double a, const FitSpec& spec,
                                std::span<const double> background = {}, double n_B0 = 0.0) {
    spec.validate();
    detail::require(a > 0.0, "fit_gompertz: a must be positive");
    detail::require(background.empty() || background.size() == penetration.size(),
                    "fit_gompertz: background size mismatch");
    std::vector<double> tp, n;
    for (std::size_t i = 0; i < penetration.size(); ++i) {
        const double t = penetration.t[i] - spec.evolution_start();
        if (t < -1e-9) continue;
        tp.push_back(t);
        n.push_back(penetration.v[i] - (background.empty() ? 0.0 : background[i]));
    }
    if (tp.size() < 3) throw fit_error("fit_gompertz: fewer than 3 penetration points after the evolution start");

    auto finish = [&](double c, const detail::GompertzCandidate& g) {
        return GompertzFit{g.k, c, g.sse, tp.size()};
    };
    if (spec.n_max) {
        const double c = *spec.n_max - n_B0;
        if (!(c > 0.0)) throw fit_error("fit_gompertz: n_max leaves no room for the Gompertz wave");
        const auto g = detail::gompertz_candidate(tp, n, a, c);
        if (!g.feasible) throw fit_error("fit_gompertz: normalized plateau is infeasible");
        return finish(c, g);
    }

    const double step = 0.005;
    const double top = std::max(1.0, 1.2 * *std::max_element(n.begin(), n.end()));
    std::optional<std::pair<double, detail::GompertzCandidate>> best;
    for (int i = 1; step * i <= top + 1e-12; ++i) {
        const double c = step * i;
        const auto g = detail::gompertz_candidate(tp, n, a, c);
        if (g.feasible && (!best || g.sse < best->second.sse)) best = {c, g};
    }
    if (!best) throw fit_error("fit_gompertz: no feasible plateau n_G0");
    const auto m = minimize_scalar(
        [&](double c) {
            const auto g = detail::gompertz_candidate(tp, n, a, c);
            return g.feasible ? g.sse : std::numeric_limits<double>::max();
        },
        std::max(step * 0.5, best->first - step), best->first + step);
    const auto refined = detail::gompertz_candidate(tp, n, a, m.x);
    if (refined.feasible && refined.sse <= best->second.sse) return finish(m.x, refined);
    return finish(best->first, best->second);
}

// ---------------------------------------------------------------------------------------------
// Bass

struct BassFit {
    double A = 0.0;
    double B = 0.0;
    double n_B0 = 0.0;
    double sse = 0.0;
    std::size_t start_index = 0;
    std::vector<double> start_sse; ///< converged SSE of every start, in start order
    std::size_t points = 0;

    BassParams params() const { return {A, B, n_B0}; }
};

struct BassStart {
    double A;
    double B;
    double n_B0;
};

/// Deterministic start lattice: A over four decades times four imitation rates, then rescaled plateaus.
inline std::vector<BassStart> bass_start_lattice(int count, double n_B0_guess) {
    const std::array<double, 4> As{1e-4, 1e-3, 1e-2, 1e-1};
    const std::array<double, 4> Bs{0.2, 0.8, 2.0, 5.0};
    const std::array<double, 3> scales{1.0, 0.5, 2.0};
    std::vector<BassStart> out;
    for (double s : scales)
        for (double A : As)
            for (double B : Bs) {
                if (static_cast<int>(out.size()) == count) return out;
                out.push_back({A, B, std::clamp(n_B0_guess * s, 1e-4, 1.0)});
            }
    while (static_cast<int>(out.size()) < count) out.push_back(out[out.size() % 48]);
    return out;
}

/** Multi-start simplex fit of (A, B, n_B0) in the coordinates (ln A, B, ln n_B0).
 *
 * Sales-like kinds are compared against the Bass rate, penetration against the Bass penetration;
 * `background` is added to the model (the Gompertz contribution during alternation). Points from
 * t0 up to the optional window end enter. The winner has the lowest SSE; ties go to the lowest
 * start index. `extra_start`, when given, is tried before the lattice.
 */
inline BassFit fit_bass(const TimeSeries& series, const FitSpec& spec, std::span<const double> background = {},
                        std::optional<BassStart> extra_start = std::nullopt) {
    spec.validate();
    detail::require(background.empty() || background.size() == series.size(), "fit_bass: background size mismatch");
    const bool penetration = series.kind == SeriesKind::penetration;
    detail::require(penetration || series.kind == SeriesKind::sales || series.kind == SeriesKind::first_purchase,
                    "fit_bass: series must be sales, first purchase or penetration");
    std::vector<double> t, y, bg;
    for (std::size_t i = 0; i < series.size(); ++i) {
        const double tt = series.t[i] - spec.t0;
        if (tt < -1e-9) continue;
        if (spec.window_end && series.t[i] > *spec.window_end + 1e-9) continue;
        t.push_back(std::max(tt, 0.0));
        y.push_back(series.v[i]);
        bg.push_back(background.empty() ? 0.0 : background[i]);
    }
    if (t.size() < 4) throw fit_error("fit_bass: fewer than 4 points in the Bass window");

    double guess = 0.0;
    if (penetration) {
        for (std::size_t i = 0; i < y.size(); ++i) guess = std::max(guess, y[i] - bg[i]);
    } else {
        std::vector<double> net(y.size());
        for (std::size_t i = 0; i < y.size(); ++i) net[i] = std::max(0.0, y[i] - bg[i]);
        guess = trapezoid(t, net);
    }

    auto sse = [&](const std::array<double, 3>& p) {
        const BassParams b{std::exp(p[0]), p[1], std::exp(p[2])};
        double s = 0.0;
        for (std::size_t i = 0; i < t.size(); ++i) {
            const double m = (penetration ? bass_penetration(t[i], b) : bass_rate(t[i], b)) + bg[i];
            const double r = y[i] - m;
            s += r * r;
        }
        return s;
    };
    const Box<3> box{{std::log(1e-5), 0.0, std::log(1e-6)}, {0.0, 10.0, 0.0}};

    std::vector<BassStart> starts;
    if (extra_start) starts.push_back(*extra_start);
    for (const auto& s : bass_start_lattice(spec.starts, guess)) starts.push_back(s);

    BassFit best;
    best.sse = std::numeric_limits<double>::infinity();
    best.points = t.size();
    for (std::size_t i = 0; i < starts.size(); ++i) {
        const auto& s = starts[i];
        const auto r = nelder_mead<3>(sse, {std::log(s.A), s.B, std::log(s.n_B0)}, box);
        best.start_sse.push_back(r.f);
        if (r.f < best.sse) {
            best.sse = r.f;
            best.A = std::exp(r.x[0]);
            best.B = r.x[1];
            best.n_B0 = std::exp(r.x[2]);
            best.start_index = i;
        }
    }
    if (!std::isfinite(best.sse)) throw fit_error("fit_bass: no start converged to a finite SSE");
    return best;
}

// ---------------------------------------------------------------------------------------------
// Fisher-Pry

struct FisherPryFit {
    double theta = 0.0; ///< per year
    double C_m = 0.0;
    double sse = 0.0;   ///< on shares
};

/// Linear regression of logit(m1) on years since t0.
inline FisherPryFit fit_fisher_pry(const TimeSeries& shares, const FitSpec& spec) {
    std::vector<double> x, y;
    for (std::size_t i = 0; i < shares.size(); ++i) {
        const double m = shares.v[i];
        if (!(m > 0.0 && m < 1.0)) throw domain_error("fit_fisher_pry: share at 0 or 1 has an infinite logit");
        x.push_back(shares.t[i] - spec.t0);
        y.push_back(std::log(m / (1.0 - m)));
    }
    if (x.size() < 2) throw fit_error("fit_fisher_pry: at least two shares required");
    const LinearFit lf = linear_fit(x, y);
    FisherPryFit f{lf.slope, lf.intercept, 0.0};
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double r = shares.v[i] - fisher_pry_share(x[i], f.theta, f.C_m);
        f.sse += r * r;
    }
    return f;
}

// ---------------------------------------------------------------------------------------------
// Model curves on the calendar clock

/// Bass penetration plus the Gompertz penetration once the evolutionary clock has started.
inline double model_penetration(double year, double t0, const BassParams& b, const GompertzParams& g) {
    const double t = year - t0;
    if (t < 0.0) return 0.0;
    const double tg = t - g.dt0;
    return bass_penetration(t, b) + (tg >= 0.0 ? gompertz_penetration(tg, g) : 0.0);
}

/// First-purchase sales of both waves.
inline double model_first_purchase(double year, double t0, const BassParams& b, const GompertzParams& g) {
    const double t = year - t0;
    if (t < 0.0) return 0.0;
    const double tg = t - g.dt0;
    return bass_rate(t, b) + (tg >= 0.0 ? gompertz_rate(tg, g) : 0.0);
}

/// Gompertz first-purchase sales at calendar years; zero before the evolutionary clock starts.
inline std::vector<double> gompertz_rate_at(std::span<const double> years, double t0, const GompertzParams& g) {
    std::vector<double> out;
    out.reserve(years.size());
    for (double y : years) {
        const double tg = y - t0 - g.dt0;
        out.push_back(tg >= 0.0 ? gompertz_rate(tg, g) : 0.0);
    }
    return out;
}

inline std::vector<double> bass_penetration_at(std::span<const double> years, double t0, const BassParams& b) {
    std::vector<double> out;
    out.reserve(years.size());
    for (double y : years) out.push_back(y >= t0 ? bass_penetration(y - t0, b) : 0.0);
    return out;
}

/// Total life-cycle sales at calendar years, from the life cycle simulated on a 0.1-year grid.
inline std::vector<double> model_sales(std::span<const double> years, double t0, const BassParams& b,
                                       const GompertzParams& g, const LifecycleParams& lp, double step = 0.1) {
    std::vector<double> out(years.size(), 0.0);
    if (years.empty()) return out;
    const double last = years.back() - t0;
    if (last <= 0.0) return out;
    const double horizon = std::max(std::ceil((last + step) / step) * step, g.dt0 + 2.0 * step);
    const LifeCycle lc = simulate_life_cycle(b, g, lp, horizon, step);
    for (std::size_t i = 0; i < years.size(); ++i) {
        const double t = years[i] - t0;
        out[i] = t < 0.0 ? 0.0 : interpolate(lc.total, t);
    }
    return out;
}

// ---------------------------------------------------------------------------------------------
// Life cycle

struct LifecycleFit {
    double Q = 0.0, R = 0.0, t_p = 0.0;
    double Q_prime = 0.0, R_prime = 0.0, t_p_prime = 0.0;
    double sse = 0.0;

    LifecycleParams params(int echoes) const {
        LifecycleParams lp;
        lp.bass = {Q, R, FailureDistribution::delta(t_p), echoes};
        lp.gompertz = {Q_prime, R_prime, FailureDistribution::delta(t_p_prime), echoes};
        return lp;
    }
};

namespace detail {

// Solves y ~ X c with the coordinates in `fixed` pinned to the given values and the rest free;
// nullopt when the normal equations are singular.
inline std::optional<std::vector<double>> constrained_lsq(const std::vector<std::vector<double>>& cols,
                                                          const std::vector<double>& y,
                                                          std::vector<double> c,
                                                          const std::vector<std::size_t>& free_idx) {
    const std::size_t n = y.size(), f = free_idx.size();
    std::vector<double> r = y;
    for (std::size_t j = 0; j < cols.size(); ++j)
        if (c[j] != 0.0)
            for (std::size_t i = 0; i < n; ++i) r[i] -= c[j] * cols[j][i];
    // normal equations, Gauss-Jordan with partial pivoting
    std::vector<std::vector<double>> M(f, std::vector<double>(f + 1, 0.0));
    for (std::size_t a = 0; a < f; ++a) {
        for (std::size_t b = 0; b < f; ++b)
            for (std::size_t i = 0; i < n; ++i) M[a][b] += cols[free_idx[a]][i] * cols[free_idx[b]][i];
        for (std::size_t i = 0; i < n; ++i) M[a][f] += cols[free_idx[a]][i] * r[i];
    }
    for (std::size_t col = 0; col < f; ++col) {
        std::size_t piv = col;
        for (std::size_t a = col + 1; a < f; ++a)
            if (std::abs(M[a][col]) > std::abs(M[piv][col])) piv = a;
        if (std::abs(M[piv][col]) < 1e-300) return std::nullopt;
        std::swap(M[piv], M[col]);
        for (std::size_t a = 0; a < f; ++a) {
            if (a == col) continue;
            const double m = M[a][col] / M[col][col];
            for (std::size_t b = col; b <= f; ++b) M[a][b] -= m * M[col][b];
        }
    }
    for (std::size_t a = 0; a < f; ++a) c[free_idx[a]] = M[a][f] / M[a][a];
    return c;
}

// Least squares for y ~ X c under per-coordinate bounds, by enumerating which bounds are active
// (3^p sub-problems; p is four here).
inline std::optional<std::vector<double>> bounded_lsq(const std::vector<std::vector<double>>& cols,
                                                      const std::vector<double>& y, const std::vector<double>& lo,
                                                      const std::vector<double>& hi, double* sse_out) {
    const std::size_t p = cols.size(), n = y.size();
    std::size_t combos = 1;
    for (std::size_t j = 0; j < p; ++j) combos *= 3;
    std::optional<std::vector<double>> best;
    double best_sse = std::numeric_limits<double>::infinity();
    for (std::size_t code = 0; code < combos; ++code) {
        std::vector<double> c(p, 0.0);
        std::vector<std::size_t> free_idx;
        bool valid = true;
        std::size_t rem = code;
        for (std::size_t j = 0; j < p; ++j) {
            const std::size_t state = rem % 3;
            rem /= 3;
            if (state == 0) free_idx.push_back(j);
            else c[j] = state == 1 ? lo[j] : hi[j];
            if (!std::isfinite(c[j])) valid = false;
        }
        if (!valid) continue;
        const auto sol = constrained_lsq(cols, y, c, free_idx);
        if (!sol) continue;
        for (std::size_t j : free_idx)
            if ((*sol)[j] < lo[j] - 1e-12 || (*sol)[j] > hi[j] + 1e-12) valid = false;
        if (!valid) continue;
        double sse = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double m = 0.0;
            for (std::size_t j = 0; j < p; ++j) m += (*sol)[j] * cols[j][i];
            sse += (y[i] - m) * (y[i] - m);
        }
        if (sse < best_sse) {
            best_sse = sse;
            best = sol;
        }
    }
    if (sse_out) *sse_out = best_sse;
    return best;
}

} // namespace detail

/** Repurchase parameters from a total sales series with both diffusion waves known.
 *
 * Lifetimes run over a half-year grid in [2, 20]; for each pair the sales are linear in
 * (Q, R, Q', R') with a single replacement echo, solved under Q >= 0, 0 <= R <= 1. The simplex
 * optimizer then polishes all six parameters on the simulated life cycle with the configured echoes.
 */
inline LifecycleFit fit_lifecycle(const TimeSeries& sales, const FitSpec& spec, const BassParams& bass,
                                  const GompertzParams& gomp) {
    spec.validate();
    detail::require(sales.kind == SeriesKind::sales, "fit_lifecycle: series must be total sales");
    std::vector<double> years, y;
    for (std::size_t i = 0; i < sales.size(); ++i) {
        if (sales.t[i] < spec.t0 - 1e-9) continue;
        years.push_back(sales.t[i]);
        y.push_back(sales.v[i]);
    }
    if (years.size() < 6) throw fit_error("fit_lifecycle: fewer than 6 sales points after launch");

    auto bass_rate_at = [&](double t) { return t >= 0.0 ? bass_rate(t, bass) : 0.0; };
    auto gomp_rate_at = [&](double tg) { return tg >= 0.0 ? gompertz_rate(tg, gomp) : 0.0; };
    std::vector<double> base(years.size()), nB(years.size()), nG(years.size());
    for (std::size_t i = 0; i < years.size(); ++i) {
        const double t = years[i] - spec.t0, tg = t - gomp.dt0;
        base[i] = bass_rate_at(t) + gomp_rate_at(tg);
        nB[i] = bass_penetration(std::max(t, 0.0), bass);
        nG[i] = tg >= 0.0 ? gompertz_penetration(tg, gomp) : 0.0;
    }
    std::vector<double> target(years.size());
    for (std::size_t i = 0; i < years.size(); ++i) target[i] = y[i] - base[i];

    const double inf = std::numeric_limits<double>::infinity();
    LifecycleFit best;
    best.sse = inf;
    for (int i = 0; i <= 36; ++i) {
        const double tp = 2.0 + 0.5 * i;
        for (int j = 0; j <= 36; ++j) {
            const double tpp = 2.0 + 0.5 * j;
            std::vector<double> rB(years.size()), rG(years.size());
            for (std::size_t s = 0; s < years.size(); ++s) {
                const double t = years[s] - spec.t0, tg = t - gomp.dt0;
                rB[s] = bass_rate_at(t - tp);
                rG[s] = tg >= 0.0 ? gomp_rate_at(tg - tpp) : 0.0;
            }
            double sse = inf;
            const auto c = detail::bounded_lsq({nB, rB, nG, rG}, target, {0.0, 0.0, 0.0, 0.0}, {inf, 1.0, inf, 1.0}, &sse);
            if (c && sse < best.sse) best = {(*c)[0], (*c)[1], tp, (*c)[2], (*c)[3], tpp, sse};
        }
    }
    if (!std::isfinite(best.sse)) throw fit_error("fit_lifecycle: no feasible repurchase parameters");
    if (spec.optimizer == LifecycleOptimizer::grid_linear && spec.echoes == 1) return best;

    auto sse = [&](const std::array<double, 6>& p) {
        const LifecycleFit f{p[0], p[1], p[2], p[3], p[4], p[5], 0.0};
        const auto m = model_sales(years, spec.t0, bass, gomp, f.params(spec.echoes));
        double s = 0.0;
        for (std::size_t i = 0; i < years.size(); ++i) s += (y[i] - m[i]) * (y[i] - m[i]);
        return s;
    };
    const double qmax = 10.0;
    const Box<6> box{{0.0, 0.0, 1.0, 0.0, 0.0, 1.0}, {qmax, 1.0, 30.0, qmax, 1.0, 30.0}};
    SimplexOptions opt;
    opt.max_evaluations = 3000;
    const auto r = nelder_mead<6>(sse, {best.Q, best.R, best.t_p, best.Q_prime, best.R_prime, best.t_p_prime}, box, opt);
    const double grid_sse = sse({best.Q, best.R, best.t_p, best.Q_prime, best.R_prime, best.t_p_prime});
    if (r.f < grid_sse) return {r.x[0], r.x[1], r.x[2], r.x[3], r.x[4], r.x[5], r.f};
    best.sse = grid_sse;
    return best;
}

// ---------------------------------------------------------------------------------------------
// Full product fit

struct ProductData {
    std::optional<TimeSeries> prices;
    std::optional<TimeSeries> penetration;
    std::optional<TimeSeries> first_purchase;
    std::optional<TimeSeries> sales;
    std::optional<TimeSeries> shares;
};

/// Product-table estimates plus diagnostics.
struct FitResult {
    Table1Row estimates;
    double sse = 0.0; ///< sum of the component SSEs
    double price_sse = 0.0, gompertz_sse = 0.0, bass_sse = 0.0, lifecycle_sse = 0.0, share_sse = 0.0;
    int alternations = 0;
    std::vector<TimeSeries> residuals;
    std::vector<std::uint64_t> series_hashes; ///< of the inputs, in ProductData order
    FitSpec spec;
};

namespace detail {

inline void add_residuals(FitResult& r, const TimeSeries& s, const std::vector<double>& model) {
    TimeSeries res;
    res.kind = s.kind;
    res.t = s.t;
    res.v.resize(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) res.v[i] = s.v[i] - model[i];
    r.residuals.push_back(std::move(res));
}

struct JointDiffusion {
    double A, B, n_B0, k, n_G0;
};

// Both waves refined together on the first-purchase sales, which carry the Bass wave at its natural
// scale; the decline rate stays fixed. Returns the polished parameters and their SSE.
inline std::pair<JointDiffusion, double> joint_polish(const TimeSeries& fp, const FitSpec& spec, double a,
                                                      const BassFit& bf, const GompertzFit& gf) {
    const bool pinned = spec.n_max.has_value();
    auto unpack = [&](const std::array<double, 5>& p) {
        const double n_B0 = std::exp(p[2]);
        return JointDiffusion{std::exp(p[0]), p[1], n_B0, std::exp(p[3]), pinned ? *spec.n_max - n_B0 : p[4]};
    };
    auto sse = [&](const std::array<double, 5>& p) {
        const JointDiffusion j = unpack(p);
        if (!(j.n_G0 > 0.0)) return std::numeric_limits<double>::infinity();
        const BassParams b{j.A, j.B, j.n_B0};
        const GompertzParams g{j.n_G0, j.k, a, spec.dt};
        double s = 0.0;
        for (std::size_t i = 0; i < fp.size(); ++i) {
            if (fp.t[i] < spec.t0 - 1e-9) continue;
            const double r = fp.v[i] - model_first_purchase(fp.t[i], spec.t0, b, g);
            s += r * r;
        }
        return s;
    };
    const std::array<double, 5> x0{std::log(bf.A), bf.B, std::log(bf.n_B0), std::log(gf.k), gf.n_G0};
    const Box<5> box{{std::log(1e-5), 0.0, std::log(1e-6), std::log(1e-3), 1e-3},
                     {0.0, 10.0, 0.0, std::log(1e5), pinned ? gf.n_G0 : 1.5}};
    const auto r = nelder_mead<5>(sse, x0, box);
    const double f0 = sse(x0);
    if (r.f < f0) return {unpack(r.x), r.f};
    return {unpack(x0), f0};
}

} // namespace detail

/** Fits everything the data allow, in order: price decline; then Gompertz (on penetration minus
 * the Bass wave) alternating with Bass (on first-purchase sales minus the Gompertz wave) until n_B0
 * settles, followed by a joint simplex refinement of both waves on the first-purchase sales; then
 * repurchase parameters from total sales; then the share law.
 *
 * The Gompertz wave needs a decline rate: from the prices, or `a_fixed` when no prices are given.
 * Without a first-purchase series the Bass fit uses the penetration alone.
 */
inline FitResult fit_product(const ProductData& data, const FitSpec& spec, std::optional<double> a_fixed = std::nullopt,
                             std::string name = "fit") {
    spec.validate();
    FitResult res;
    res.spec = spec;
    res.estimates.name = std::move(name);
    res.estimates.t0 = spec.t0;
    res.estimates.dt = spec.dt;
    for (const auto* s : {&data.prices, &data.penetration, &data.first_purchase, &data.sales, &data.shares})
        if (*s) {
            (*s)->validate();
            res.series_hashes.push_back(series_hash(**s));
        }
    if (res.series_hashes.empty()) throw fit_error("fit_product: no input series");

    std::optional<double> a = a_fixed;
    if (data.prices) {
        const PriceFit pf = fit_price_decline(*data.prices, spec);
        res.estimates.a = pf.a;
        res.estimates.pm_p0 = pf.pm_p0;
        res.price_sse = pf.sse;
        a = pf.a;
        const TimeSeries& p = *data.prices;
        std::vector<double> model(p.size());
        const TimeSeries defl = spec.income ? deflate_prices(p, *spec.income, spec.evolution_start()) : p;
        for (std::size_t i = 0; i < p.size(); ++i) {
            const double tp = p.t[i] - spec.evolution_start();
            const double m = spec.p0 * (pf.pm_p0 + std::exp(pf.intercept - pf.a * std::max(tp, 0.0)));
            model[i] = p.v[i] - (defl.v[i] - m);
        }
        detail::add_residuals(res, p, model);
    }

    if (data.penetration && a) {
        const TimeSeries& pen = *data.penetration;
        const TimeSeries* bass_src = data.first_purchase ? &*data.first_purchase : nullptr;
        std::optional<BassFit> bf;
        GompertzFit gf;
        double prev_nB0 = -1.0;
        for (int it = 0; it < spec.max_alternations; ++it) {
            const std::vector<double> bg_pen =
                bf ? bass_penetration_at(pen.t, spec.t0, bf->params()) : std::vector<double>(pen.size(), 0.0);
            gf = fit_gompertz(pen, *a, spec, bg_pen, bf ? bf->n_B0 : 0.0);
            const GompertzParams g{gf.n_G0, gf.k, *a, spec.dt};
            std::optional<BassStart> warm;
            if (bf) warm = BassStart{bf->A, bf->B, bf->n_B0};
            if (bass_src) {
                bf = fit_bass(*bass_src, spec, gompertz_rate_at(bass_src->t, spec.t0, g), warm);
            } else {
                std::vector<double> bg(pen.size());
                for (std::size_t i = 0; i < pen.size(); ++i) {
                    const double tg = pen.t[i] - spec.t0 - spec.dt;
                    bg[i] = tg >= 0.0 ? gompertz_penetration(tg, g) : 0.0;
                }
                bf = fit_bass(pen, spec, bg, warm);
            }
            res.alternations = it + 1;
            if (std::abs(bf->n_B0 - prev_nB0) < spec.n_B0_tol) break;
            prev_nB0 = bf->n_B0;
        }
        if (data.first_purchase) {
            const auto j = detail::joint_polish(*data.first_purchase, spec, *a, *bf, gf);
            bf->A = j.first.A;
            bf->B = j.first.B;
            bf->n_B0 = j.first.n_B0;
            bf->sse = j.second;
            gf.k = j.first.k;
            gf.n_G0 = j.first.n_G0;
        }
        {
            const BassParams b = bf->params();
            const GompertzParams g{gf.n_G0, gf.k, *a, spec.dt};
            gf.sse = 0.0;
            for (std::size_t i = 0; i < pen.size(); ++i) {
                const double r = pen.v[i] - model_penetration(pen.t[i], spec.t0, b, g);
                gf.sse += r * r;
            }
        }
        res.estimates.a = *a;
        res.estimates.k = gf.k;
        res.estimates.n_G0 = gf.n_G0;
        res.estimates.A = bf->A;
        res.estimates.B = bf->B;
        res.estimates.n_B0 = bf->n_B0;
        res.gompertz_sse = gf.sse;
        res.bass_sse = bf->sse;
        const BassParams b = bf->params();
        const GompertzParams g{gf.n_G0, gf.k, *a, spec.dt};
        std::vector<double> m(pen.size());
        for (std::size_t i = 0; i < pen.size(); ++i) m[i] = model_penetration(pen.t[i], spec.t0, b, g);
        detail::add_residuals(res, pen, m);
        if (data.first_purchase) {
            const TimeSeries& fp = *data.first_purchase;
            std::vector<double> mf(fp.size());
            for (std::size_t i = 0; i < fp.size(); ++i) mf[i] = model_first_purchase(fp.t[i], spec.t0, b, g);
            detail::add_residuals(res, fp, mf);
        }
        if (data.sales) {
            const LifecycleFit lf = fit_lifecycle(*data.sales, spec, b, g);
            res.estimates.Q = lf.Q;
            res.estimates.R = lf.R;
            res.estimates.t_p = lf.t_p;
            res.estimates.Q_prime = lf.Q_prime;
            res.estimates.R_prime = lf.R_prime;
            res.estimates.t_p_prime = lf.t_p_prime;
            res.lifecycle_sse = lf.sse;
            detail::add_residuals(res, *data.sales, model_sales(data.sales->t, spec.t0, b, g, lf.params(spec.echoes)));
        }
    } else if (data.penetration || data.first_purchase || data.sales) {
        throw fit_error("fit_product: diffusion fit needs prices or a fixed decline rate, plus a penetration series");
    }

    if (data.shares) {
        const FisherPryFit ff = fit_fisher_pry(*data.shares, spec);
        res.estimates.theta = ff.theta;
        res.estimates.C_m = ff.C_m;
        res.share_sse = ff.sse;
        std::vector<double> m(data.shares->size());
        for (std::size_t i = 0; i < m.size(); ++i)
            m[i] = fisher_pry_share(data.shares->t[i] - spec.t0, ff.theta, ff.C_m);
        detail::add_residuals(res, *data.shares, m);
    }
    res.sse = res.price_sse + res.gompertz_sse + res.bass_sse + res.lifecycle_sse + res.share_sse;
    return res;
}

// ---------------------------------------------------------------------------------------------
// Synthetic fixtures

struct NoiseModel {
    double relative_sigma = 0.0; ///< multiplicative Gaussian noise (1 + sigma xi); on the odds for shares
};

struct SynthOptions {
    int points = 30;
    double p0 = 1000.0;
    std::optional<IncomeModel> income; ///< inflate prices by mean income growth
    int echoes = 1;
};

/** Annual samples of one model curve for a product row.
 *
 * Prices start at the evolution start t0 + dt; all other kinds at t0. Penetration is clipped at
 * 1 after noise, shares stay inside (0, 1) because their noise acts on the odds.
 */
inline TimeSeries synthesize(SeriesKind kind, const Table1Row& row, const NoiseModel& noise, std::uint64_t seed,
                             const SynthOptions& opt = {}) {
    detail::require(opt.points >= 1, "synthesize: points must be positive");
    detail::require(noise.relative_sigma >= 0.0, "synthesize: noise must be non-negative");
    detail::require(std::isfinite(row.t0), "synthesize: row lacks t0");
    const double dt = std::isnan(row.dt) ? 0.0 : row.dt;
    TimeSeries s;
    s.kind = kind;
    const double start = kind == SeriesKind::nominal_price ? row.t0 + dt : row.t0;
    for (int j = 0; j < opt.points; ++j) s.t.push_back(start + j);

    switch (kind) {
    case SeriesKind::nominal_price: {
        if (!row.has_price()) throw domain_error("synthesize: row has no price parameters");
        const PriceDecline d{opt.p0, row.pm_p0 * opt.p0, row.a};
        d.validate();
        for (double t : s.t) {
            double p = mean_price(t - start, d).value;
            if (opt.income) p *= mean_income(t - opt.income->t_ref, *opt.income) /
                                 mean_income(start - opt.income->t_ref, *opt.income);
            s.v.push_back(p);
        }
        break;
    }
    case SeriesKind::penetration:
    case SeriesKind::first_purchase:
    case SeriesKind::sales: {
        if (!row.has_diffusion() || std::isnan(row.a)) throw domain_error("synthesize: row has no diffusion parameters");
        const BassParams b = row.bass();
        const GompertzParams g{row.n_G0, row.k, row.a, dt};
        b.validate();
        g.validate();
        if (kind == SeriesKind::sales) {
            s.v = model_sales(s.t, row.t0, b, g, row.lifecycle(opt.echoes));
        } else {
            for (double t : s.t)
                s.v.push_back(kind == SeriesKind::penetration ? model_penetration(t, row.t0, b, g)
                                                               : model_first_purchase(t, row.t0, b, g));
        }
        break;
    }
    case SeriesKind::share: {
        if (!row.has_share()) throw domain_error("synthesize: row has no share law");
        for (double t : s.t) s.v.push_back(fisher_pry_share(t - row.t0, row.theta, row.C_m));
        break;
    }
    }

    if (noise.relative_sigma > 0.0) {
        Rng rng = make_rng(seed, static_cast<std::uint64_t>(kind) + 1);
        std::normal_distribution<double> xi(0.0, 1.0);
        for (double& v : s.v) {
            const double f = std::max(1.0 + noise.relative_sigma * xi(rng), 1e-6);
            if (kind == SeriesKind::share) {
                const double odds = v / (1.0 - v) * f;
                v = odds / (1.0 + odds);
            } else {
                v *= f;
            }
        }
    }
    if (kind == SeriesKind::penetration)
        for (double& v : s.v) v = std::min(v, 1.0);
    return s;
}

// ---------------------------------------------------------------------------------------------
// Round trips

struct RoundTripCheck {
    std::string parameter;
    double truth = 0.0;
    double median = 0.0;
    double tolerance = 0.0; ///< relative
    bool pass = false;
};

struct RoundTripReport {
    std::string product;
    int seeds = 0;
    int failures = 0; ///< seeds whose fit threw
    std::vector<RoundTripCheck> checks;

    bool pass() const {
        if (failures * 2 > seeds) return false;
        for (const auto& c : checks)
            if (!c.pass) return false;
        return true;
    }
};

struct RoundTripOptions {
    int seeds = 50;
    std::uint64_t base_seed = 1;
    double noise = 0.02;
    int points = 30;
};

inline double median(std::vector<double> v) {
    detail::require(!v.empty(), "median: empty sample");
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

/// Fit spec an analyst would use for a product row with synthetic prices normalized to p0.
inline FitSpec spec_for(const Table1Row& row, double p0 = 1000.0) {
    FitSpec s;
    s.t0 = row.t0;
    s.dt = std::isnan(row.dt) ? 0.0 : row.dt;
    s.p0 = p0;
    return s;
}

/** Synthesize -> fit over many seeds; the median estimates are compared with the row.
 *
 * Diffusion rows use prices, penetration and first-purchase sales; share rows use shares.
 * Tolerances: a 10%, k 20%, n_G0 5%, A, B and n_B0 25%, theta 15%.
 */
inline RoundTripReport round_trip(const Table1Row& row, const RoundTripOptions& opt = {}) {
    RoundTripReport rep;
    rep.product = row.name;
    rep.seeds = opt.seeds;
    const NoiseModel noise{opt.noise};
    SynthOptions so;
    so.points = opt.points;
    const FitSpec spec = spec_for(row, so.p0);

    struct Param {
        const char* name;
        double Table1Row::*field;
        double tol;
    };
    std::vector<Param> params;
    if (row.has_share()) {
        params = {{"theta", &Table1Row::theta, 0.15}};
    } else {
        params = {{"a", &Table1Row::a, 0.10},     {"k", &Table1Row::k, 0.20},  {"n_G0", &Table1Row::n_G0, 0.05},
                  {"A", &Table1Row::A, 0.25},     {"B", &Table1Row::B, 0.25},  {"n_B0", &Table1Row::n_B0, 0.25}};
    }
    std::vector<std::vector<double>> est(params.size());
    for (int i = 0; i < opt.seeds; ++i) {
        const std::uint64_t seed = opt.base_seed + static_cast<std::uint64_t>(i);
        ProductData d;
        if (row.has_share()) {
            d.shares = synthesize(SeriesKind::share, row, noise, seed, so);
        } else {
            d.prices = synthesize(SeriesKind::nominal_price, row, noise, seed, so);
            d.penetration = synthesize(SeriesKind::penetration, row, noise, seed, so);
            d.first_purchase = synthesize(SeriesKind::first_purchase, row, noise, seed, so);
        }
        try {
            const FitResult r = fit_product(d, spec, std::nullopt, row.name);
            for (std::size_t j = 0; j < params.size(); ++j) est[j].push_back(r.estimates.*(params[j].field));
        } catch (const error&) {
            ++rep.failures;
        }
    }
    for (std::size_t j = 0; j < params.size(); ++j) {
        RoundTripCheck c;
        c.parameter = params[j].name;
        c.truth = row.*(params[j].field);
        c.tolerance = params[j].tol;
        if (!est[j].empty()) {
            c.median = median(est[j]);
            c.pass = std::abs(c.median - c.truth) <= c.tolerance * std::abs(c.truth);
        } else {
            c.median = blank;
        }
        rep.checks.push_back(c);
    }
    return rep;
}

/// The rows with complete price and diffusion entries, plus the share law.
inline std::vector<Table1Row> round_trip_rows() {
    return {table1::colour_tv(), table1::fax(), table1::bw_tv(), table1::vcr(), table1::vhs()};
}

} // namespace evomarket
