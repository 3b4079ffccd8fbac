#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "evomarket/errors.hpp"

namespace evomarket {

/// Sampled curve: times (years) and values of equal length.
struct Series {
    std::vector<double> t;
    std::vector<double> v;

    std::size_t size() const { return t.size(); }
    bool empty() const { return t.empty(); }

    static Series zeros_like(const Series& s) { return Series{s.t, std::vector<double>(s.size(), 0.0)}; }

    /// Uniform grid t_i = start + i * step, i = 0..n-1.
    static Series grid(double start, double step, std::size_t n) {
        Series s;
        s.t.resize(n);
        s.v.assign(n, 0.0);
        for (std::size_t i = 0; i < n; ++i) s.t[i] = start + static_cast<double>(i) * step;
        return s;
    }
};

/// Step of a uniform grid; throws format_error when the spacing varies.
inline double uniform_step(std::span<const double> t) {
    if (t.size() < 2) throw format_error("uniform grid needs at least two samples");
    const double step = (t.back() - t.front()) / static_cast<double>(t.size() - 1);
    if (!(step > 0.0)) throw format_error("grid times must be strictly increasing");
    for (std::size_t i = 1; i < t.size(); ++i) {
        if (std::abs((t[i] - t[i - 1]) - step) > 1e-6 * step)
            throw format_error("series is not sampled on a uniform grid");
    }
    return step;
}

inline bool same_grid(const Series& a, const Series& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (std::abs(a.t[i] - b.t[i]) > 1e-9 * std::max(1.0, std::abs(a.t[i]))) return false;
    }
    return true;
}

/// Trapezoid integral of a sampled curve.
inline double trapezoid(std::span<const double> t, std::span<const double> v) {
    double sum = 0.0;
    for (std::size_t i = 1; i < t.size(); ++i) sum += 0.5 * (v[i] + v[i - 1]) * (t[i] - t[i - 1]);
    return sum;
}

/// Linear interpolation; constant extrapolation beyond the ends.
inline double interpolate(const Series& s, double x) {
    if (s.empty()) return 0.0;
    if (x <= s.t.front()) return s.v.front();
    if (x >= s.t.back()) return s.v.back();
    const auto it = std::upper_bound(s.t.begin(), s.t.end(), x);
    const auto i = static_cast<std::size_t>(it - s.t.begin());
    const double w = (x - s.t[i - 1]) / (s.t[i] - s.t[i - 1]);
    return s.v[i - 1] + w * (s.v[i] - s.v[i - 1]);
}

/// Central differences inside, one-sided at the ends.
inline std::vector<double> numerical_derivative(std::span<const double> t, std::span<const double> v) {
    const std::size_t n = t.size();
    std::vector<double> d(n, 0.0);
    if (n < 2) return d;
    d[0] = (v[1] - v[0]) / (t[1] - t[0]);
    d[n - 1] = (v[n - 1] - v[n - 2]) / (t[n - 1] - t[n - 2]);
    for (std::size_t i = 1; i + 1 < n; ++i) d[i] = (v[i + 1] - v[i - 1]) / (t[i + 1] - t[i - 1]);
    return d;
}

} // namespace evomarket
