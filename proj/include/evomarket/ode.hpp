#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

namespace evomarket {

/** Classical fixed-step fourth-order Runge-Kutta step.
 *
 * `State` is any random-access container of doubles (std::vector, std::array); `rhs(t, x, dxdt)`
 * writes the derivative into `dxdt`, which is pre-sized like `x`.
 */
template <class State, class Rhs>
void rk4_step(Rhs&& rhs, double t, State& x, double h) {
    const std::size_t n = x.size();
    State k1 = x, k2 = x, k3 = x, k4 = x, tmp = x;
    rhs(t, x, k1);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = x[i] + 0.5 * h * k1[i];
    rhs(t + 0.5 * h, tmp, k2);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = x[i] + 0.5 * h * k2[i];
    rhs(t + 0.5 * h, tmp, k3);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = x[i] + h * k3[i];
    rhs(t + h, tmp, k4);
    for (std::size_t i = 0; i < n; ++i) x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
}

template <class State>
bool all_finite(const State& x) {
    for (double v : x)
        if (!std::isfinite(v)) return false;
    return true;
}

} // namespace evomarket
