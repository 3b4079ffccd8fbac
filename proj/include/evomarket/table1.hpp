#pragma once

// Characteristic parameters of six durable goods in the USA, plus the VHS/Betamax share law.
// Blank entries are NaN.

#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <string_view>

#include "evomarket/diffusion.hpp"
#include "evomarket/lifecycle.hpp"

namespace evomarket {

inline constexpr double blank = std::numeric_limits<double>::quiet_NaN();

/// One product column: t0 and dt in years, rates per year, M in millions of units.
struct Table1Row {
    std::string name;
    double t0 = blank;
    double dt = blank;
    double pm_p0 = blank;
    double a = blank;
    double k = blank;
    double n_G0 = blank;
    double n_B0 = blank;
    double A = blank;
    double B = blank;
    double R = blank;
    double Q = blank;
    double R_prime = blank;
    double Q_prime = blank;
    double t_p = blank;
    double t_p_prime = blank;
    double M = blank;
    double theta = blank; ///< share law slope (1/year), only for the two-standard case
    double C_m = blank;

    BassParams bass() const { return {A, B, n_B0}; }
    GompertzParams gompertz() const { return {n_G0, k, a, dt}; }

    /// Repurchase parameters with blanks read as zero; a blank lifetime gets a placeholder since
    /// its replacement fraction is then zero as well.
    LifecycleParams lifecycle(int echoes = 1) const {
        auto z = [](double v) { return std::isnan(v) ? 0.0 : v; };
        auto life = [](double v) { return std::isnan(v) ? 10.0 : v; };
        LifecycleParams lp;
        lp.bass = {z(Q), z(R), FailureDistribution::delta(life(t_p)), echoes};
        lp.gompertz = {z(Q_prime), z(R_prime), FailureDistribution::delta(life(t_p_prime)), echoes};
        return lp;
    }

    bool has_price() const { return !std::isnan(pm_p0) && !std::isnan(a); }
    bool has_diffusion() const {
        return !std::isnan(k) && !std::isnan(n_G0) && !std::isnan(n_B0) && !std::isnan(A) && !std::isnan(B);
    }
    bool has_share() const { return !std::isnan(theta) && !std::isnan(C_m); }
};

namespace table1 {

inline Table1Row colour_tv() {
    Table1Row r;
    r.name = "colour_tv";
    r.t0 = 1954; r.dt = 0.5; r.pm_p0 = 0; r.a = 0.103; r.k = 27; r.n_G0 = 0.97;
    r.n_B0 = 0.01; r.A = 0.001; r.B = 1.8;
    return r;
}

inline Table1Row fax() {
    Table1Row r;
    r.name = "fax";
    r.t0 = 1977; r.dt = 4; r.pm_p0 = 0.01; r.a = 0.45; r.k = 360; r.n_G0 = 0.98;
    r.n_B0 = 0.02; r.A = 0.01; r.B = 2.2; r.Q = 2.5; r.Q_prime = 0;
    return r;
}

inline Table1Row bw_tv() {
    Table1Row r;
    r.name = "bw_tv";
    r.t0 = 1948; r.dt = 0; r.pm_p0 = 0.33; r.a = 0.2; r.k = 8.5; r.n_G0 = 0.77;
    r.n_B0 = 0.18; r.A = 0.02; r.B = 2.5; r.R = 0.3; r.Q = 0.06; r.R_prime = 0.65; r.Q_prime = 0.06;
    r.t_p = 9.2; r.t_p_prime = 10.2; r.M = 53;
    return r;
}

inline Table1Row clothes_dryer() {
    Table1Row r;
    r.name = "clothes_dryer";
    r.t0 = 1949; r.dt = 0; r.a = 0.081; r.k = 25; r.n_G0 = 0.9;
    r.n_B0 = 0.1; r.A = 0.02; r.B = 1; r.R = 0; r.Q = 0.06; r.R_prime = 0; r.Q_prime = 0.35; r.M = 35;
    return r;
}

inline Table1Row air_conditioner() {
    Table1Row r;
    r.name = "air_conditioner";
    r.t0 = 1951; r.dt = 0; r.a = 0.11; r.k = 65; r.n_G0 = 0.9;
    r.n_B0 = 0.1; r.A = 0.03; r.B = 0.8; r.R = 0; r.Q = 0.02; r.R_prime = 0; r.Q_prime = 0.33; r.M = 45;
    return r;
}

inline Table1Row vcr() {
    Table1Row r;
    r.name = "vcr";
    r.t0 = 1976; r.dt = 0; r.pm_p0 = 0.17; r.a = 0.195; r.k = 55; r.n_G0 = 0.83;
    r.n_B0 = 0.03; r.A = 0.01; r.B = 1; r.Q = 0.3; r.Q_prime = 0; r.M = 96;
    return r;
}

/// VHS share against Betamax, clock starting at the VHS launch year.
inline Table1Row vhs() {
    Table1Row r;
    r.name = "vhs";
    r.t0 = 1977; r.dt = 0; r.theta = 0.22; r.C_m = 0;
    return r;
}

/// Lower-class mean income in the USA: 4400 dollars at the start of the Colour TV price decline,
/// growing 5% per year.
inline IncomeModel us_income() { return {4400.0, 0.05, 1954.5}; }

inline std::array<Table1Row, 7> all() {
    return {colour_tv(), fax(), bw_tv(), clothes_dryer(), air_conditioner(), vcr(), vhs()};
}

inline std::optional<Table1Row> by_name(std::string_view name) {
    for (auto& r : all())
        if (r.name == name) return r;
    return std::nullopt;
}

} // namespace table1

} // namespace evomarket
