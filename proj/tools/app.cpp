#include "app.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <ostream>
#include <set>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "evomarket/calibration.hpp"
#include "evomarket/io.hpp"
#include "evomarket/lifecycle.hpp"
#include "evomarket/stochastic.hpp"
#include "evomarket/table1.hpp"

namespace evomarket::app {

namespace pt = boost::property_tree;
namespace fs = std::filesystem;

namespace {

// Keys accepted per section; anything else is a configuration error, which catches typos.
const std::map<std::string, std::set<std::string>>& schema() {
    static const std::map<std::string, std::set<std::string>> s{
        {"run", {"seed", "out", "plot", "product"}},
        {"product", {"t0", "dt", "M"}},
        {"market", {"m_U", "mu_m", "theta"}},
        {"income", {"I0", "T", "t_ref", "deflate"}},
        {"price", {"p0", "pm_p0", "a"}},
        {"bass", {"A", "B", "n_B0"}},
        {"gompertz", {"n_G0", "k"}},
        {"lifecycle",
         {"Q", "R", "t_p", "Q_prime", "R_prime", "t_p_prime", "echoes", "failure", "sigma", "sigma_prime", "step",
          "horizon"}},
        {"share", {"theta", "C_m"}},
        {"fit",
         {"prices", "penetration", "first_purchase", "sales", "shares", "t0", "dt", "p0", "a", "starts",
          "window_end", "n_max", "echoes", "optimizer", "max_alternations", "name"}},
        {"synth", {"noise", "points", "p0", "kinds"}},
        {"noise", {"b", "D", "dt", "steps", "burn_in"}},
        {"size", {"u", "omega", "y0", "units", "steps"}},
        {"reproduction", {"chi", "kappa", "t_A", "noise_amp", "dt", "steps", "window", "settle"}},
        {"replicate", {"seeds", "noise", "points", "products"}},
    };
    return s;
}

class Config {
public:
    explicit Config(pt::ptree tree, fs::path base) : tree_(std::move(tree)), base_(std::move(base)) {
        for (const auto& [section, body] : tree_) {
            const auto it = schema().find(section);
            if (it == schema().end()) throw config_error("unknown config section [" + section + "]");
            for (const auto& [key, _] : body)
                if (!it->second.count(key)) throw config_error("unknown key '" + key + "' in [" + section + "]");
        }
    }

    bool has(const std::string& path) const { return tree_.get_optional<std::string>(path).has_value(); }

    std::optional<std::string> str(const std::string& path) const {
        auto v = tree_.get_optional<std::string>(path);
        if (!v) return std::nullopt;
        return *v;
    }

    std::optional<double> num(const std::string& path) const {
        const auto s = str(path);
        if (!s) return std::nullopt;
        const auto v = detail::parse_double(*s);
        if (!v) throw config_error("'" + path + "' is not a number: '" + *s + "'");
        return v;
    }

    double num(const std::string& path, double fallback) const { return num(path).value_or(fallback); }

    long long integer(const std::string& path, long long fallback) const {
        const auto v = num(path);
        if (!v) return fallback;
        if (*v != std::floor(*v) || std::abs(*v) > 9e15) throw config_error("'" + path + "' must be an integer");
        return static_cast<long long>(*v);
    }

    bool flag(const std::string& path, bool fallback) const {
        const auto s = str(path);
        if (!s) return fallback;
        if (*s == "true" || *s == "1" || *s == "yes" || *s == "on") return true;
        if (*s == "false" || *s == "0" || *s == "no" || *s == "off") return false;
        throw config_error("'" + path + "' must be a boolean");
    }

    /// Paths in the config are relative to the config file.
    std::optional<std::string> file(const std::string& path) const {
        const auto s = str(path);
        if (!s) return std::nullopt;
        fs::path p(*s);
        if (p.is_relative()) p = base_ / p;
        if (!fs::exists(p)) throw config_error("'" + path + "' names a missing file: " + p.string());
        return p.string();
    }

    void put(const std::string& path, const std::string& value) {
        const auto dot = path.find('.');
        if (dot == std::string::npos) throw config_error("override '" + path + "' must be section.key");
        const auto it = schema().find(path.substr(0, dot));
        if (it == schema().end() || !it->second.count(path.substr(dot + 1)))
            throw config_error("unknown override key '" + path + "'");
        tree_.put(path, value);
    }

private:
    pt::ptree tree_;
    fs::path base_;
};

struct Context {
    Config cfg;
    std::uint64_t seed = 1;
    fs::path out;
    bool plot = false;
    std::ostream& out_stream;
    std::ostream& err;
};

// Product preset overlaid by the parameter sections.
Table1Row product_row(const Context& c, const std::string& preset) {
    auto row = table1::by_name(preset);
    if (!row) throw config_error("unknown product '" + preset + "'");
    Table1Row r = *row;
    auto set = [&](const char* path, double& field) {
        if (auto v = c.cfg.num(path)) field = *v;
    };
    set("product.t0", r.t0);
    set("product.dt", r.dt);
    set("product.M", r.M);
    set("price.pm_p0", r.pm_p0);
    set("price.a", r.a);
    set("bass.A", r.A);
    set("bass.B", r.B);
    set("bass.n_B0", r.n_B0);
    set("gompertz.n_G0", r.n_G0);
    set("gompertz.k", r.k);
    set("lifecycle.Q", r.Q);
    set("lifecycle.R", r.R);
    set("lifecycle.t_p", r.t_p);
    set("lifecycle.Q_prime", r.Q_prime);
    set("lifecycle.R_prime", r.R_prime);
    set("lifecycle.t_p_prime", r.t_p_prime);
    set("share.theta", r.theta);
    set("share.C_m", r.C_m);
    return r;
}

void warn_blanks(const Context& c, const Table1Row& r) {
    const std::pair<const char*, double> fields[] = {
        {"Q", r.Q}, {"R", r.R}, {"Q_prime", r.Q_prime}, {"R_prime", r.R_prime}};
    for (const auto& [name, v] : fields)
        if (std::isnan(v)) c.err << "warning: " << r.name << ": " << name << " is blank, using 0\n";
}

LifecycleParams lifecycle_params(const Context& c, const Table1Row& r) {
    const int echoes = static_cast<int>(c.cfg.integer("lifecycle.echoes", 1));
    LifecycleParams lp = r.lifecycle(echoes);
    const std::string kind = c.cfg.str("lifecycle.failure").value_or("delta");
    if (kind == "gaussian") {
        const double s = c.cfg.num("lifecycle.sigma", 1.0);
        lp.bass.failure = FailureDistribution::gaussian(lp.bass.failure.t_p, s);
        lp.gompertz.failure = FailureDistribution::gaussian(lp.gompertz.failure.t_p, c.cfg.num("lifecycle.sigma_prime", s));
    } else if (kind != "delta") {
        throw config_error("lifecycle.failure must be delta or gaussian");
    }
    lp.validate();
    return lp;
}

std::optional<IncomeModel> income_model(const Context& c, bool required) {
    if (!required && !c.cfg.flag("income.deflate", false)) return std::nullopt;
    IncomeModel m = table1::us_income();
    m.I0 = c.cfg.num("income.I0", m.I0);
    m.T = c.cfg.num("income.T", m.T);
    m.t_ref = c.cfg.num("income.t_ref", m.t_ref);
    m.validate();
    return m;
}

std::string path_in(const Context& c, const std::string& name) { return (c.out / name).string(); }

void write_text(const Context& c, const std::string& name, const std::string& text) {
    detail::write_file(path_in(c, name), text);
}

TimeSeries as_series(SeriesKind kind, const std::vector<double>& t, const std::vector<double>& v) {
    TimeSeries s;
    s.kind = kind;
    s.t = t;
    s.v = v;
    return s;
}

// ---------------------------------------------------------------------------------------------

int cmd_simulate(Context& c, const Table1Row& row) {
    const BassParams bass = row.bass();
    const double dt = std::isnan(row.dt) ? 0.0 : row.dt;
    const GompertzParams gomp{row.n_G0, row.k, row.a, dt};
    bass.validate();
    gomp.validate();
    warn_blanks(c, row);
    const LifecycleParams lp = lifecycle_params(c, row);
    const double step = c.cfg.num("lifecycle.step", 0.1);
    const double horizon = c.cfg.num("lifecycle.horizon", 40.0);
    const LifeCycle lc = simulate_life_cycle(bass, gomp, lp, horizon, step);

    std::vector<double> years, pen, fp;
    for (double t : lc.bass.t) {
        years.push_back(row.t0 + t);
        pen.push_back(model_penetration(row.t0 + t, row.t0, bass, gomp));
        fp.push_back(model_first_purchase(row.t0 + t, row.t0, bass, gomp));
    }
    std::vector<double> total_years, bw, gw(lc.total.size(), 0.0);
    for (double t : lc.total.t) total_years.push_back(row.t0 + t);
    bw.assign(lc.total.size(), 0.0);
    for (std::size_t i = 0; i < lc.bass_wave.size() && i < bw.size(); ++i) bw[i] = lc.bass_wave.v[i];
    const auto g_off = static_cast<std::size_t>(std::llround(dt / step));
    for (std::size_t i = 0; i < lc.gompertz_wave.size() && g_off + i < gw.size(); ++i) gw[g_off + i] = lc.gompertz_wave.v[i];

    const std::string note = "simulated life cycle of " + row.name;
    write_series(path_in(c, "penetration.csv"), as_series(SeriesKind::penetration, years, pen), note);
    write_series(path_in(c, "first_purchase.csv"), as_series(SeriesKind::first_purchase, years, fp), note);
    write_series(path_in(c, "sales.csv"), as_series(SeriesKind::sales, total_years, lc.total.v), note);
    write_series(path_in(c, "bass_wave.csv"), as_series(SeriesKind::sales, total_years, bw), note + ", Bass wave");
    write_series(path_in(c, "gompertz_wave.csv"), as_series(SeriesKind::sales, total_years, gw), note + ", Gompertz wave");
    std::optional<TimeSeries> price;
    if (row.has_price()) {
        const double p0 = c.cfg.num("price.p0", 1000.0);
        const PriceDecline d{p0, row.pm_p0 * p0, row.a};
        d.validate();
        TimeSeries p;
        p.kind = SeriesKind::nominal_price;
        for (double y : total_years) {
            if (y < row.t0 + dt - 1e-9) continue;
            p.t.push_back(y);
            p.v.push_back(mean_price(y - row.t0 - dt, d).value);
        }
        write_series(path_in(c, "nominal_price.csv"), p, note + ", p0 = " + format_double(p0));
        price = p;
    }

    Metadata m;
    m.set("command", "simulate");
    m.set("product", row.name);
    for (auto [k, v] : {std::pair{"t0", row.t0}, {"dt", dt}, {"a", row.a}, {"k", row.k}, {"n_G0", row.n_G0},
                        {"n_B0", row.n_B0}, {"A", row.A}, {"B", row.B}})
        m.set(k, v);
    m.set("Q", lp.bass.Q);
    m.set("R", lp.bass.R);
    m.set("t_p", lp.bass.failure.t_p);
    m.set("Q_prime", lp.gompertz.Q);
    m.set("R_prime", lp.gompertz.R);
    m.set("t_p_prime", lp.gompertz.failure.t_p);
    m.set("echoes", format_double(lp.bass.echoes));
    m.set("step", step);
    m.set("horizon", horizon);
    m.set("bass_peak_year", row.t0 + bass_peak_time(bass));
    m.set("gompertz_inflection_year", row.t0 + dt + gompertz_inflection_time(gomp));
    write_text(c, "simulate.txt", m.str());

    if (c.plot) {
        write_text(c, "lifecycle.svg",
                   render_svg({{"total", total_years, lc.total.v, false},
                               {"Bass wave", total_years, bw, false},
                               {"Gompertz wave", total_years, gw, false}},
                              row.name + " unit sales", "year", "sales / M"));
        write_text(c, "penetration.svg",
                   render_svg({{"penetration", years, pen, false}}, row.name + " market penetration", "year", "n"));
    }
    c.out_stream << "simulate: " << row.name << ", " << lc.total.size() << " samples written to " << c.out.string()
                 << "\n";
    return ok;
}

// ---------------------------------------------------------------------------------------------

int cmd_fit(Context& c, const std::optional<std::string>& preset) {
    ProductData d;
    auto load = [&](const char* key, SeriesKind kind, std::optional<TimeSeries>& slot) {
        if (auto p = c.cfg.file(std::string("fit.") + key)) {
            slot = parse_series(*p, kind);
            if (slot->kind != kind)
                throw format_error(*p + ": expected kind " + to_string(kind) + ", found " + to_string(slot->kind));
        }
    };
    load("prices", SeriesKind::nominal_price, d.prices);
    load("penetration", SeriesKind::penetration, d.penetration);
    load("first_purchase", SeriesKind::first_purchase, d.first_purchase);
    load("sales", SeriesKind::sales, d.sales);
    load("shares", SeriesKind::share, d.shares);
    if (!d.prices && !d.penetration && !d.first_purchase && !d.sales && !d.shares)
        throw config_error("fit: no input series configured in [fit]");

    FitSpec spec;
    std::string name = c.cfg.str("fit.name").value_or(preset.value_or("fit"));
    if (preset) {
        const auto row = table1::by_name(*preset);
        if (!row) throw config_error("unknown product '" + *preset + "'");
        spec = spec_for(*row);
    }
    if (auto v = c.cfg.num("fit.t0")) spec.t0 = *v;
    if (auto v = c.cfg.num("fit.dt")) spec.dt = *v;
    if (auto v = c.cfg.num("fit.p0")) spec.p0 = *v;
    if (!c.cfg.has("fit.t0") && !preset) {
        const TimeSeries& first = d.prices ? *d.prices : d.penetration ? *d.penetration : d.first_purchase ? *d.first_purchase
                                  : d.sales ? *d.sales : *d.shares;
        spec.t0 = first.t.front();
        c.err << "warning: fit.t0 not set, using the first year " << format_double(spec.t0) << "\n";
    }
    if (d.prices && !c.cfg.has("fit.p0") && !preset) {
        spec.p0 = d.prices->v.front();
        c.err << "warning: fit.p0 not set, using the first price " << format_double(spec.p0) << "\n";
    }
    spec.starts = static_cast<int>(c.cfg.integer("fit.starts", spec.starts));
    spec.echoes = static_cast<int>(c.cfg.integer("fit.echoes", spec.echoes));
    spec.max_alternations = static_cast<int>(c.cfg.integer("fit.max_alternations", spec.max_alternations));
    if (auto v = c.cfg.num("fit.window_end")) spec.window_end = *v;
    if (auto v = c.cfg.num("fit.n_max")) spec.n_max = *v;
    if (auto o = c.cfg.str("fit.optimizer")) {
        if (*o == "grid_linear") spec.optimizer = LifecycleOptimizer::grid_linear;
        else if (*o == "simplex") spec.optimizer = LifecycleOptimizer::simplex;
        else throw config_error("fit.optimizer must be grid_linear or simplex");
    }
    spec.income = income_model(c, false);
    spec.validate();

    const FitResult r = fit_product(d, spec, c.cfg.num("fit.a"), name);
    write_text(c, "fit_table.csv", format_fit_table({r.estimates}));
    Metadata m;
    m.set("command", "fit");
    m.set("product", name);
    m.set("t0", spec.t0);
    m.set("dt", spec.dt);
    m.set("p0", spec.p0);
    m.set("income_deflation", spec.income ? "on" : "off");
    m.set("starts", format_double(spec.starts));
    m.set("n_max", spec.n_max ? format_double(*spec.n_max) : "-");
    m.set("alternations", format_double(r.alternations));
    m.set("sse", r.sse);
    m.set("sse_price", r.price_sse);
    m.set("sse_penetration", r.gompertz_sse);
    m.set("sse_first_purchase", r.bass_sse);
    m.set("sse_sales", r.lifecycle_sse);
    m.set("sse_share", r.share_sse);
    for (std::size_t i = 0; i < r.series_hashes.size(); ++i) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(r.series_hashes[i]));
        m.set("input_hash_" + std::to_string(i), buf);
    }
    write_text(c, "fit_meta.txt", m.str());
    for (const auto& res : r.residuals)
        write_series(path_in(c, std::string("residuals_") + to_string(res.kind) + ".csv"), res, "observed minus model");

    if (c.plot) {
        for (const auto& res : r.residuals) {
            const TimeSeries* obs = nullptr;
            for (const auto* s : {&d.prices, &d.penetration, &d.first_purchase, &d.sales, &d.shares})
                if (*s && (*s)->kind == res.kind) obs = &**s;
            std::vector<double> model(obs->size());
            for (std::size_t i = 0; i < model.size(); ++i) model[i] = obs->v[i] - res.v[i];
            write_text(c, std::string("fit_") + to_string(res.kind) + ".svg",
                       render_svg({{"observed", obs->t, obs->v, true}, {"model", obs->t, model, false}},
                                  name + " " + to_string(res.kind), "year", to_string(res.kind),
                                  res.kind == SeriesKind::nominal_price));
        }
    }
    c.out_stream << format_fit_table({r.estimates});
    return ok;
}

// ---------------------------------------------------------------------------------------------

int cmd_synth(Context& c, const Table1Row& row) {
    const NoiseModel noise{c.cfg.num("synth.noise", 0.02)};
    SynthOptions so;
    so.points = static_cast<int>(c.cfg.integer("synth.points", 30));
    so.p0 = c.cfg.num("synth.p0", c.cfg.num("price.p0", 1000.0));
    so.income = income_model(c, false);
    so.echoes = static_cast<int>(c.cfg.integer("lifecycle.echoes", 1));

    std::vector<SeriesKind> kinds;
    if (auto list = c.cfg.str("synth.kinds")) {
        for (auto k : detail::split(*list, ' ')) {
            if (k.empty()) continue;
            const auto kind = parse_series_kind(k);
            if (!kind) throw config_error("synth.kinds: unknown kind '" + std::string(k) + "'");
            kinds.push_back(*kind);
        }
    } else {
        if (row.has_price()) kinds.push_back(SeriesKind::nominal_price);
        if (row.has_diffusion() && !std::isnan(row.a))
            kinds.insert(kinds.end(), {SeriesKind::penetration, SeriesKind::first_purchase, SeriesKind::sales});
        if (row.has_share()) kinds.push_back(SeriesKind::share);
    }
    if (kinds.empty()) throw config_error("synth: the product has nothing to synthesize");
    if (std::find(kinds.begin(), kinds.end(), SeriesKind::sales) != kinds.end()) warn_blanks(c, row);

    const std::string note = "synthetic " + row.name + ", noise " + format_double(noise.relative_sigma) + ", seed " +
                             std::to_string(c.seed);
    std::string ini = "; fit configuration for the synthesized series\n[fit]\n";
    ini += "name = " + row.name + "\nt0 = " + format_double(row.t0) +
           "\ndt = " + format_double(std::isnan(row.dt) ? 0.0 : row.dt) + "\np0 = " + format_double(so.p0) + "\n";
    for (auto kind : kinds) {
        const TimeSeries s = synthesize(kind, row, noise, c.seed, so);
        const std::string file = std::string(to_string(kind)) + ".csv";
        write_series(path_in(c, file), s, note);
        const char* key = kind == SeriesKind::nominal_price ? "prices"
                          : kind == SeriesKind::share       ? "shares"
                                                            : to_string(kind);
        ini += std::string(key) + " = " + file + "\n";
        if (c.plot)
            write_text(c, std::string(to_string(kind)) + ".svg",
                       render_svg({{to_string(kind), s.t, s.v, true}}, row.name + " " + to_string(kind), "year",
                                  to_string(kind), kind == SeriesKind::nominal_price));
    }
    if (so.income) {
        ini += "\n[income]\ndeflate = true\nI0 = " + format_double(so.income->I0) + "\nT = " + format_double(so.income->T) +
               "\nt_ref = " + format_double(so.income->t_ref) + "\n";
    }
    write_text(c, "fit.ini", ini);
    c.out_stream << "synth: " << kinds.size() << " series for " << row.name << " written to " << c.out.string() << "\n";
    return ok;
}

// ---------------------------------------------------------------------------------------------

int cmd_dist(Context& c) {
    Metadata m;
    m.set("command", "dist");
    m.set("seed", std::to_string(c.seed));

    // Langevin price fluctuations against the Laplace law
    const PriceNoiseParams noise{c.cfg.num("noise.b", 1.0), c.cfg.num("noise.D", 1.0)};
    noise.validate();
    const double dt = c.cfg.num("noise.dt", 5e-3 * noise.relaxation_time());
    const auto steps = static_cast<std::size_t>(c.cfg.integer("noise.steps", 1000000));
    const auto burn = static_cast<std::size_t>(c.cfg.integer("noise.burn_in", static_cast<long long>(langevin_burn_in_steps(noise, dt))));
    if (steps < 2) throw config_error("noise.steps must be at least 2");
    const auto path = langevin_price_sim(noise, dt, steps, c.seed, 0.0, burn);
    const Moments pm = moments(path);
    const LaplaceFit lf = laplace_fit(path);
    const double scale = laplace_scale(noise.b, noise.D);
    const double ks = ks_statistic(path, [&](double x) { return laplace_cdf(x, 0.0, scale); });
    m.set("langevin.b", noise.b);
    m.set("langevin.D", noise.D);
    m.set("langevin.dt", dt);
    m.set("langevin.steps", std::to_string(steps));
    m.set("langevin.burn_in", std::to_string(burn));
    m.set("langevin.variance", pm.variance);
    m.set("langevin.variance_theory", laplace_variance(noise.b, noise.D));
    m.set("langevin.laplace_location", lf.location);
    m.set("langevin.laplace_scale", lf.scale);
    m.set("langevin.laplace_scale_theory", scale);
    m.set("langevin.ks", ks);

    // multiplicative growth with Laplace log rates
    const SizeDistParams size{c.cfg.num("size.u", 0.0), c.cfg.num("size.omega", 1.0), c.cfg.num("size.y0", 1.0)};
    size.validate();
    const auto units = static_cast<std::size_t>(c.cfg.integer("size.units", 10000));
    const auto gsteps = static_cast<std::size_t>(c.cfg.integer("size.steps", 100));
    const double rate_scale = size.omega / std::sqrt(2.0);
    const auto sizes = multiplicative_growth_sim(
        units, gsteps, [&](Rng& rng) { return laplace_draw(rng, size.u, rate_scale); }, c.seed, size.y0);
    std::vector<double> logs;
    logs.reserve(sizes.size());
    for (double y : sizes) logs.push_back(std::log(y));
    const Moments gm = moments(logs);
    m.set("growth.units", std::to_string(units));
    m.set("growth.steps", std::to_string(gsteps));
    m.set("growth.log_mean", gm.mean);
    m.set("growth.log_variance", gm.variance);
    m.set("growth.log_variance_theory", size.omega * size.omega * static_cast<double>(gsteps));
    m.set("growth.log_skewness", gm.skewness);
    m.set("growth.log_excess_kurtosis", gm.excess_kurtosis);

    // reproduction coefficient with investment jumps
    ReproductionSimParams rp;
    rp.chi = c.cfg.num("reproduction.chi", rp.chi);
    rp.kappa = c.cfg.num("reproduction.kappa", rp.kappa);
    rp.t_A = c.cfg.num("reproduction.t_A", rp.t_A);
    rp.noise_amp = c.cfg.num("reproduction.noise_amp", rp.noise_amp);
    rp.validate();
    const double rdt = c.cfg.num("reproduction.dt", 0.01);
    const auto rsteps = static_cast<std::size_t>(c.cfg.integer("reproduction.steps", 2000000));
    const auto rpath = reproduction_param_sim(rp, rdt, rsteps, c.seed);
    const WindowStats ws =
        short_window_stats(rpath, c.cfg.num("reproduction.window", 5.0), c.cfg.num("reproduction.settle", 3.0));
    m.set("reproduction.chi", rp.chi);
    m.set("reproduction.kappa", rp.kappa);
    m.set("reproduction.t_A", rp.t_A);
    m.set("reproduction.jumps", std::to_string(rpath.jump_steps.size()));
    m.set("reproduction.short_windows", std::to_string(ws.windows));
    m.set("reproduction.short_mean", ws.mean);
    m.set("reproduction.short_std_error", ws.std_error);
    m.set("reproduction.long_mean", path_mean(rpath));
    m.set("reproduction.long_mean_theory", rp.long_run_mean());

    write_text(c, "dist_report.txt", m.str());

    if (c.plot) {
        const double lo = -6.0 * scale, hi = 6.0 * scale;
        const int bins = 60;
        std::vector<double> centers(bins), hist(bins, 0.0), pdf(bins);
        const double w = (hi - lo) / bins;
        for (double x : path)
            if (x >= lo && x < hi) hist[static_cast<std::size_t>((x - lo) / w)] += 1.0;
        for (int i = 0; i < bins; ++i) {
            centers[i] = lo + (i + 0.5) * w;
            hist[i] /= static_cast<double>(path.size()) * w;
            pdf[i] = laplace_pdf(centers[i], noise.b, noise.D);
        }
        write_text(c, "price_distribution.svg",
                   render_svg({{"simulated", centers, hist, true}, {"Laplace law", centers, pdf, false}},
                              "stationary price deviations", "price deviation", "density"));
    }
    c.out_stream << m.str();
    return ok;
}

// ---------------------------------------------------------------------------------------------

int cmd_replicate(Context& c) {
    RoundTripOptions opt;
    opt.seeds = static_cast<int>(c.cfg.integer("replicate.seeds", opt.seeds));
    opt.noise = c.cfg.num("replicate.noise", opt.noise);
    opt.points = static_cast<int>(c.cfg.integer("replicate.points", opt.points));
    opt.base_seed = c.seed;
    if (opt.seeds < 1 || opt.points < 4) throw config_error("replicate: need seeds >= 1 and points >= 4");

    std::vector<Table1Row> rows;
    if (auto list = c.cfg.str("replicate.products")) {
        for (auto name : detail::split(*list, ' ')) {
            if (name.empty()) continue;
            auto r = table1::by_name(name);
            if (!r) throw config_error("replicate.products: unknown product '" + std::string(name) + "'");
            rows.push_back(*r);
        }
    } else {
        rows = round_trip_rows();
    }

    std::string csv = "product,parameter,truth,median,tolerance,pass\n";
    std::string matrix;
    char line[160];
    std::snprintf(line, sizeof line, "%-12s %-7s %12s %12s %6s  %s\n", "product", "param", "truth", "median", "tol", "result");
    matrix += line;
    bool all = true;
    for (const auto& row : rows) {
        const RoundTripReport rep = round_trip(row, opt);
        for (const auto& ch : rep.checks) {
            csv += rep.product + "," + ch.parameter + "," + format_double(ch.truth) + "," + format_double(ch.median) +
                   "," + format_double(ch.tolerance) + "," + (ch.pass ? "pass" : "fail") + "\n";
            std::snprintf(line, sizeof line, "%-12s %-7s %12.6g %12.6g %5.0f%%  %s\n", rep.product.c_str(),
                          ch.parameter.c_str(), ch.truth, ch.median, 100.0 * ch.tolerance, ch.pass ? "PASS" : "FAIL");
            matrix += line;
        }
        if (rep.failures > 0) {
            std::snprintf(line, sizeof line, "%-12s %d of %d fits failed\n", rep.product.c_str(), rep.failures, rep.seeds);
            matrix += line;
        }
        all = all && rep.pass();
    }
    std::snprintf(line, sizeof line, "round trips: %s (%d seeds, noise %g, %d annual points, base seed %llu)\n",
                  all ? "PASS" : "FAIL", opt.seeds, opt.noise, opt.points, static_cast<unsigned long long>(opt.base_seed));
    matrix += line;
    write_text(c, "replicate.csv", csv);
    write_text(c, "replicate.txt", matrix);
    c.out_stream << matrix;
    return all ? ok : fit_failure;
}

int dispatch(Context& c, const RunConfig& rc) {
    const std::optional<std::string> preset =
        rc.product ? rc.product : c.cfg.str("run.product");
    if (rc.command == "simulate") return cmd_simulate(c, product_row(c, preset.value_or("bw_tv")));
    if (rc.command == "synth") return cmd_synth(c, product_row(c, preset.value_or("colour_tv")));
    if (rc.command == "fit") return cmd_fit(c, preset);
    if (rc.command == "dist") return cmd_dist(c);
    if (rc.command == "replicate") return cmd_replicate(c);
    throw config_error("unknown command '" + rc.command + "'");
}

} // namespace

int run(const RunConfig& rc, std::ostream& out, std::ostream& err) {
    static const std::set<std::string> commands{"simulate", "fit", "synth", "dist", "replicate"};
    if (!commands.count(rc.command)) {
        err << "error: unknown command '" << rc.command << "' (expected simulate, fit, synth, dist or replicate)\n";
        return usage;
    }
    try {
        pt::ptree tree;
        fs::path base = fs::current_path();
        if (rc.config_path) {
            if (!fs::exists(*rc.config_path)) throw config_error("config file not found: " + *rc.config_path);
            try {
                pt::read_ini(*rc.config_path, tree);
            } catch (const pt::ini_parser_error& e) {
                throw format_error(std::string("config: ") + e.what());
            }
            base = fs::path(*rc.config_path).parent_path();
        }
        Config cfg(std::move(tree), base);
        for (const auto& [k, v] : rc.overrides) cfg.put(k, v);

        const long long seed = cfg.integer("run.seed", 1);
        if (seed < 0) throw config_error("run.seed must be non-negative");
        Context c{std::move(cfg), rc.seed ? *rc.seed : static_cast<std::uint64_t>(seed), {}, false, out, err};
        c.out = rc.out_dir ? fs::path(*rc.out_dir) : fs::path(c.cfg.str("run.out").value_or("out"));
        c.plot = rc.plot || c.cfg.flag("run.plot", false);
        std::error_code ec;
        fs::create_directories(c.out, ec);
        if (ec) throw format_error("cannot create output directory " + c.out.string() + ": " + ec.message());
        return dispatch(c, rc);
    } catch (const config_error& e) {
        err << "usage error: " << e.what() << "\n";
        return usage;
    } catch (const domain_error& e) {
        err << "invalid parameter: " << e.what() << "\n";
        return usage;
    } catch (const format_error& e) {
        err << "format error: " << e.what() << "\n";
        return format;
    } catch (const fit_error& e) {
        err << "fit failed: " << e.what() << "\n";
        return fit_failure;
    } catch (const integration_error& e) {
        err << "numeric failure: " << e.what() << "\n";
        return numeric;
    } catch (const step_size_error& e) {
        err << "numeric failure: " << e.what() << "\n";
        return numeric;
    } catch (const pt::ptree_error& e) {
        err << "usage error: " << e.what() << "\n";
        return usage;
    }
}

} // namespace evomarket::app
