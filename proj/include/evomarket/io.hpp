#pragma once

// Text formats: series CSV, fit tables, key = value metadata and SVG line plots.
//
// Series CSV: UTF-8, '.' decimals, lines starting with '#' are comments, blank lines ignored.
// The first other line is the header `year,value` or `year,value,kind`.

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "evomarket/calibration.hpp"
#include "evomarket/errors.hpp"
#include "evomarket/table1.hpp"

namespace evomarket {

/// Shortest exact text for a double (round-trips through parse_double).
inline std::string format_double(double v) {
    if (std::isnan(v)) return "-";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

inline std::vector<std::string_view> split(std::string_view s, char sep) {
    std::vector<std::string_view> out;
    std::size_t pos = 0;
    while (true) {
        const std::size_t next = s.find(sep, pos);
        out.push_back(trim(s.substr(pos, next == std::string_view::npos ? std::string_view::npos : next - pos)));
        if (next == std::string_view::npos) break;
        pos = next + 1;
    }
    return out;
}

inline std::optional<double> parse_double(std::string_view s) {
    s = trim(s);
    if (s.empty()) return std::nullopt;
    if (s.front() == '+') s.remove_prefix(1);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
    return v;
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw format_error(path + ": cannot open file");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw format_error(path + ": cannot write file");
    out << content;
    if (!out) throw format_error(path + ": write failed");
}

} // namespace detail

/** Parses series CSV text. `source` prefixes error messages; rows are reported by line number.
 *
 * Without a kind column the series takes `default_kind`. A kind column must name the same kind
 * on every row.
 */
inline TimeSeries parse_series_text(std::string_view text, SeriesKind default_kind = SeriesKind::sales,
                                    const std::string& source = "<input>") {
    TimeSeries s;
    s.kind = default_kind;
    bool header = false, with_kind = false, kind_seen = false;
    std::size_t line_no = 0, pos = 0;
    auto fail = [&](const std::string& msg) -> format_error {
        return format_error(source + ":" + std::to_string(line_no) + ": " + msg);
    };
    while (pos <= text.size()) {
        const std::size_t end = text.find('\n', pos);
        std::string_view line = text.substr(pos, end == std::string_view::npos ? std::string_view::npos : end - pos);
        pos = end == std::string_view::npos ? text.size() + 1 : end + 1;
        ++line_no;
        line = detail::trim(line);
        if (line_no == 1 && line.substr(0, 3) == "\xEF\xBB\xBF") line.remove_prefix(3);
        if (line.empty() || line.front() == '#') continue;
        const auto cells = detail::split(line, ',');
        if (!header) {
            if (cells.size() == 2 && cells[0] == "year" && cells[1] == "value") {
                with_kind = false;
            } else if (cells.size() == 3 && cells[0] == "year" && cells[1] == "value" && cells[2] == "kind") {
                with_kind = true;
            } else {
                throw fail("missing header 'year,value[,kind]'");
            }
            header = true;
            continue;
        }
        if (cells.size() != (with_kind ? 3u : 2u)) throw fail("expected " + std::to_string(with_kind ? 3 : 2) + " columns");
        const auto year = detail::parse_double(cells[0]);
        if (!year || !std::isfinite(*year)) throw fail("non-numeric year '" + std::string(cells[0]) + "'");
        const auto value = detail::parse_double(cells[1]);
        if (!value || !std::isfinite(*value)) throw fail("non-numeric value '" + std::string(cells[1]) + "'");
        if (with_kind) {
            const auto k = parse_series_kind(cells[2]);
            if (!k) throw fail("unknown kind '" + std::string(cells[2]) + "'");
            if (kind_seen && *k != s.kind) throw fail("kind changes within the file");
            s.kind = *k;
            kind_seen = true;
        }
        if (!s.t.empty() && !(*year > s.t.back())) throw fail("year " + format_double(*year) + " is not strictly increasing");
        const bool unit = s.kind == SeriesKind::penetration || s.kind == SeriesKind::share;
        if (unit && (*value < 0.0 || *value > 1.0))
            throw range_error(source + ":" + std::to_string(line_no) + ": " + to_string(s.kind) + " value " +
                              format_double(*value) + " outside [0, 1]");
        if (s.kind == SeriesKind::nominal_price && *value < 0.0)
            throw range_error(source + ":" + std::to_string(line_no) + ": negative price");
        s.t.push_back(*year);
        s.v.push_back(*value);
    }
    if (!header) throw format_error(source + ": missing header 'year,value[,kind]'");
    s.validate();
    return s;
}

inline TimeSeries parse_series(const std::string& path, SeriesKind default_kind = SeriesKind::sales) {
    return parse_series_text(detail::read_file(path), default_kind, path);
}

inline std::string format_series(const TimeSeries& s, std::string_view comment = {}) {
    std::string out;
    if (!comment.empty()) {
        for (const auto& line : detail::split(comment, '\n')) out += "# " + std::string(line) + "\n";
    }
    out += "year,value,kind\n";
    for (std::size_t i = 0; i < s.size(); ++i)
        out += format_double(s.t[i]) + "," + format_double(s.v[i]) + "," + to_string(s.kind) + "\n";
    return out;
}

inline void write_series(const std::string& path, const TimeSeries& s, std::string_view comment = {}) {
    detail::write_file(path, format_series(s, comment));
}

// ---------------------------------------------------------------------------------------------
// Fit tables: one row per product in the product-table schema; blanks are '-'.

inline constexpr std::array<const char*, 19> fit_table_columns{
    "product", "t0", "dt", "pm_p0", "a", "k", "n_G0", "n_B0", "A", "B",
    "R", "Q", "R_prime", "Q_prime", "t_p", "t_p_prime", "M", "theta", "C_m"};

namespace detail {

inline std::array<double Table1Row::*, 18> table_fields() {
    return {&Table1Row::t0, &Table1Row::dt, &Table1Row::pm_p0, &Table1Row::a, &Table1Row::k, &Table1Row::n_G0,
            &Table1Row::n_B0, &Table1Row::A, &Table1Row::B, &Table1Row::R, &Table1Row::Q, &Table1Row::R_prime,
            &Table1Row::Q_prime, &Table1Row::t_p, &Table1Row::t_p_prime, &Table1Row::M, &Table1Row::theta,
            &Table1Row::C_m};
}

} // namespace detail

inline std::string format_fit_table(const std::vector<Table1Row>& rows) {
    std::string out;
    for (std::size_t i = 0; i < fit_table_columns.size(); ++i) out += (i ? "," : "") + std::string(fit_table_columns[i]);
    out += "\n";
    for (const auto& r : rows) {
        out += r.name;
        for (auto f : detail::table_fields()) out += "," + format_double(r.*f);
        out += "\n";
    }
    return out;
}

inline std::vector<Table1Row> parse_fit_table_text(std::string_view text, const std::string& source = "<table>") {
    std::vector<Table1Row> rows;
    bool header = false;
    std::size_t line_no = 0;
    for (const auto& raw : detail::split(text, '\n')) {
        ++line_no;
        const auto line = detail::trim(raw);
        if (line.empty() || line.front() == '#') continue;
        const auto cells = detail::split(line, ',');
        auto fail = [&](const std::string& msg) {
            return format_error(source + ":" + std::to_string(line_no) + ": " + msg);
        };
        if (!header) {
            if (cells.size() != fit_table_columns.size()) throw fail("fit table header has the wrong column count");
            for (std::size_t i = 0; i < cells.size(); ++i)
                if (cells[i] != fit_table_columns[i]) throw fail("unexpected column '" + std::string(cells[i]) + "'");
            header = true;
            continue;
        }
        if (cells.size() != fit_table_columns.size()) throw fail("wrong column count");
        Table1Row r;
        r.name = std::string(cells[0]);
        const auto fields = detail::table_fields();
        for (std::size_t i = 0; i < fields.size(); ++i) {
            if (cells[i + 1] == "-") {
                r.*fields[i] = blank;
                continue;
            }
            const auto v = detail::parse_double(cells[i + 1]);
            if (!v) throw fail("non-numeric cell '" + std::string(cells[i + 1]) + "'");
            r.*fields[i] = *v;
        }
        rows.push_back(std::move(r));
    }
    if (!header) throw format_error(source + ": missing fit table header");
    return rows;
}

// ---------------------------------------------------------------------------------------------
// Metadata: `key = value` lines, '#' comments; keys are unique and kept in insertion order.

class Metadata {
public:
    void set(const std::string& key, const std::string& value) {
        for (auto& kv : entries_)
            if (kv.first == key) {
                kv.second = value;
                return;
            }
        entries_.emplace_back(key, value);
    }
    void set(const std::string& key, double value) { set(key, format_double(value)); }

    std::optional<std::string> get(const std::string& key) const {
        for (const auto& kv : entries_)
            if (kv.first == key) return kv.second;
        return std::nullopt;
    }

    const std::vector<std::pair<std::string, std::string>>& entries() const { return entries_; }

    std::string str() const {
        std::string out;
        for (const auto& [k, v] : entries_) out += k + " = " + v + "\n";
        return out;
    }

    static Metadata parse(std::string_view text) {
        Metadata m;
        for (const auto& raw : detail::split(text, '\n')) {
            const auto line = detail::trim(raw);
            if (line.empty() || line.front() == '#') continue;
            const auto eq = line.find('=');
            if (eq == std::string_view::npos) throw format_error("metadata line without '='");
            m.set(std::string(detail::trim(line.substr(0, eq))), std::string(detail::trim(line.substr(eq + 1))));
        }
        return m;
    }

private:
    std::vector<std::pair<std::string, std::string>> entries_;
};

// ---------------------------------------------------------------------------------------------
// SVG

struct PlotSeries {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
    bool markers = false; ///< scatter instead of a line
};

/// Minimal line/scatter chart with axes, five ticks per axis and a legend.
inline std::string render_svg(const std::vector<PlotSeries>& series, const std::string& title,
                              const std::string& xlabel, const std::string& ylabel, bool log_y = false) {
    const double W = 720, H = 440, L = 70, R = 160, T = 40, B = 50;
    double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
    auto ty = [log_y](double v) { return log_y ? std::log10(v) : v; };
    for (const auto& s : series)
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (log_y && !(s.y[i] > 0.0)) continue;
            if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
            x0 = std::min(x0, s.x[i]);
            x1 = std::max(x1, s.x[i]);
            y0 = std::min(y0, ty(s.y[i]));
            y1 = std::max(y1, ty(s.y[i]));
        }
    if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
    if (x1 == x0) x1 = x0 + 1;
    if (y1 == y0) y1 = y0 + 1;
    const double pw = W - L - R, ph = H - T - B;
    auto px = [&](double v) { return L + (v - x0) / (x1 - x0) * pw; };
    auto py = [&](double v) { return T + ph - (v - y0) / (y1 - y0) * ph; };
    auto num = [](double v) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.2f", v);
        return std::string(buf);
    };
    auto tick = [](double v) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.4g", v);
        return std::string(buf);
    };
    auto esc = [](const std::string& t) {
        std::string r;
        for (char ch : t) {
            if (ch == '&') r += "&amp;";
            else if (ch == '<') r += "&lt;";
            else if (ch == '>') r += "&gt;";
            else r += ch;
        }
        return r;
    };
    auto drawable = [&](double x, double y) { return std::isfinite(x) && std::isfinite(y) && (!log_y || y > 0.0); };
    static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

    std::string o;
    o += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(W) + "\" height=\"" + num(H) + "\">\n";
    o += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    o += "<text x=\"" + num(L) + "\" y=\"24\" font-family=\"sans-serif\" font-size=\"15\">" + esc(title) + "</text>\n";
    o += "<rect x=\"" + num(L) + "\" y=\"" + num(T) + "\" width=\"" + num(pw) + "\" height=\"" + num(ph) +
         "\" fill=\"none\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 4; ++i) {
        const double xv = x0 + (x1 - x0) * i / 4.0, yv = y0 + (y1 - y0) * i / 4.0;
        o += "<text x=\"" + num(px(xv)) + "\" y=\"" + num(T + ph + 16) +
             "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">" + tick(xv) + "</text>\n";
        o += "<text x=\"" + num(L - 6) + "\" y=\"" + num(py(yv) + 4) +
             "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">" +
             tick(log_y ? std::pow(10.0, yv) : yv) + "</text>\n";
    }
    o += "<text x=\"" + num(L + pw / 2) + "\" y=\"" + num(H - 12) +
         "\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\">" + esc(xlabel) + "</text>\n";
    o += "<text x=\"16\" y=\"" + num(T + ph / 2) + "\" font-family=\"sans-serif\" font-size=\"12\" "
         "text-anchor=\"middle\" transform=\"rotate(-90 16 " + num(T + ph / 2) + ")\">" + esc(ylabel) + "</text>\n";
    for (std::size_t k = 0; k < series.size(); ++k) {
        const auto& s = series[k];
        const std::string c = colors[k % 6];
        if (s.markers) {
            for (std::size_t i = 0; i < s.x.size(); ++i) {
                if (!drawable(s.x[i], s.y[i])) continue;
                o += "<circle cx=\"" + num(px(s.x[i])) + "\" cy=\"" + num(py(ty(s.y[i]))) + "\" r=\"2.5\" fill=\"" + c + "\"/>\n";
            }
        } else {
            o += "<polyline fill=\"none\" stroke=\"" + c + "\" stroke-width=\"1.5\" points=\"";
            for (std::size_t i = 0; i < s.x.size(); ++i) {
                if (!drawable(s.x[i], s.y[i])) continue;
                o += num(px(s.x[i])) + "," + num(py(ty(s.y[i]))) + " ";
            }
            o += "\"/>\n";
        }
        const double ly = T + 14 + 18.0 * static_cast<double>(k);
        o += "<rect x=\"" + num(W - R + 12) + "\" y=\"" + num(ly - 8) + "\" width=\"12\" height=\"8\" fill=\"" + c + "\"/>\n";
        o += "<text x=\"" + num(W - R + 30) + "\" y=\"" + num(ly) + "\" font-family=\"sans-serif\" font-size=\"11\">" +
             esc(s.label) + "</text>\n";
    }
    o += "</svg>\n";
    return o;
}

} // namespace evomarket
