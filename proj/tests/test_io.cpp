#include <cmath>
#include <filesystem>

#include <gtest/gtest.h>

#include "evomarket/io.hpp"
#include "evomarket/table1.hpp"

using namespace evomarket;

TEST(SeriesCsv, ParsesHeaderCommentsAndBom) {
    const std::string text = "\xEF\xBB\xBF# prices\nyear,value\n1954.5, 1000\n\n1955.5,900.25\n";
    const TimeSeries s = parse_series_text(text, SeriesKind::nominal_price);
    ASSERT_EQ(s.size(), 2u);
    EXPECT_EQ(s.kind, SeriesKind::nominal_price);
    EXPECT_DOUBLE_EQ(s.v[1], 900.25);
}

TEST(SeriesCsv, KindColumnOverridesDefault) {
    const TimeSeries s = parse_series_text("year,value,kind\n1990,0.1,share\n1991,0.2,share\n");
    EXPECT_EQ(s.kind, SeriesKind::share);
    EXPECT_THROW(parse_series_text("year,value,kind\n1990,0.1,share\n1991,0.2,sales\n"), format_error);
    EXPECT_THROW(parse_series_text("year,value,kind\n1990,0.1,widgets\n"), format_error);
}

TEST(SeriesCsv, ErrorsCarryLineNumbers) {
    try {
        parse_series_text("year,value\n1990,1\n1991,abc\n", SeriesKind::sales, "data.csv");
        FAIL();
    } catch (const format_error& e) {
        EXPECT_NE(std::string(e.what()).find("data.csv:3"), std::string::npos) << e.what();
    }
    EXPECT_THROW(parse_series_text("1990,1\n"), format_error);
    EXPECT_THROW(parse_series_text("year,value\n1991,1\n1990,2\n"), format_error);
    EXPECT_THROW(parse_series_text("year,value\n1991,1,2\n"), format_error);
    EXPECT_THROW(parse_series_text("year,value\n1991,nan\n"), format_error);
    EXPECT_THROW(parse_series_text("year,value\n1991,1.2\n", SeriesKind::penetration), range_error);
    EXPECT_THROW(parse_series_text("year,value\n1991,-3\n", SeriesKind::nominal_price), range_error);
}

TEST(SeriesCsv, FormatParseRoundTripIsExact) {
    TimeSeries s{SeriesKind::first_purchase, {1976, 1977, 1978}, {0.1, 1.0 / 3.0, 2.0e-17}};
    const std::string text = format_series(s, "note");
    const TimeSeries back = parse_series_text(text);
    EXPECT_EQ(back.kind, s.kind);
    EXPECT_EQ(back.t, s.t);
    EXPECT_EQ(back.v, s.v);

    const auto path = (std::filesystem::temp_directory_path() / "evomarket_io_test.csv").string();
    write_series(path, s);
    EXPECT_EQ(parse_series(path).v, s.v);
    std::filesystem::remove(path);
    EXPECT_THROW(parse_series("/nonexistent/dir/x.csv"), format_error);
}

TEST(FitTable, RoundTripKeepsBlanks) {
    const std::vector<Table1Row> rows{table1::bw_tv(), table1::vhs()};
    const auto back = parse_fit_table_text(format_fit_table(rows));
    ASSERT_EQ(back.size(), 2u);
    EXPECT_EQ(back[0].name, "bw_tv");
    EXPECT_EQ(back[0].t_p, 9.2);
    EXPECT_TRUE(std::isnan(back[1].a));
    EXPECT_EQ(back[1].theta, 0.22);
    EXPECT_THROW(parse_fit_table_text("product,t0\nx,1\n"), format_error);
}

TEST(Metadata, KeyValueRoundTrip) {
    Metadata m;
    m.set("seed", "42");
    m.set("a", 0.1);
    m.set("seed", "43");
    const Metadata back = Metadata::parse(m.str());
    EXPECT_EQ(back.get("seed"), "43");
    EXPECT_EQ(back.get("a"), "0.10000000000000001");
    EXPECT_FALSE(back.get("missing"));
    EXPECT_THROW(Metadata::parse("novalue\n"), format_error);
    EXPECT_EQ(format_double(std::nan("")), "-");
}

TEST(Svg, RendersSeriesAndLegend) {
    const std::string svg = render_svg({{"model", {0, 1, 2}, {1, 10, 100}, false}, {"data", {0, 1}, {2, 20}, true}},
                                       "title & more", "year", "value", true);
    EXPECT_EQ(svg.rfind("<svg", 0), 0u);
    EXPECT_NE(svg.find("polyline"), std::string::npos);
    EXPECT_NE(svg.find("circle"), std::string::npos);
    EXPECT_NE(svg.find("title &amp; more"), std::string::npos);
}
