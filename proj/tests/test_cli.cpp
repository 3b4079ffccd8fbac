#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include <gtest/gtest.h>

#include "app.hpp"
#include "evomarket/io.hpp"

namespace fs = std::filesystem;
using evomarket::app::RunConfig;

namespace {

class Cli : public ::testing::Test {
protected:
    void SetUp() override {
        dir = fs::temp_directory_path() /
              ("evomarket_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir);
        fs::create_directories(dir);
    }
    void TearDown() override { fs::remove_all(dir); }

    int run(RunConfig rc) {
        out.str("");
        err.str("");
        return evomarket::app::run(rc, out, err);
    }

    std::string write(const std::string& name, const std::string& text) {
        std::ofstream(dir / name) << text;
        return (dir / name).string();
    }

    fs::path dir;
    std::ostringstream out, err;
};

RunConfig cmd(const std::string& c, const fs::path& out_dir) {
    RunConfig rc;
    rc.command = c;
    rc.out_dir = out_dir.string();
    return rc;
}

} // namespace

TEST_F(Cli, SimulateWritesSeriesAndPlots) {
    RunConfig rc = cmd("simulate", dir / "sim");
    rc.product = "bw_tv";
    rc.plot = true;
    rc.overrides = {{"lifecycle.echoes", "2"}};
    ASSERT_EQ(run(rc), 0) << err.str();
    for (const char* f : {"penetration.csv", "sales.csv", "nominal_price.csv", "simulate.txt", "lifecycle.svg"})
        EXPECT_TRUE(fs::exists(dir / "sim" / f)) << f;
    const auto sales = evomarket::parse_series((dir / "sim" / "sales.csv").string());
    EXPECT_EQ(sales.size(), 401u);
    EXPECT_DOUBLE_EQ(sales.t.front(), 1948.0);
}

TEST_F(Cli, SynthThenFitRecoversParameters) {
    RunConfig s = cmd("synth", dir / "syn");
    s.product = "fax";
    s.seed = 3;
    ASSERT_EQ(run(s), 0) << err.str();
    RunConfig f = cmd("fit", dir / "fit");
    f.config_path = (dir / "syn" / "fit.ini").string();
    ASSERT_EQ(run(f), 0) << err.str();
    const auto rows = evomarket::parse_fit_table_text(evomarket::detail::read_file((dir / "fit" / "fit_table.csv").string()));
    ASSERT_EQ(rows.size(), 1u);
    EXPECT_NEAR(rows[0].a, 0.45, 0.05);
    EXPECT_NEAR(rows[0].n_G0, 0.98, 0.05);
    EXPECT_TRUE(fs::exists(dir / "fit" / "fit_meta.txt"));
    EXPECT_TRUE(fs::exists(dir / "fit" / "residuals_penetration.csv"));
}

TEST_F(Cli, SynthIsDeterministic) {
    RunConfig a = cmd("synth", dir / "a"), b = cmd("synth", dir / "b");
    a.product = b.product = "vcr";
    a.seed = b.seed = 11;
    ASSERT_EQ(run(a), 0);
    ASSERT_EQ(run(b), 0);
    using evomarket::detail::read_file;
    EXPECT_EQ(read_file((dir / "a" / "penetration.csv").string()), read_file((dir / "b" / "penetration.csv").string()));
}

TEST_F(Cli, DistReport) {
    RunConfig rc = cmd("dist", dir / "d");
    rc.overrides = {{"noise.steps", "100000"}, {"reproduction.steps", "100000"}, {"size.units", "1000"}};
    ASSERT_EQ(run(rc), 0) << err.str();
    const auto m = evomarket::Metadata::parse(evomarket::detail::read_file((dir / "d" / "dist_report.txt").string()));
    EXPECT_EQ(m.get("langevin.variance_theory"), "0.5");
    EXPECT_TRUE(m.get("reproduction.short_mean"));
}

TEST_F(Cli, UsageErrorsExitTwo) {
    EXPECT_EQ(run(cmd("frobnicate", dir)), 2);
    RunConfig rc = cmd("simulate", dir);
    rc.config_path = write("bad.ini", "[bass]\nAlpha = 1\n");
    EXPECT_EQ(run(rc), 2);
    EXPECT_NE(err.str().find("Alpha"), std::string::npos);
    rc.config_path = (dir / "missing.ini").string();
    EXPECT_EQ(run(rc), 2);
    rc.config_path = write("missing_data.ini", "[fit]\npenetration = nowhere.csv\n");
    EXPECT_EQ(run(cmd("fit", dir)), 2);
    RunConfig f = cmd("fit", dir);
    f.config_path = rc.config_path;
    EXPECT_EQ(run(f), 2);
    RunConfig p = cmd("simulate", dir);
    p.product = "laserdisc";
    EXPECT_EQ(run(p), 2);
    p.product = "vcr";
    p.overrides = {{"bass.A", "-1"}};
    EXPECT_EQ(run(p), 2);
}

TEST_F(Cli, MalformedInputExitsThree) {
    write("pen.csv", "year,value\n1970,0.1\n1971,oops\n");
    RunConfig rc = cmd("fit", dir / "o");
    rc.config_path = write("fit.ini", "[fit]\nt0 = 1970\npenetration = pen.csv\n");
    EXPECT_EQ(run(rc), 3);
    EXPECT_NE(err.str().find("pen.csv:3"), std::string::npos) << err.str();
    write("pen2.csv", "year,value\n1970,0.1\n1971,1.4\n");
    rc.config_path = write("fit2.ini", "[fit]\nt0 = 1970\npenetration = pen2.csv\n");
    EXPECT_EQ(run(rc), 3);
}

TEST_F(Cli, UnfittableDataExitsFour) {
    write("p.csv", "year,value\n1970,100\n1971,120\n1972,130\n1973,150\n1974,170\n");
    RunConfig rc = cmd("fit", dir / "o");
    rc.config_path = write("fit.ini", "[fit]\nt0 = 1970\np0 = 100\nprices = p.csv\n");
    EXPECT_EQ(run(rc), 4) << err.str();
}

TEST_F(Cli, UnstableStepExitsFive) {
    RunConfig rc = cmd("dist", dir / "o");
    rc.overrides = {{"noise.steps", "1000"}, {"reproduction.dt", "0.1"}};
    EXPECT_EQ(run(rc), 5);
}

TEST_F(Cli, BinaryRejectsBadFlags) {
    const std::string bin = EVOMARKET_CLI;
    auto status = [](const std::string& c) {
        const int rc = std::system((c + " > /dev/null 2>&1").c_str());
        return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
    };
    EXPECT_EQ(status(bin + " simulate --no-such-flag"), 2);
    EXPECT_EQ(status(bin + " simulate --set novalue"), 2);
    EXPECT_EQ(status(bin + " --help"), 0);
    EXPECT_EQ(status(bin + " simulate -p clothes_dryer -o " + (dir / "cd").string()), 0);
}

TEST_F(Cli, SampleConfigsParse) {
    for (const auto& e : fs::directory_iterator(EVOMARKET_CONFIGS)) {
        if (e.path().extension() != ".ini") continue;
        std::ifstream in(e.path());
        std::string first;
        std::getline(in, first);
        EXPECT_FALSE(first.empty()) << e.path();
    }
    RunConfig rc = cmd("simulate", dir / "s");
    rc.config_path = std::string(EVOMARKET_CONFIGS) + "/simulate_bw_tv.ini";
    EXPECT_EQ(run(rc), 0) << err.str();
    RunConfig f = cmd("fit", dir / "f");
    f.config_path = std::string(EVOMARKET_CONFIGS) + "/fit_colour_tv.ini";
    EXPECT_EQ(run(f), 0) << err.str();
}
