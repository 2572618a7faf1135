#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include <gtest/gtest.h>

#include "pipeline.hpp"
#include "support/fixtures.hpp"

namespace fs = std::filesystem;
using namespace spraymet;

namespace {

struct Outcome {
    int code = -1;
    std::string out;
};

Outcome cli(const std::string& args) {
    const std::string cmd = std::string(SPRAYMET_CLI) + " " + args + " 2>/dev/null";
    FILE* pipe = ::popen(cmd.c_str(), "r");
    Outcome o;
    if (!pipe) return o;
    char buf[4096];
    std::size_t n;
    while ((n = std::fread(buf, 1, sizeof buf, pipe)) > 0) o.out.append(buf, n);
    const int status = ::pclose(pipe);
    o.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return o;
}

std::string fixture_path(const std::string& name) { return std::string(SPRAYMET_FIXTURES_DIR) + "/" + name; }

fs::path scratch(const std::string& name, const std::string& content) {
    const fs::path p = fs::temp_directory_path() / ("spraymet_cli_" + std::to_string(::getpid()) + "_" + name);
    std::ofstream(p) << content;
    return p;
}

}  // namespace

TEST(Cli, ExitCodes) {
    EXPECT_EQ(cli("run --input " + fixture_path("poincare.job")).code, 0);
    EXPECT_EQ(cli("run --input " + fixture_path("degenerate.job")).code, 0);
    EXPECT_EQ(cli("run --input " + fixture_path("nonmetrizable.job")).code, 1);
    EXPECT_EQ(cli("run --input /nonexistent.job").code, 3);
    EXPECT_EQ(cli("run").code, 3);
    EXPECT_EQ(cli("frobnicate").code, 3);
    EXPECT_EQ(cli("run --input " + fixture_path("poincare.job") + " --report xml").code, 3);
}

TEST(Cli, EmptyDomainAndBadJobsAreInputErrors) {
    const auto empty = scratch("empty.job", R"J({"spray": {"G1": "-y1*y2/x2", "G2": "(y1^2 - y2^2)/(2*x2)"},
        "domain": {"x1": [1, -1], "x2": [0.5, 2]}})J");
    EXPECT_EQ(cli("run --input " + empty.string()).code, 3);
    const auto unknown = scratch("unknown.job", R"J({"spray": {"G1": "0", "G2": "0"}, "colour": 1})J");
    EXPECT_EQ(cli("run --input " + unknown.string()).code, 3);
    const auto syntax = scratch("syntax.job", R"J({"spray": {"G1": "y1*(y2", "G2": "0"}})J");
    EXPECT_EQ(cli("run --input " + syntax.string()).code, 3);
    const auto inhomog = scratch("inhomog.job", R"J({"spray": {"G1": "y1^3", "G2": "0"},
        "domain": {"x2": [0.5, 2]}})J");
    EXPECT_EQ(cli("run --input " + inhomog.string()).code, 3);
    const auto flat = scratch("flat.job", R"J({"spray": {"G1": "0", "G2": "0"}})J");
    EXPECT_EQ(cli("run --input " + flat.string()).code, 2);
    for (const auto& p : {empty, unknown, syntax, inhomog, flat}) fs::remove(p);
}

TEST(Cli, TextReportShowsRank) {
    const Outcome o = cli("run --input " + fixture_path("poincare.job") + " --report text");
    EXPECT_EQ(o.code, 0);
    EXPECT_NE(o.out.find("rank(Omega) = 4"), std::string::npos);
    EXPECT_NE(o.out.find("RegularMetrizable"), std::string::npos);
    const Outcome d = cli("run --input " + fixture_path("degenerate.job") + " --report text");
    EXPECT_NE(d.out.find("rank(Omega) = 2"), std::string::npos);
}

TEST(Cli, OutFileAndOverrides) {
    const fs::path out = fs::temp_directory_path() / ("spraymet_cli_out_" + std::to_string(::getpid()) + ".json");
    const Outcome o = cli("run --input " + fixture_path("nonmetrizable.job") + " --samples 50 --seed 7 --out " +
                          out.string());
    EXPECT_EQ(o.code, 1);
    EXPECT_TRUE(o.out.empty());
    const app::Report r = app::report_from_json(app::read_file(out));
    EXPECT_EQ(r.provenance.samples, 50u);
    EXPECT_EQ(r.provenance.seed, 7u);
    EXPECT_EQ(r.verdict, "NotMetrizable");
    fs::remove(out);
}

TEST(Cli, ReconstructWithGrid) {
    const Outcome o = cli("run --input " + fixture_path("poincare.job") + " --reconstruct --grid " +
                          fixture_path("poincare.grid"));
    ASSERT_EQ(o.code, 0);
    const app::Report r = app::report_from_json(o.out);
    ASSERT_TRUE(r.reconstruction.has_value());
    EXPECT_EQ(r.reconstruction->grid.size(), app::load_grid(fixture_path("poincare.grid")).size());
    for (const auto& row : r.reconstruction->grid) {
        const Point& p = row.point;
        EXPECT_NEAR(row.F, std::hypot(p.y1(), p.y2()) / p.x2(), 1e-9);
    }
    for (const auto& c : r.reconstruction->verification) EXPECT_TRUE(c.pass) << c.name;
}

TEST(Report, JsonRoundTrip) {
    app::JobSpec job = fixture::job("poincare");
    job.run.samples = 60;
    const app::Report r = app::run(job);
    const std::string json = app::to_json(r);
    const app::Report back = app::report_from_json(json);
    EXPECT_TRUE(back == r);
    EXPECT_EQ(app::to_json(back), json);
}

TEST(Report, DeterministicAcrossRunsAndThreads) {
    const std::string a = cli("run --input " + fixture_path("poincare.job") + " --samples 80").out;
    const std::string b = cli("run --input " + fixture_path("poincare.job") + " --samples 80").out;
    const std::string c = cli("run --input " + fixture_path("poincare.job") + " --samples 80 --threads 4").out;
    ASSERT_FALSE(a.empty());
    EXPECT_EQ(a, b);
    EXPECT_EQ(a, c);
}

TEST(Job, ParsingRules) {
    const app::JobSpec j = app::parse_job(R"J({"name": "t", "spray": {"G1": "0", "G2": "y1^2"},
        "sampling": {"samples": 10, "seed": 3}, "tolerances": {"closed": 1e-8}})J");
    EXPECT_EQ(j.name, "t");
    EXPECT_EQ(j.run.samples, 10u);
    EXPECT_EQ(j.run.seed, 3u);
    EXPECT_EQ(j.run.tol.closed, 1e-8);
    EXPECT_EQ(j.run.tol.rank, 1e-7);
    EXPECT_THROW(app::parse_job("{"), std::invalid_argument);
    EXPECT_THROW(app::parse_job(R"J({"spray": {"G1": "0"}})J"), std::invalid_argument);
    EXPECT_THROW(app::parse_job(R"J({"spray": {"G1": "0", "G2": "0"}, "tolerances": {"closed": -1}})J"),
                 std::invalid_argument);
    const auto grid = app::parse_grid("# header\n0 1 0 1\n\n0.5 2 1 1  # tail\n");
    ASSERT_EQ(grid.size(), 2u);
    EXPECT_EQ(grid[1], Point(0.5, 2, 1, 1));
    EXPECT_THROW(app::parse_grid("0 1 0\n"), std::invalid_argument);
}
