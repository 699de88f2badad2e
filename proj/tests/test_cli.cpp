#include <gtest/gtest.h>
#include <json.hpp>
#include <pcnet/measure.hpp>

#include <set>
#include <sys/wait.h>
#include <unistd.h>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Result {
    int code = -1;
    std::string out, err;
    fs::path dir;
};

fs::path scratch() {
    static const fs::path root = [] {
        fs::path p = fs::temp_directory_path() / ("pcnet_cli_test_" + std::to_string(::getpid()));
        fs::remove_all(p);
        fs::create_directories(p);
        return p;
    }();
    return root;
}

std::string slurp(const fs::path &p) {
    std::ifstream f(p, std::ios::binary);
    std::ostringstream s;
    s << f.rdbuf();
    return s.str();
}

Result run(const std::string &args) {
    const char *exe = std::getenv("PCNET_CLI");
    if(!exe) throw std::runtime_error("PCNET_CLI not set");
    static int counter = 0;
    const fs::path out = scratch() / ("out" + std::to_string(counter));
    const fs::path err = scratch() / ("err" + std::to_string(counter++));
    const std::string cmd = std::string(exe) + " " + args + " --outdir " + (scratch() / "runs").string() + " >" + out.string() + " 2>" + err.string();
    const int st = std::system(cmd.c_str());
    Result r;
    r.code = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
    r.out = slurp(out);
    r.err = slurp(err);
    std::istringstream lines(r.out);
    std::string line;
    while(std::getline(lines, line))
        if(!line.empty() && fs::is_directory(line)) r.dir = line;
    return r;
}

std::vector<std::vector<std::string>> read_csv(const fs::path &p) {
    std::vector<std::vector<std::string>> rows;
    std::istringstream s(slurp(p));
    std::string line;
    while(std::getline(s, line)) {
        if(!line.empty() && line.back() == '\r') line.pop_back();
        std::vector<std::string> row;
        std::stringstream ls(line);
        std::string cell;
        while(std::getline(ls, cell, ',')) row.push_back(cell);
        if(!line.empty() && line.back() == ',') row.push_back("");
        rows.push_back(row);
    }
    return rows;
}

std::size_t col(const std::vector<std::string> &header, const std::string &name) {
    for(std::size_t i = 0; i < header.size(); ++i)
        if(header[i] == name) return i;
    throw std::runtime_error("no column " + name);
}

json read_json(const fs::path &p) { return json::parse(slurp(p)); }

fs::path write_config(const std::string &name, const json &j) {
    const fs::path p = scratch() / name;
    std::ofstream(p) << j.dump();
    return p;
}

} // namespace

TEST(Cli, MapsHierarchyThreeSites) {
    const Result r = run("maps --topology complete --n 3 --state hierarchy");
    ASSERT_EQ(r.code, 0) << r.err;
    ASSERT_TRUE(fs::exists(r.dir / "manifest.json"));
    ASSERT_TRUE(fs::exists(r.dir / "data.csv"));
    ASSERT_TRUE(fs::exists(r.dir / "diagnostics.json"));
    const std::string raw = slurp(r.dir / "data.csv");
    EXPECT_NE(raw.find("\r\n"), std::string::npos);
    const auto rows = read_csv(r.dir / "data.csv");
    const auto &h = rows[0];
    std::set<std::string> sites;
    for(std::size_t i = 1; i < rows.size(); ++i) {
        sites.insert(rows[i][col(h, "site")]);
        EXPECT_LT(std::stod(rows[i][col(h, "residual")]), 1e-8);
        EXPECT_TRUE(pcnet::cp_contains(std::stod(rows[i][col(h, "lambda1")]), std::stod(rows[i][col(h, "tau3")]),
                                       std::stod(rows[i][col(h, "lambda3")]), 1e-9)) << i;
    }
    EXPECT_EQ(sites, (std::set<std::string>{"0", "1", "2", "avg"}));
    const json m = read_json(r.dir / "manifest.json");
    EXPECT_EQ(m["command"], "maps");
    EXPECT_TRUE(m.contains("seed"));
    EXPECT_TRUE(m.contains("version"));
    EXPECT_EQ(m["config"]["network"]["n"], 3);
    const json d = read_json(r.dir / "diagnostics.json");
    EXPECT_LT(d["analytic_max_abs_diff"].get<double>(), 1e-9);
}

TEST(Cli, MapsNeelAverageCrossesZero) {
    const Result r = run("maps --n 4 --state neel");
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_TRUE(read_json(r.dir / "diagnostics.json")["avg_lambda3_crosses_zero"].get<bool>());
}

TEST(Cli, MapsXXPairNotPhaseCovariant) {
    const Result r = run("maps --n 2 --topology xx_pairs --x2 0.3");
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_FALSE(read_json(r.dir / "diagnostics.json")["phase_covariance"]["0"]["is_phase_covariant"].get<bool>());
}

TEST(Cli, MapsWithoutClosedFormWarns) {
    const Result r = run("maps --n 5 --topology ring --j-par 0.5 --t-max 2");
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.err.find("warning"), std::string::npos);
    EXPECT_FALSE(read_json(r.dir / "diagnostics.json")["warnings"].empty());
}

TEST(Cli, SteadyThreeQubits) {
    const Result r = run("steady --n 3 --topology complete");
    ASSERT_EQ(r.code, 0) << r.err;
    const json d = read_json(r.dir / "diagnostics.json");
    EXPECT_LT(d["abs_diff"]["lambda3"].get<double>(), 0.003);
    EXPECT_TRUE(d["constraint_exact"].get<bool>());
}

TEST(Cli, SteadyRingPermutation) {
    const fs::path cfg = write_config("ring5.json", {{"state", {{"preset", "custom"}, {"values", {0.9, -0.2, 0.4, 0.1, -0.7}}}}});
    const Result s = run("steady --config " + cfg.string() + " --n 5 --topology ring --t-max 50");
    ASSERT_EQ(s.code, 0) << s.err;
    const json d = read_json(s.dir / "diagnostics.json");
    EXPECT_TRUE(d["permutation"]["cyclic_invariant"].get<bool>());
}

TEST(Cli, VolumeWithinThreeStderr) {
    const Result r = run("volume --samples 1000000 --seed 7");
    ASSERT_EQ(r.code, 0) << r.err;
    const auto rows = read_csv(r.dir / "data.csv");
    EXPECT_TRUE(read_json(r.dir / "diagnostics.json")["total_within_3_stderr"].get<bool>());
    EXPECT_EQ(rows.size(), 4u);
}

TEST(Cli, MeasureTrajectoryOverlay) {
    const Result r = run("measure --n 3 --preset cc --c 1.0 --seed 1");
    ASSERT_EQ(r.code, 0) << r.err;
    const auto rows = read_csv(r.dir / "data.csv");
    EXPECT_NO_THROW(col(rows[0], "lambda3_bar"));
    EXPECT_NO_THROW(col(rows[0], "tau3_bar"));
    EXPECT_GT(rows.size(), 10u);
}

TEST(Cli, DisorderTruncTanhHeadroom) {
    const Result r = run("disorder --phi-dist trunc_tanh --a-phi 0.001");
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NEAR(read_json(r.dir / "diagnostics.json")["max_tau3_headroom"].get<double>(), 0.804, 3e-3);
}

TEST(Cli, FlagsOverrideConfig) {
    const fs::path cfg = write_config("n3.json", {{"network", {{"n", 3}, {"topology", "complete"}}}, {"time", {{"t_max", 1}}}});
    const Result r = run("maps --config " + cfg.string() + " --n 4");
    ASSERT_EQ(r.code, 0) << r.err;
    const json m = read_json(r.dir / "manifest.json");
    EXPECT_EQ(m["resolved"]["network"]["n"], 4);
    EXPECT_EQ(m["resolved"]["network"]["topology"], "complete");
}

TEST(Cli, ConfigErrorsCarryPaths) {
    const fs::path cfg = write_config("bad.json", {{"network", {{"n", 3}, {"bogus", 1}}}});
    Result r = run("maps --config " + cfg.string());
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("config.network.bogus"), std::string::npos) << r.err;
    EXPECT_TRUE(r.dir.empty());
    r = run("maps --n abc");
    EXPECT_EQ(r.code, 2);
    r = run("maps --no-such-flag 1");
    EXPECT_EQ(r.code, 2);
    r = run("maps --config " + (scratch() / "missing.json").string());
    EXPECT_EQ(r.code, 2);
    r = run("disorder --phi-dist cauchy");
    EXPECT_EQ(r.code, 2);
}

TEST(Cli, UnsupportedAndInvariantCodes) {
    EXPECT_EQ(run("steady --n 7 --topology complete").code, 4);
    EXPECT_EQ(run("maps --topology quench --n 3").code, 4);
    // the tabulated five-site ring channel assumes J_par = J_perp
    EXPECT_EQ(run("steady --n 5 --topology ring --j-par 0.3").code, 3);
}

TEST(Cli, ByteIdenticalReruns) {
    for(const std::string args : {"volume --samples 50000 --seed 3", "maps --n 4 --t-max 2", "measure --n 3 --preset cc --seed 5",
                                  "disorder --samples 2000 --t-points 5 --seed 2 --threads 3", "quench --n-cl 20 --window 5 --t-eval 10"}) {
        const Result a = run(args), b = run(args);
        ASSERT_EQ(a.code, 0) << args << a.err;
        ASSERT_EQ(b.code, 0) << args << b.err;
        ASSERT_NE(a.dir, b.dir);
        EXPECT_EQ(slurp(a.dir / "data.csv"), slurp(b.dir / "data.csv")) << args;
    }
}
