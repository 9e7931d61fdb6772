#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "support.hpp"

using namespace mgtrade;
namespace fs = std::filesystem;

namespace {

const fs::path kWork = fs::temp_directory_path() / "mgtrade_cli_test";

struct Result {
    int code;
    std::string err;
};

Result cli(const std::string& args) {
    fs::create_directories(kWork);
    const fs::path err = kWork / "stderr.txt";
    const std::string cmd =
        std::string(MGTRADE_CLI) + " " + args + " > " + (kWork / "stdout.txt").string() + " 2> " + err.string();
    const int status = std::system(cmd.c_str());
    std::ifstream in(err);
    std::stringstream ss;
    ss << in.rdbuf();
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, ss.str()};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
    std::vector<std::vector<std::string>> rows;
    std::ifstream in(p);
    std::string line;
    while (std::getline(in, line)) rows.push_back(csv::split_line(line));
    return rows;
}

std::string desk() { return std::string(MGTRADE_DATA_DIR) + "/desk.json"; }

} // namespace

TEST(Cli, GenIsByteIdenticalPerSeed) {
    ASSERT_EQ(cli("gen --seed 5 --out " + (kWork / "a.json").string()).code, 0);
    ASSERT_EQ(cli("gen --seed 5 --out " + (kWork / "b.json").string()).code, 0);
    EXPECT_EQ(slurp(kWork / "a.json"), slurp(kWork / "b.json"));
    GeneratorOptions g;
    g.seed = 5;
    EXPECT_EQ(slurp(kWork / "a.json"), emit_scenario(generate_scenario(g)));
}

TEST(Cli, GenSingleMicrogrid) {
    ASSERT_EQ(cli("gen --microgrids 1 --users 2 --out " + (kWork / "one.json").string()).code, 0);
    const Scenario sc = load_scenario((kWork / "one.json").string());
    EXPECT_EQ(sc.size(), 1u);
    EXPECT_EQ(sc.microgrids[0].users.size(), 2u);
}

TEST(Cli, BenchmarkZeroScenario) {
    Scenario sc;
    sc.time = {3, 1.0};
    sc.prices = mgtrade::testing::flat_prices(3, 0.2, 0.1);
    sc.microgrids = {mgtrade::testing::empty_microgrid(3, "a"), mgtrade::testing::empty_microgrid(3, "b")};
    std::ofstream(kWork / "zero.json") << emit_scenario(sc);
    const fs::path out = kWork / "zero_out";
    ASSERT_EQ(cli("benchmark --scenario " + (kWork / "zero.json").string() + " --out " + out.string()).code, 0);
    const auto rows = read_csv(out / "costs.csv");
    ASSERT_EQ(rows.size(), 3u);
    for (std::size_t i = 1; i < 3; ++i) EXPECT_NEAR(std::stod(rows[i][1]), 0.0, 1e-8);
}

TEST(Cli, BenchmarkDeskCostsPositive) {
    const fs::path out = kWork / "bench_desk";
    ASSERT_EQ(cli("benchmark --scenario " + desk() + " --out " + out.string()).code, 0);
    const auto rows = read_csv(out / "costs.csv");
    ASSERT_EQ(rows.size(), 4u);
    for (std::size_t i = 1; i < 4; ++i) EXPECT_GT(std::stod(rows[i][1]), 0.0);
}

TEST(Cli, MalformedFileExitsWithFieldPath) {
    Json doc = scenario_to_json(mgtrade::testing::desk_scenario());
    doc["microgrids"][2]["storage"].erase("capacity");
    std::ofstream(kWork / "bad.json") << doc.dump();
    const Result r = cli("benchmark --scenario " + (kWork / "bad.json").string() + " --out " + kWork.string());
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("microgrids[2].storage.capacity"), std::string::npos) << r.err;
    EXPECT_EQ(cli("run --scenario /nonexistent.json").code, 2);
    EXPECT_EQ(cli("run --scenario " + desk() + " --rho-schedule sometimes").code, 2);
    EXPECT_EQ(cli("frobnicate").code, 2);
}

TEST(Cli, RunDeskCertifies) {
    const fs::path out = kWork / "run_desk";
    const Result r = cli("run --scenario " + desk() + " --certify --out " + out.string());
    ASSERT_EQ(r.code, 0) << r.err;
    const Json report = Json::parse(slurp(out / "report.json"));
    EXPECT_TRUE(report["certificate"]["passed"].get<bool>());
    EXPECT_EQ(report["microgrids"].size(), 3u);
}

TEST(Cli, OutputShapesMatchGolden) {
    const fs::path out = kWork / "run_desk_shapes";
    ASSERT_EQ(cli("run --scenario " + desk() + " --out " + out.string()).code, 0);
    ASSERT_EQ(cli("benchmark --scenario " + desk() + " --out " + out.string()).code, 0);
    const auto golden = read_csv(fs::path(MGTRADE_GOLDEN_DIR) / "desk_outputs.csv");
    ASSERT_GT(golden.size(), 1u);
    for (std::size_t g = 1; g < golden.size(); ++g) {
        const auto rows = read_csv(out / golden[g][0]);
        if (golden[g][1] != "*") {
            EXPECT_EQ(rows.size(), std::stoul(golden[g][1])) << golden[g][0];
        }
        EXPECT_GT(rows.size(), 1u) << golden[g][0];
        for (const auto& row : rows) EXPECT_EQ(row.size(), std::stoul(golden[g][2])) << golden[g][0];
    }
}

TEST(Cli, OneIterationIsUncertified) {
    const Result r = cli("run --scenario " + desk() + " --certify --max-iters 1 --out " + (kWork / "r1").string());
    EXPECT_EQ(r.code, 3);
    EXPECT_NE(r.err.find("certification failed"), std::string::npos);
}

TEST(Cli, SingleMicrogridRunHasNoTrades) {
    ASSERT_EQ(cli("gen --microgrids 1 --out " + (kWork / "single.json").string()).code, 0);
    const fs::path out = kWork / "single_out";
    ASSERT_EQ(cli("run --scenario " + (kWork / "single.json").string() + " --certify --out " + out.string()).code, 0);
    const Json report = Json::parse(slurp(out / "report.json"));
    EXPECT_TRUE(report["traders"].empty());
    for (const auto& row : report["trades"])
        for (const auto& series : row)
            for (const auto& v : series) EXPECT_EQ(v.get<double>(), 0.0);
}

TEST(Cli, RunOptionsReachTheAlgorithm) {
    const fs::path out = kWork / "opts";
    ASSERT_EQ(cli("run --scenario " + desk() + " --rho1 2 --rho2 0.5 --eps1 1e-3 --eps2 1e-5 " +
                  "--rho-schedule residual-balancing --out " + out.string())
                  .code,
              0);
    const auto p1 = read_csv(out / "residuals_p1.csv");
    EXPECT_EQ(p1[0], (std::vector<std::string>{"iteration", "primal_residual", "dual_residual", "objective"}));
}
