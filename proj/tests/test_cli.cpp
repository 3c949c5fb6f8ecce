#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "cli.hpp"

namespace {

struct CliRun {
    int code;
    std::string out;
    std::string err;
};

CliRun run(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = pnorm::cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

std::filesystem::path temp_dir(const std::string& name) {
    const auto p = std::filesystem::temp_directory_path() / ("pnorm_cli_test_" + name);
    std::filesystem::remove_all(p);
    return p;
}

std::string read(const std::filesystem::path& p) {
    std::ifstream in(p);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

}  // namespace

TEST(Cli, NormPrintsSummaryLine) {
    const CliRun r = run({"norm", "--state", "bell", "--field", "real", "--restarts", "2"});
    EXPECT_EQ(r.code, 0);
    EXPECT_EQ(r.out.rfind("norm=1.414", 0), 0u) << r.out;
    EXPECT_NE(r.out.find("rank=2 converged=true"), std::string::npos);
}

TEST(Cli, ExitCodes) {
    EXPECT_EQ(run({"norm", "--file", "/nonexistent.json"}).code, 2);
    EXPECT_EQ(run({"norm"}).code, 2);  // no input source
    EXPECT_EQ(run({"norm", "--state", "bell", "--file", "x.json"}).code, 2);
    EXPECT_EQ(run({"norm", "--state", "bell", "--bogus"}).code, 2);
    EXPECT_EQ(run({"norm", "--state", "nope"}).code, 2);
    EXPECT_EQ(run({"norm", "--state", "dps3"}).code, 2);  // operator needs density-norm
    EXPECT_EQ(run({"density-norm", "--state", "ghz"}).code, 2);
    EXPECT_EQ(run({"sweep", "--state", "dps3", "--grid", "alpha=0:5"}).code, 2);
    EXPECT_EQ(run({"norm", "--state", "bell", "--param", "oops"}).code, 2);
    // A one-epoch budget cannot converge; the result is still reported.
    const CliRun r = run({"norm", "--state", "ghz", "--epochs", "1", "--restarts", "1"});
    EXPECT_EQ(r.code, 3);
    EXPECT_NE(r.out.find("converged=false"), std::string::npos);
    EXPECT_EQ(run({"--help"}).code, 0);
}

TEST(Cli, HelpListsDefaults) {
    const CliRun r = run({"norm", "--help"});
    EXPECT_EQ(r.code, 0);
    for (const char* flag : {"--restarts INT [8]", "--epochs INT [20000]", "--lr FLOAT [0.01]", "--k1 FLOAT [100]",
                             "--eps FLOAT [0.001]", "--tolerance FLOAT [0.01]", "--seed UINT [0]"}) {
        EXPECT_NE(r.out.find(flag), std::string::npos) << flag;
    }
}

TEST(Cli, NormWritesResultAndTrace) {
    const auto dir = temp_dir("norm");
    const CliRun r = run({"norm", "--state", "ghz", "--restarts", "1", "--epochs", "4000", "--out", dir.string(),
                       "--trace"});
    EXPECT_EQ(r.code, 0);
    const std::string json = read(dir / "result.json");
    EXPECT_EQ(json.rfind("{\"norm_estimate\":", 0), 0u);
    EXPECT_EQ(read(dir / "trace.csv").rfind("epoch,total_loss,recon_error,rank_count,norm_sum\n", 0), 0u);
    std::filesystem::remove_all(dir);
}

TEST(Cli, TwoAxisSweepHasOneRowPerGridPoint) {
    const CliRun r = run({"sweep", "--state", "zzzg", "--grid", "a=0.2:0.8:3", "--grid", "p=0:1:2", "--restarts", "1",
                       "--epochs", "400"});
    std::istringstream lines(r.out);
    std::string line;
    std::getline(lines, line);
    EXPECT_EQ(line, "param1,param2,norm,rank,recon_error,converged");
    std::vector<std::string> rows;
    while (std::getline(lines, line)) rows.push_back(line);
    ASSERT_EQ(rows.size(), 6u);
    EXPECT_EQ(rows[0].rfind("0.2,0,", 0), 0u);
    EXPECT_EQ(rows[1].rfind("0.2,1,", 0), 0u);
    EXPECT_EQ(rows[5].rfind("0.8,1,", 0), 0u);
}

TEST(Cli, DensityNormPrintsVerdict) {
    const CliRun r = run({"density-norm", "--state", "density-bell", "--restarts", "2"});
    EXPECT_EQ(r.code, 0);
    EXPECT_NE(r.out.find("verdict=entangled"), std::string::npos) << r.out;
}

TEST(Cli, ExportRoundTripsThroughFile) {
    const auto dir = temp_dir("export");
    EXPECT_EQ(run({"export-state", "--state", "w", "--field", "real", "--out", dir.string()}).code, 0);
    const CliRun r = run({"norm", "--file", (dir / "tensor.json").string(), "--field", "real", "--restarts", "2"});
    EXPECT_EQ(r.code, 0);
    EXPECT_EQ(r.out.rfind("norm=1.73", 0), 0u) << r.out;
    std::filesystem::remove_all(dir);
}

TEST(Cli, OracleOnMatrixPrintsSvdNorm) {
    const CliRun r = run({"oracle", "--state", "bell", "--starts", "2", "--epochs", "3000"});
    EXPECT_EQ(r.code, 0);
    EXPECT_EQ(r.out.rfind("svd_nuclear_norm=1.41421356", 0), 0u) << r.out;
    EXPECT_NE(r.out.find("\"n_starts\":2"), std::string::npos);
}

TEST(Cli, VerifyGradientSuite) {
    const CliRun r = run({"verify", "--suite", "gradients", "--seeds", "1"});
    EXPECT_EQ(r.code, 0);
    EXPECT_NE(r.out.find("all checks passed"), std::string::npos);
    EXPECT_EQ(run({"verify", "--suite", "nope"}).code, 2);
}
