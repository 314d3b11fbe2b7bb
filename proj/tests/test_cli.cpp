#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "cli.hpp"
#include "json.hpp"

namespace mpcjoin {
namespace {

struct Result {
  int code = 0;
  std::string out;
  std::string err;
};

Result run_cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  Result r;
  r.code = cli::run(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

nlohmann::json json_of(const Result& r) { return nlohmann::json::parse(r.out); }

TEST(Cli, AnalyzeTriangle) {
  auto r = run_cli({"analyze", "-q", "C3", "-p", "64", "-m", "100000", "-n", "100000"});
  ASSERT_EQ(r.code, cli::kExitOk) << r.err;
  auto j = json_of(r);
  EXPECT_EQ(j["characteristic"], 1);
  EXPECT_EQ(j["tau_star"], "3/2");
  EXPECT_EQ(j["shares_skew_free"]["exponents"], (std::vector<std::string>{"1/3", "1/3", "1/3"}));
  EXPECT_EQ(j["shares_skew_free"]["shares"], (std::vector<int>{4, 4, 4}));
}

TEST(Cli, AnalyzeWithoutSizesOmitsShares) {
  auto r = run_cli({"analyze", "-q", "L3"});
  ASSERT_EQ(r.code, cli::kExitOk) << r.err;
  auto j = json_of(r);
  EXPECT_EQ(j["tau_star"], "2");
  EXPECT_FALSE(j.contains("shares_skew_free"));
}

TEST(Cli, UsageAndParseErrorsExitTwo) {
  EXPECT_EQ(run_cli({"analyze", "-q", "R(x,"}).code, cli::kExitUsage);
  EXPECT_EQ(run_cli({"analyze", "-q", "R(x),R(y)"}).code, cli::kExitUsage);
  EXPECT_EQ(run_cli({"simulate", "-q", "C3", "-p", "8", "-m", "100"}).code, cli::kExitUsage);  // no seed
  EXPECT_EQ(run_cli({"frobnicate"}).code, cli::kExitUsage);
  EXPECT_EQ(run_cli({}).code, cli::kExitUsage);
  EXPECT_EQ(run_cli({"analyze", "--format", "xml", "-q", "C3"}).code, cli::kExitUsage);
}

TEST(Cli, SimulateIsByteIdenticalForAFixedSeed) {
  const std::vector<std::string> args = {"simulate", "-q", "C3", "-p", "27", "-m", "3000", "-n", "3000",
                                         "--trials", "3", "--seed", "11", "--verify"};
  auto a = run_cli(args), b = run_cli(args);
  ASSERT_EQ(a.code, cli::kExitOk) << a.err;
  EXPECT_EQ(a.out, b.out);
  EXPECT_NE(a.out.find("# trial 2 -> seed "), std::string::npos);
  auto c = run_cli({"simulate", "-q", "C3", "-p", "27", "-m", "3000", "-n", "3000", "--trials", "3", "--seed", "12"});
  EXPECT_NE(a.out, c.out);
}

TEST(Cli, ThreadCountDoesNotChangeOutput) {
  const std::vector<std::string> base = {"simulate", "-q", "L3", "-p", "16", "-m", "2000", "-n", "2000",
                                         "--trials", "4", "--seed", "5"};
  auto one = base, three = base;
  one.insert(one.end(), {"--threads", "1"});
  three.insert(three.end(), {"--threads", "3"});
  EXPECT_EQ(run_cli(one).out, run_cli(three).out);
}

TEST(Cli, ConfigFileWithFlagOverride) {
  const auto path = std::filesystem::temp_directory_path() / "mpcjoin_cli_test.conf";
  {
    std::ofstream f(path);
    f << "mode=analyze\nquery=C3\np=27\nm=1000\nn=1000\n";
  }
  auto from_file = run_cli({"--config", path.string()});
  ASSERT_EQ(from_file.code, cli::kExitOk) << from_file.err;
  EXPECT_EQ(json_of(from_file)["shares_skew_free"]["shares"], (std::vector<int>{3, 3, 3}));
  auto overridden = run_cli({"--config", path.string(), "-p", "8"});
  ASSERT_EQ(overridden.code, cli::kExitOk) << overridden.err;
  EXPECT_EQ(json_of(overridden)["shares_skew_free"]["shares"], (std::vector<int>{2, 2, 2}));
  std::filesystem::remove(path);
}

TEST(Cli, FailedAssertionExitsOne) {
  auto r = run_cli({"simulate", "-q", "C3", "-p", "27", "-m", "3000", "-n", "3000", "--trials", "2", "--seed", "1",
                    "--assert-ratio", "0.01"});
  EXPECT_EQ(r.code, cli::kExitAssertion);
  EXPECT_NE(r.err.find("assertion failed"), std::string::npos);
  auto ok = run_cli({"simulate", "-q", "C3", "-p", "27", "-m", "3000", "-n", "3000", "--trials", "2", "--seed", "1",
                     "--assert-ratio", "3"});
  EXPECT_EQ(ok.code, cli::kExitOk) << ok.err;
}

TEST(Cli, BinsCsv) {
  auto r = run_cli({"bins", "--K", "16", "--beta", "0.25", "--delta-grid", "0.5:1.5:0.5", "--trials", "50", "--seed",
                    "3", "--assert-bound"});
  ASSERT_EQ(r.code, cli::kExitOk) << r.err;
  std::istringstream in(r.out);
  std::vector<std::string> data;
  bool header = false;
  for (std::string line; std::getline(in, line);) {
    if (line.rfind('#', 0) == 0) continue;
    if (line == "delta,threshold,empirical,bound") {
      header = true;
      continue;
    }
    data.push_back(line);
  }
  EXPECT_TRUE(header);
  EXPECT_EQ(data.size(), 3u);
}

TEST(Cli, PlanAndCertify) {
  auto plan = run_cli({"plan", "-q", "L16", "--eps", "1/2"});
  ASSERT_EQ(plan.code, cli::kExitOk) << plan.err;
  auto j = json_of(plan);
  EXPECT_EQ(j["plan"]["depth"], 2);
  EXPECT_EQ(j["rounds_upper"], 2);

  auto cert = run_cli({"certify", "-q", "L5", "--eps", "0", "-L", "156.25", "-M", "1000000", "-p", "64"});
  ASSERT_EQ(cert.code, cli::kExitOk) << cert.err;
  auto c = json_of(cert);
  EXPECT_TRUE(c["valid"].get<bool>());
  EXPECT_LT(c["certificate"]["fraction"].get<double>(), 1.0 / 9);
}

TEST(Cli, OutputFile) {
  const auto path = std::filesystem::temp_directory_path() / "mpcjoin_cli_out.json";
  auto r = run_cli({"analyze", "-q", "T3", "-o", path.string()});
  ASSERT_EQ(r.code, cli::kExitOk) << r.err;
  EXPECT_TRUE(r.out.empty());
  std::ifstream f(path);
  std::stringstream ss;
  ss << f.rdbuf();
  EXPECT_EQ(nlohmann::json::parse(ss.str())["tau_star"], "1");
  std::filesystem::remove(path);
}

}  // namespace
}  // namespace mpcjoin
