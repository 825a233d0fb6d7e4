#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "dmest/csv.hpp"
#include "dmest/experiment.hpp"

using namespace dmest;

namespace {

namespace fs = std::filesystem;

ExperimentConfig parse(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in);
}

int config_error_line(const std::string& text) {
  try {
    parse(text);
  } catch (const ConfigError& e) {
    return e.line();
  }
  return -1;
}

struct Run {
  int status;
  std::string out;
};

Run run_cli(const std::string& args) {
  const std::string cmd = std::string(DMEST_CLI) + " " + args + " 2>/dev/null";
  FILE* pipe = popen(cmd.c_str(), "r");
  std::string out;
  char buf[4096];
  std::size_t got;
  while ((got = fread(buf, 1, sizeof buf, pipe)) > 0) out.append(buf, got);
  const int raw = pclose(pipe);
  return {WIFEXITED(raw) ? WEXITSTATUS(raw) : -1, out};
}

fs::path scratch(const std::string& name, const std::string& content) {
  const fs::path p = fs::temp_directory_path() / ("dmest_test_" + std::to_string(::getpid()) + "_" + name);
  std::ofstream(p) << content;
  return p;
}

std::vector<std::vector<std::string>> rows_of(const std::string& csv_text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(csv_text);
  std::string line;
  while (std::getline(in, line)) rows.push_back(csv::split(line));
  return rows;
}

const char* kGauss =
    "protocol = gauss_qavg\n"
    "family = gaussian\n"
    "d = 4\n"
    "m = 16\n"
    "n = 64\n"
    "trials = 200\n"
    "seed = 5\n";

}  // namespace

TEST(Config, ParsesGridsAndDefaults) {
  const auto c = parse("# comment\nprotocol = onebit\nfamily = bounded\nd = 8\nm = 25, 100\nm = 400\nn = 1\ntrials = 10\n");
  EXPECT_EQ(c.protocol, ProtocolId::onebit);
  EXPECT_EQ(c.m, (std::vector<int>{25, 100, 400}));
  EXPECT_EQ(c.sigma, (std::vector<double>{1.0}));
  EXPECT_EQ(c.theta, (std::vector<double>{0.0}));
  const auto b = parse("protocol = single_mean\nfamily = bernoulli\nm = 1\nn = 1024\ntrials = 5\ntheta = 0.3\n");
  EXPECT_EQ(b.d, (std::vector<int>{1}));
}

TEST(Config, ErrorsCarryLineNumbers) {
  EXPECT_EQ(config_error_line("protocol = onebit\nfamily = bounded\nbogus = 3\n"), 3);
  EXPECT_EQ(config_error_line("protocol = warp\n"), 1);
  EXPECT_EQ(config_error_line("protocol = onebit\nfamily = bounded\nd = 2\nm = x\n"), 4);
  EXPECT_EQ(config_error_line("protocol = onebit\nprotocol = onebit\n"), 2);
  EXPECT_EQ(config_error_line("protocol = onebit\nno equals sign\n"), 2);
  EXPECT_GE(config_error_line("protocol = onebit\nfamily = gaussian\nd = 2\nm = 2\nn = 1\ntrials = 4\n"), 0);
  EXPECT_GE(config_error_line("protocol = onebit\nfamily = bounded\nd = 2\nm = 2\nn = 1\ntrials = 1\n"), 0);
  EXPECT_GE(config_error_line("protocol = onebit\nfamily = bounded\nd = 2\nn = 1\ntrials = 4\n"), 0);
  try {
    parse("protocol = onebit\nfamily = bounded\nbogus = 3\n");
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos);
  }
}

TEST(Designs, OrthogonalColumns) {
  const auto ds = make_designs("orthogonal", 3, 30, 3, 9);
  ASSERT_EQ(ds.size(), 3u);
  for (const auto& a : ds) EXPECT_TRUE((a.transpose() * a).isApprox(30 * Eigen::MatrixXd::Identity(3, 3), 1e-12));
  EXPECT_THROW(make_designs("orthogonal", 1, 2, 3, 1), DegenerateDesignError);
  EXPECT_THROW(make_designs("spiral", 1, 4, 3, 1), std::invalid_argument);
}

TEST(Simulate, OneBitSweepMatchesExactVariance) {
  const auto c = parse("protocol = onebit\nfamily = bounded\nd = 8\nm = 25, 100, 400\nn = 1\ntrials = 1500\nseed = 2\n");
  std::ostringstream out;
  run_simulate(c, out);
  const auto rows = rows_of(out.str());
  ASSERT_EQ(rows.size(), 4u);
  EXPECT_EQ(out.str().substr(0, out.str().find('\n')), sweep_csv_header());
  for (std::size_t i = 1; i < rows.size(); ++i) {
    ASSERT_EQ(rows[i].size(), rows[0].size());
    const double m = std::stod(rows[i][3]), mse = std::stod(rows[i][7]), se = std::stod(rows[i][8]);
    EXPECT_NEAR(mse, 8 / m, 3 * se) << "m = " << m;
    EXPECT_DOUBLE_EQ(std::stod(rows[i][14]), 8 / m);
    EXPECT_EQ(rows[i][16], "prop2");
  }
}

TEST(Simulate, RowErrorsDoNotStopTheSweep) {
  // n = 2 < d = 3 makes the first design degenerate; the second grid point runs.
  const auto c = parse("protocol = regress_avg\nfamily = regression\nd = 3\nm = 4\nn = 2, 30\ntrials = 20\n");
  std::ostringstream out;
  run_simulate(c, out);
  const auto rows = rows_of(out.str());
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[1][7], "nan");
  EXPECT_FALSE(rows[1].back().empty());
  EXPECT_NE(rows[2][7], "nan");
  EXPECT_EQ(rows[2].size(), rows[0].size());
}

TEST(Bounds, RowsAndErrors) {
  std::istringstream q(
      "formula,d,m,n,sigma2,budget_total,budget_per_machine\n"
      "thm2,4,16,64,1,16,\n"
      "prop3_budget,2,4,8,,,\n"
      "thm2,4,x,64,1,16,\n"
      "thm1,4,16,64,1,,4\n");
  std::ostringstream out;
  run_bounds(q, out);
  const auto rows = rows_of(out.str());
  ASSERT_EQ(rows.size(), 5u);
  EXPECT_EQ(rows[0], csv::split(bounds_csv_header()));
  EXPECT_NEAR(std::stod(rows[1][3]), 0.004508, 1e-6);
  EXPECT_NE(rows[2][2].find("all_log2_reading=76"), std::string::npos);
  EXPECT_NEAR(std::stod(rows[2][3]), 60.05, 0.01);
  EXPECT_EQ(rows[3][3], "nan");
  EXPECT_FALSE(rows[3][4].empty());
  EXPECT_EQ(std::stod(rows[4][3]), 0.00390625);
  for (const auto& r : rows) EXPECT_EQ(r.size(), 5u);
}

TEST(Bounds, AllExpandsEveryFormula) {
  std::istringstream q("formula,d,m,n,sigma2,budget_total,budget_per_machine,lambda_max2,lambda_min2,a,delta,family\n"
                       "all,2,8,16,1,4,1,1,1,3,0.1,gaussian\n");
  std::ostringstream out;
  run_bounds(q, out);
  const auto rows = rows_of(out.str());
  ASSERT_EQ(rows.size(), formula_ids().size() + 1);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    EXPECT_EQ(rows[i][0], formula_ids()[i - 1]);
    EXPECT_TRUE(rows[i][4].empty()) << rows[i][0] << ": " << rows[i][4];
  }
}

TEST(Verify, CountsViolationsAndRejectsUnknownSuites) {
  std::ostringstream out;
  EXPECT_EQ(run_verify({"pinsker", "chain"}, 50, 3, out), 0);
  EXPECT_EQ(rows_of(out.str()).size(), 101u);
  std::ostringstream none;
  EXPECT_THROW(run_verify({"pinsker", "foo"}, 5, 3, none), std::invalid_argument);
  EXPECT_TRUE(none.str().empty());
  EXPECT_THROW(run_verify({"pinsker"}, 0, 3, none), std::invalid_argument);
}

TEST(Hints, AreCommentLines) {
  for (const char* s : {"simulate", "bounds", "verify"}) {
    std::istringstream in(gnuplot_hints(s));
    std::string line;
    int lines = 0;
    while (std::getline(in, line)) {
      EXPECT_EQ(line.rfind("#", 0), 0u);
      ++lines;
    }
    EXPECT_GT(lines, 0);
  }
}

TEST(Binary, ExitCodes) {
  EXPECT_EQ(run_cli("verify pinsker --count 100 --seed 4").status, 0);
  EXPECT_EQ(run_cli("verify foo").status, 2);
  EXPECT_EQ(run_cli("").status, 2);
  EXPECT_EQ(run_cli("simulate /nonexistent/config.txt").status, 2);
  const auto bad = scratch("bad.cfg", "protocol = gauss_qavg\nfamily = gaussian\nd = 4\nm = 16\nn = 64\n");
  EXPECT_EQ(run_cli("simulate " + bad.string()).status, 2);
  fs::remove(bad);
}

TEST(Binary, EmptyGridWritesNoOutputFile) {
  const auto cfg = scratch("empty.cfg", "protocol = onebit\nfamily = bounded\nd = 8\nm =\nn = 1\ntrials = 10\n");
  const fs::path out = fs::temp_directory_path() / ("dmest_test_" + std::to_string(::getpid()) + "_empty.csv");
  fs::remove(out);
  EXPECT_EQ(run_cli("simulate " + cfg.string() + " --out " + out.string()).status, 2);
  EXPECT_FALSE(fs::exists(out));
  fs::remove(cfg);
}

TEST(Binary, SimulateIsByteDeterministic) {
  const auto cfg = scratch("gauss.cfg", kGauss);
  const auto a = run_cli("simulate " + cfg.string());
  const auto b = run_cli("simulate " + cfg.string());
  EXPECT_EQ(a.status, 0);
  EXPECT_EQ(a.out, b.out);
  const auto rows = rows_of(a.out);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[1][10], "768");
  fs::remove(cfg);
}

TEST(Binary, OutFileMatchesStdout) {
  const auto cfg = scratch("verify_out.cfg", "");
  const fs::path out = fs::temp_directory_path() / ("dmest_test_" + std::to_string(::getpid()) + "_verify.csv");
  const auto direct = run_cli("verify dpi3,fano --count 30 --seed 9");
  ASSERT_EQ(run_cli("verify dpi3,fano --count 30 --seed 9 --out " + out.string()).status, 0);
  std::ifstream in(out);
  std::stringstream file;
  file << in.rdbuf();
  EXPECT_EQ(file.str(), direct.out);
  fs::remove(out);
  fs::remove(cfg);
}
