#include <gtest/gtest.h>

#include <cmath>

#include "dmest/verify.hpp"

using namespace dmest;

namespace {

void expect_all_hold(const std::string& suite, int count, std::uint64_t seed) {
  const auto rows = run_suite(suite, count, seed);
  ASSERT_EQ(rows.size(), static_cast<std::size_t>(count));
  int violations = 0;
  for (const auto& r : rows) {
    if (!r.holds) {
      ++violations;
      ADD_FAILURE() << "replay with run_instance(\"" << suite << "\", " << r.seed << "): lhs " << r.lhs << " rhs " << r.rhs;
    }
    EXPECT_EQ(r.slack, r.rhs - r.lhs) << suite;
  }
  EXPECT_EQ(violations, 0) << suite;
}

}  // namespace

TEST(Suites, Names) {
  for (const char* s : {"dpi3", "dpi5", "dpi7", "chain", "tensor", "pinsker", "fano", "dpi"}) EXPECT_TRUE(is_suite(s));
  EXPECT_FALSE(is_suite("foo"));
  EXPECT_THROW(run_instance("foo", 1), std::invalid_argument);
}

TEST(Suites, PinskerTenThousand) { expect_all_hold("pinsker", 10000, 1); }
TEST(Suites, Dpi3Thousand) { expect_all_hold("dpi3", 1000, 2); }
TEST(Suites, Dpi5FiveHundred) { expect_all_hold("dpi5", 500, 3); }
TEST(Suites, Dpi7FiveHundred) { expect_all_hold("dpi7", 500, 4); }
TEST(Suites, TensorFiveHundred) { expect_all_hold("tensor", 500, 5); }
TEST(Suites, ChainThousand) { expect_all_hold("chain", 1000, 6); }
TEST(Suites, FanoThousand) { expect_all_hold("fano", 1000, 7); }
TEST(Suites, ClassicalDpiThousand) { expect_all_hold("dpi", 1000, 8); }

TEST(Suites, ReplayAndThreadInvariance) {
  for (const auto& suite : suite_names()) {
    const auto one = run_suite(suite, 40, 77, 1);
    const auto many = run_suite(suite, 40, 77, 3);
    for (int i = 0; i < 40; ++i) {
      EXPECT_EQ(to_csv(one[i]), to_csv(many[i]));
      EXPECT_EQ(one[i].seed, instance_seed(suite, 77, i));
      EXPECT_EQ(to_csv(run_instance(suite, one[i].seed)), to_csv(one[i]));
    }
  }
  EXPECT_NE(instance_seed("dpi3", 1, 0), instance_seed("dpi5", 1, 0));
  EXPECT_NE(instance_seed("dpi3", 1, 0), instance_seed("dpi3", 1, 1));
}

TEST(Generators, TiltedChannelRespectsRatioBound) {
  Rng rng(3);
  for (int i = 0; i < 500; ++i) {
    const double alpha = 0.05 + 2.0 * (i % 10) / 10;
    const auto c = random_tilted_channel(rng, 2 + i % 3, 1 + i % 5, alpha);
    EXPECT_LE(check_likelihood_ratio(c), alpha + 1e-12);
    EXPECT_TRUE(c.rows.rowwise().sum().isApproxToConstant(1.0, 1e-12));
  }
}

TEST(Generators, QuantizersAreStochastic) {
  Rng rng(4);
  for (bool det : {true, false}) {
    const Eigen::MatrixXd q = random_quantizer(rng, 9, 4, det);
    EXPECT_TRUE(q.rowwise().sum().isApproxToConstant(1.0, 1e-12));
    EXPECT_GE(q.minCoeff(), 0.0);
    if (det)
      for (int r = 0; r < 9; ++r) EXPECT_EQ(q.row(r).maxCoeff(), 1.0);
  }
}

TEST(Generators, ChainModelsSatisfyStructure) {
  Rng rng(5);
  for (int i = 0; i < 200; ++i) {
    const JointPMF j = random_chain_model(rng, 1 + i % 2);
    ASSERT_EQ(j.rank(), 4);
    EXPECT_NO_THROW(check_information_chaining(j));
  }
}

TEST(Csv, RowShape) {
  EXPECT_EQ(verify_csv_header(), "suite,seed,lhs,rhs,slack,holds");
  const auto row = run_instance("pinsker", 12);
  const std::string line = to_csv(row);
  EXPECT_EQ(std::count(line.begin(), line.end(), ','), 5);
  EXPECT_EQ(line.rfind("pinsker,12,", 0), 0u);
}
