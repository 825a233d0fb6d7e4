#pragma once

// Randomized enumeration suites over the information inequalities. Each
// instance is generated from its own seed, which is reported so a failing
// instance can be replayed with run_instance.

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

#include "dmest/infotheory.hpp"
#include "dmest/rng.hpp"

namespace dmest {

/// Rows are base * exp(tilt_v) renormalized, tilts uniform in [-alpha/4, alpha/4],
/// so the realized log likelihood ratio is at most alpha.
ChannelSpec random_tilted_channel(Rng& rng, int inputs, int outputs, double alpha);

/// Row-stochastic map with random rows (deterministic = one-hot rows).
Eigen::MatrixXd random_quantizer(Rng& rng, int inputs, int outputs, bool deterministic);

/// Random probability vector with strictly positive entries.
Eigen::VectorXd random_simplex(Rng& rng, int k);

/// Random (A, B, C, D) model of the chaining form: binary A, B, D; C is the
/// transcript of a one- or two-round binary protocol between holders of A and B
/// (|C| = 2 or 4); D depends on (B, C) only.
JointPMF random_chain_model(Rng& rng, int rounds);

struct VerifyRow {
  std::string suite;
  std::uint64_t seed = 0;
  double lhs = 0.0;
  double rhs = 0.0;
  double slack = 0.0;
  bool holds = false;
};

/// "dpi3", "dpi5", "dpi7", "chain", "tensor", "pinsker", "fano", "dpi".
const std::vector<std::string>& suite_names();
bool is_suite(const std::string& name);

/// Seed of instance i of a suite run with master seed `seed`.
std::uint64_t instance_seed(const std::string& suite, std::uint64_t seed, int i);

VerifyRow run_instance(const std::string& suite, std::uint64_t instance_seed);

/// `count` instances in index order; parallel over instances.
std::vector<VerifyRow> run_suite(const std::string& suite, int count, std::uint64_t seed, int threads = 0);

std::string verify_csv_header();  // suite,seed,lhs,rhs,slack,holds
std::string to_csv(const VerifyRow& row);

}  // namespace dmest
