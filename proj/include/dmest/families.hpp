#pragma once

// Distribution families, seeded samplers and the two problem reductions
// (Gaussian mean -> linear regression, linear regression -> probit).

#include <Eigen/Dense>

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "dmest/rng.hpp"

namespace dmest {

struct DegenerateDesignError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ReductionInfeasibleError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// N(theta, sigma^2 I_d) with theta in [-1, 1]^d.
struct GaussianLocationSpec {
  Eigen::VectorXd theta;
  double sigma = 1.0;
};

enum class BoundedLaw { two_point, uniform_interval };

/// Product law on [-1, 1]^d with coordinate means theta.
///   two_point:        mass (1 +- theta_j)/2 on +-1.
///   uniform_interval: uniform on [theta_j - w, theta_j + w], w = 1 - |theta_j|.
struct BoundedProductSpec {
  Eigen::VectorXd theta;
  BoundedLaw law = BoundedLaw::two_point;
};

/// Coordinate j uniform on [theta_j - 1, theta_j + 1].
struct UniformLocationSpec {
  Eigen::VectorXd theta;
};

/// Bernoulli(p) observations on {0, 1}; the single-machine bounded-mean example.
struct BernoulliSpec {
  double p = 0.5;
};

/// y^(i) = A^(i) theta + N(0, sigma^2 I_n). sigma == 0 gives noiseless responses.
struct RegressionSpec {
  std::vector<Eigen::MatrixXd> designs;  // m matrices, n x d
  Eigen::VectorXd theta;
  double sigma = 1.0;
};

/// P(Z_k = 1) = Phi(<a_k, theta>).
struct ProbitSpec {
  std::vector<Eigen::MatrixXd> designs;
  Eigen::VectorXd theta;
};

using ProblemSpec = std::variant<GaussianLocationSpec, BoundedProductSpec, UniformLocationSpec,
                                 BernoulliSpec, RegressionSpec, ProbitSpec>;

/// Stable family identifier: "gaussian", "bounded", "uniform", "bernoulli",
/// "regression" or "probit".
std::string family_id(const ProblemSpec& spec);

/// Parameter being estimated (for BernoulliSpec, the 1-vector (p)).
Eigen::VectorXd true_parameter(const ProblemSpec& spec);

int dimension(const ProblemSpec& spec);

/// Per-machine data. Location families and Bernoulli fill `blocks` (d x n per
/// machine); regression/probit fill `responses` (length n per machine, probit
/// entries are 0/1).
struct SampleSet {
  int m = 0;
  int n = 0;
  int d = 0;
  std::vector<Eigen::MatrixXd> blocks;
  std::vector<Eigen::VectorXd> responses;

  // Audit dump: header "machine,obs_index,coordinate,value", 1-based machine.
  void write_csv(std::ostream& os) const;
};

/// Draws the data of `m` machines with `n` observations each. For
/// regression/probit, m and n come from the designs and the arguments must be
/// either 0 or consistent. Machine i uses the stream derive_seed(seed, {i}).
SampleSet sample(const ProblemSpec& spec, int m, int n, std::uint64_t seed);

/// Throws std::invalid_argument on malformed specs.
void validate(const ProblemSpec& spec);

struct EigenBounds {
  double lambda_max2 = 0.0;
  double lambda_min2 = 0.0;
};

/// max_i eig_max(A^T A)/n and min_i eig_min(A^T A)/n over the designs.
EigenBounds design_eigenbounds(const std::vector<Eigen::MatrixXd>& designs);

/// Builds y = A x + z, z ~ N(0, sigma^2 I - sigma^2/(lambda_max2 n) A A^T).
/// The covariance factor is computed once per (design, sigma, lambda_max2).
class MeanToRegressionReduction {
 public:
  MeanToRegressionReduction(Eigen::MatrixXd design, double sigma, double lambda_max2);

  Eigen::VectorXd apply(const Eigen::VectorXd& x_mean, Rng& rng) const;

  const Eigen::MatrixXd& noise_covariance() const { return covariance_; }
  const Eigen::MatrixXd& noise_factor() const { return factor_; }

 private:
  Eigen::MatrixXd design_;
  Eigen::MatrixXd covariance_;
  Eigen::MatrixXd factor_;  // symmetric square root of covariance_
};

Eigen::VectorXd reduce_mean_to_regression(const Eigen::VectorXd& x_mean,
                                          const Eigen::MatrixXd& design, double sigma,
                                          double lambda_max2, std::uint64_t seed);

/// Z_k = 1 iff y_k >= 0.
Eigen::VectorXi reduce_regression_to_probit(const Eigen::VectorXd& y);

/// Standard normal CDF.
double normal_cdf(double x);

}  // namespace dmest
