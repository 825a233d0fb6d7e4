#pragma once

// Achievability schemes with bit-exact transcripts, centralized baselines and
// the Monte Carlo risk driver.

#include <Eigen/Dense>

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dmest/codec.hpp"
#include "dmest/families.hpp"

namespace dmest {

struct ProtocolOutput {
  Eigen::VectorXd theta_hat;
  Transcript transcript;
  // Number of machines whose local solver hit the separation guard.
  int flagged = 0;
  // Accounting side notes, e.g. the nominal bit count quoted in the literature.
  std::map<std::string, double> metadata;
};

/// Sample mean of X in [0, 1], sent with `budget_bits` bits (midpoint decoding).
ProtocolOutput single_machine_quantized_mean(std::span<const double> x, int budget_bits);

/// Bits each machine sends in gaussian_quantized_average.
int gaussian_bits_per_machine(int d, int m, int n, double sigma);

/// Local mean, truncation to [-1 - sigma/sqrt(n), 1 + sigma/sqrt(n)], per-coordinate
/// quantization to width <= sigma^2/(mn), fusion average.
ProtocolOutput gaussian_quantized_average(const SampleSet& samples, double sigma);

/// Each machine sends d stochastic bits Z_ij ~ Bernoulli((1 + X_ij)/2); fusion
/// returns mean(2Z - 1). Machine i's coins come from derive_seed(seed, {i}).
ProtocolOutput onebit_bounded_mean(const SampleSet& samples, std::uint64_t seed);

struct UniformMinOptions {
  // Test hook: with quantization off values are carried exactly and the
  // transcript charges no bits for them.
  bool quantize = true;
};

struct UniformMinRun {
  ProtocolOutput output;
  Eigen::VectorXd fusion_state;        // s at termination
  std::vector<std::vector<int>> improvements;  // J_i per machine (J_1 empty)
  int value_bits = 0;
};

/// Interactive running-minimum protocol for the uniform location family.
UniformMinRun run_uniform_min(const SampleSet& samples, const UniformMinOptions& options = {});
ProtocolOutput uniform_interactive_min(const SampleSet& samples);

/// ceil(log2(2mn)) bits per coordinate.
int regression_bits_per_coordinate(int m, int n);

/// Local least squares, truncation to [-1, 1]^d, quantization to width <= 1/(mn),
/// fusion average.
ProtocolOutput regression_local_average(const RegressionSpec& spec, const SampleSet& responses);

struct ProbitFit {
  Eigen::VectorXd theta;
  int iterations = 0;
  bool converged = false;
  bool separated = false;  // iterate norm exceeded the divergence guard
};

struct ProbitSolverOptions {
  int max_iterations = 100;
  double gradient_tolerance = 1e-9;
  double divergence_norm = 1e3;
};

double probit_log_likelihood(const Eigen::MatrixXd& a, const Eigen::VectorXd& z,
                             const Eigen::VectorXd& theta);

/// Damped Newton ascent on the probit log-likelihood, starting at zero.
ProbitFit probit_mle(const Eigen::MatrixXd& a, const Eigen::VectorXd& z,
                     const ProbitSolverOptions& options = {});

/// Local probit MLE per machine, then as regression_local_average.
ProtocolOutput probit_local_average(const ProbitSpec& spec, const SampleSet& responses);

/// Pooled estimator with full data access: sample mean, min + 1, least squares
/// or probit MLE depending on the family.
Eigen::VectorXd centralized_baseline(const ProblemSpec& problem, const SampleSet& pooled);

enum class ProtocolId { single_mean, gauss_qavg, onebit, uniform_min, regress_avg, probit_avg, centralized };

/// Stable identifiers: "single_mean", "gauss_qavg", "onebit", "uniform_min",
/// "regress_avg", "probit_avg", "centralized".
const char* to_string(ProtocolId id);
std::optional<ProtocolId> parse_protocol_id(const std::string& s);

struct ProtocolConfig {
  ProtocolId id = ProtocolId::centralized;
  int budget_bits = 0;  // single_mean only; 0 means ceil(log2 n)
};

/// Runs one protocol on one data draw.
ProtocolOutput run_protocol(const ProtocolConfig& config, const ProblemSpec& problem,
                            const SampleSet& samples, std::uint64_t protocol_seed);

struct RiskReport {
  double mse_mean = 0.0;
  double mse_stderr = 0.0;
  int trials = 0;
  double bits_mean = 0.0;
  std::uint64_t bits_max = 0;
  ProtocolKind kind = ProtocolKind::independent;
  int flagged_trials = 0;
  Eigen::VectorXd theta_hat_mean;
  Eigen::VectorXd theta_hat_stderr;

  static std::string csv_header();
  // Columns: mse_mean,mse_stderr,trials,bits_mean,bits_max,protocol_kind,flagged_trials
  std::string csv_row() const;
};

/// Trial t draws data with derive_seed(seed, {t, 0}) and protocol coins with
/// derive_seed(seed, {t, 1}). `threads` <= 0 reads DMEST_THREADS (default 1).
/// The report does not depend on the thread count.
RiskReport estimate_risk(const ProtocolConfig& config, const ProblemSpec& problem, int m, int n,
                         int trials, std::uint64_t seed, int threads = 0);

}  // namespace dmest
