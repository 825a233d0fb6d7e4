#pragma once

// Config parsing and the CSV producers behind the command-line tool.

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "dmest/bounds.hpp"
#include "dmest/families.hpp"
#include "dmest/protocols.hpp"

namespace dmest {

/// Malformed configuration; `line` is 1-based, 0 when not tied to a line.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(int line, const std::string& message);
  int line() const { return line_; }

 private:
  int line_;
};

/// Flat "key = value" config. Lines starting with '#' are comments. The grid
/// keys d, m, n and sigma may repeat (or take comma lists); every other key
/// appears at most once.
///
///   protocol     single_mean | gauss_qavg | onebit | uniform_min | regress_avg | probit_avg | centralized
///   family       bernoulli | gaussian | bounded | uniform | regression | probit
///   law          two_point | uniform_interval (bounded family)
///   theta        one value for every coordinate, or a comma list of length d
///   trials       >= 2
///   seed         master seed; every grid point uses it
///   budget_bits  single_mean budget; 0 means ceil(log2 n)
///   design       orthogonal | gaussian (regression/probit designs)
///   design_seed  seed of the design draw
///   c, c1, c2, c_upper   constants of the reported lower bound
struct ExperimentConfig {
  ProtocolId protocol = ProtocolId::centralized;
  std::string family;
  BoundedLaw law = BoundedLaw::two_point;
  std::vector<int> d;
  std::vector<int> m;
  std::vector<int> n;
  std::vector<double> sigma;
  std::vector<double> theta;
  int trials = 0;
  std::uint64_t seed = 1;
  int budget_bits = 0;
  std::string design = "orthogonal";
  std::uint64_t design_seed = 1;
  RateConstants constants;
};

ExperimentConfig parse_config(std::istream& in);
ExperimentConfig parse_config_file(const std::string& path);

/// n x d designs for m machines. "orthogonal": sqrt(n) times the Q factor of a
/// Gaussian matrix, so A^T A = n I. "gaussian": i.i.d. N(0, 1) entries.
std::vector<Eigen::MatrixXd> make_designs(const std::string& kind, int m, int n, int d, std::uint64_t seed);

/// The problem of one grid point.
ProblemSpec make_problem(const ExperimentConfig& config, int d, int m, int n, double sigma);

/// protocol,family,d,m,n,sigma,seed,mse_mean,mse_stderr,trials,bits_mean,bits_max,
/// protocol_kind,flagged_trials,centralized_rate,lower_bound,lower_bound_id,error
std::string sweep_csv_header();

/// One row per grid point in (d, m, n, sigma) nested order. Errors are recorded
/// in the row's error column and the sweep continues.
void run_simulate(const ExperimentConfig& config, std::ostream& out, int threads = 0);

/// Query CSV with a header naming its columns: formula (an id or "all"), d, m,
/// n, sigma2, budget_total, budget_per_machine (';'-separated for per-machine
/// values), lambda_max2, lambda_min2, a, delta, family, c, c1, c2, c_upper.
/// Output: formula_id,inputs,terms,value,error.
void run_bounds(std::istream& queries, std::ostream& out);
std::string bounds_csv_header();

/// Writes suite,seed,lhs,rhs,slack,holds rows; returns the number of violations.
/// Throws std::invalid_argument for an unknown suite before writing anything.
int run_verify(const std::vector<std::string>& suites, int count, std::uint64_t seed, std::ostream& out,
               int threads = 0);

/// Suggested gnuplot commands as '#' comment lines.
std::string gnuplot_hints(const std::string& subcommand);

}  // namespace dmest
