#pragma once

// Exact finite-alphabet information quantities (all in nats) and
// enumeration-based checks of quantitative data-processing inequalities.

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace dmest {

/// Thrown when an enumeration would exceed kMaxJointStates.
class EnumerationTooLargeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::int64_t kMaxJointStates = std::int64_t{1} << 20;
inline constexpr double kNormTol = 1e-12;
inline constexpr double kCheckSlack = 1e-10;

struct FinitePMF {
  Eigen::VectorXd p;

  FinitePMF() = default;
  /// Validates nonnegativity and normalization within kNormTol.
  explicit FinitePMF(Eigen::VectorXd probs);
  static FinitePMF uniform(Eigen::Index k);
  Eigen::Index size() const { return p.size(); }
};

/// Probability table over a product alphabet. Row-major: the last axis varies fastest.
struct JointPMF {
  std::vector<std::string> labels;
  std::vector<int> sizes;
  Eigen::VectorXd table;

  JointPMF() = default;
  JointPMF(std::vector<std::string> labels, std::vector<int> sizes, Eigen::VectorXd table);

  int axis(const std::string& label) const;
  int rank() const { return static_cast<int>(sizes.size()); }
  /// Joint law of the listed axes (in that order), summing out the rest.
  JointPMF marginal(const std::vector<int>& keep) const;
  FinitePMF marginal(int axis) const;
};

/// Row-stochastic conditional table: rows index the input, columns the output.
struct ChannelSpec {
  Eigen::MatrixXd rows;

  ChannelSpec() = default;
  explicit ChannelSpec(Eigen::MatrixXd table);
  int inputs() const { return static_cast<int>(rows.rows()); }
  int outputs() const { return static_cast<int>(rows.cols()); }
  /// Two-point channel on {-1, +1}: P(x = v | v) = (1 + delta)/2.
  static ChannelSpec two_point(double delta);
};

double entropy(const FinitePMF& p);
double entropy(const Eigen::VectorXd& p);
/// +infinity when p is not absolutely continuous with respect to q.
double kl(const FinitePMF& p, const FinitePMF& q);
/// Half the L1 distance.
double tv(const FinitePMF& p, const FinitePMF& q);
double tv(const Eigen::VectorXd& p, const Eigen::VectorXd& q);
/// I(A; B) between two groups of axes; the other axes are summed out.
double mutual_information(const JointPMF& j, const std::vector<int>& a, const std::vector<int>& b);
double mutual_information(const JointPMF& j, int a, int b);

/// Number of points of {-1,1}^d within Hamming distance t of a fixed point.
std::uint64_t hamming_neighborhood_size(int d, double t);
/// max{0, 1 - (I + ln 2)/ln(2^d / N_t)}.
double fano_variant_lower(int d, double t, double info_nats);
/// delta^2 (floor(t) + 1) prob.
double estimation_to_testing_lower(double delta, double t, double test_error_prob);
/// Bayes error of a uniform-prior binary test: 1/2 - tv/2.
double lecam_testing_error(const FinitePMF& p1, const FinitePMF& p2);

/// ln max_x max_{v,v'} P(x|v)/P(x|v'), restricted to outputs with mask[x] when given.
/// +infinity if a considered entry is zero.
double check_likelihood_ratio(const ChannelSpec& channel, const std::vector<bool>* mask = nullptr);

struct PinskerReport {
  double lhs = 0.0;
  double rhs = 0.0;
  bool holds = false;
};
/// lhs = tv(P_{Y|V=0}, P_{Y|V=1})^2, rhs = 2 I(V; Y). V must be binary; the
/// inequality presumes a uniform prior on V.
PinskerReport check_pinsker_consequence(const JointPMF& j, int v_axis = 0, int y_axis = 1);

/// The per-coordinate channels of a V -> X model: V uniform on {-1,1}^k, X_j
/// depends on V_j only through channels[j] (row 0 is V_j = -1). A single
/// channel is shared by every coordinate.
struct CoordinateModel {
  int v_dim = 1;
  std::vector<ChannelSpec> channels;

  const ChannelSpec& channel(int j) const;
  /// Size of the flattened X alphabet of one sample (coordinate 0 slowest).
  std::int64_t x_states() const;
  /// P(x | v) for flattened indices; bit j of v set means V_j = +1.
  Eigen::MatrixXd likelihood() const;
};

struct DpiReport {
  double i_vy = 0.0;
  double i_xy = 0.0;
  double i_vx = 0.0;
  double alpha = 0.0;
  double bound = 0.0;
  bool holds = false;
  bool classical_holds = false;
};

/// Exact check of I(V;Y) <= 2 (e^{2 alpha} - 1)^2 I(X;Y) for a quantizer mapping
/// the flattened X alphabet to Y (rows of `quantizer` are row-stochastic).
DpiReport check_dpi_independent(const CoordinateModel& model, const Eigen::MatrixXd& quantizer);

struct MarkovDpiReport {
  double i_vy = 0.0;
  double i_vx = 0.0;
  bool holds = false;
};

/// I(V;Y) <= I(V;X) for an arbitrary prior and two chained channels.
MarkovDpiReport check_markov_dpi(const FinitePMF& prior, const ChannelSpec& v_to_x, const ChannelSpec& x_to_y);

struct TruncatedDpiReport {
  double i_vy = 0.0;
  double i_xy = 0.0;
  double alpha = 0.0;
  double entropy_e = 0.0;     // sum_j H(E_j)
  double prob_e_zero = 0.0;   // sum_j P(E_j = 0)
  double bound = 0.0;
  bool holds = false;
  // Whether 2 (e^{2 alpha} - 1)^2 I(X;Y) + H + P would also have sufficed.
  bool tighter_constant_holds = false;
};

/// `copies` i.i.d. samples of X given V (coordinate-major flattening: coordinate
/// j's copies are adjacent). E_j indicates that every copy of coordinate j
/// lies in subsets[j]; alpha is the likelihood ratio restricted to those sets.
/// Checks I(V;Y) <= 2 (e^{4 alpha} - 1)^2 I(X;Y) + sum_j [H(E_j) + P(E_j = 0)].
TruncatedDpiReport check_dpi_truncated(const CoordinateModel& model, int copies,
                                       const std::vector<std::vector<bool>>& subsets,
                                       const Eigen::MatrixXd& quantizer);

struct TensorReport {
  double i_joint = 0.0;
  double sum_i = 0.0;
  bool holds = false;
};

/// One sample per machine from `model`; machine i's message uses quantizers[i].
TensorReport check_tensorization(const CoordinateModel& model, const std::vector<Eigen::MatrixXd>& quantizers);

struct ChainReport {
  double max_violation = 0.0;  // max of lhs - rhs over checked triples
  double worst_lhs = 0.0;
  double worst_rhs = 0.0;
  double alpha = 0.0;
  int checked = 0;
  int skipped = 0;  // (a, c, d) with P(c, d) = 0
  bool holds = false;
};

/// Axes must be (A, B, C, D). Verifies that D is conditionally independent of A
/// given (B, C) and that every C-slice of P(c|a,b) has rank one, then checks
/// |P(a|c,d) - P(a|c)| <= 2 (e^{2 alpha} - 1) min{P(a|c), P(a|c,d)} tv(P_B(.|c,d), P_B(.|c)).
/// Throws std::invalid_argument if the structural conditions fail.
ChainReport check_information_chaining(const JointPMF& model);

struct FanoReport {
  double info = 0.0;            // I(V; X)
  double fano_bound = 0.0;
  double min_error = 0.0;       // min over tests of P(d_ham(V_hat, V) > t)
  double bayes_risk = 0.0;      // risk of delta E[V|X] under uniform V
  double risk_bound = 0.0;      // delta^2 (floor(t) + 1) min_error
  bool holds = false;
};

/// Exact Bayes-optimal neighborhood test and posterior-mean risk for
/// theta_v = delta v, compared against the Fano variant and the reduction bound.
FanoReport check_fano_reduction(const CoordinateModel& model, double t, double delta);

/// I(V; X) for V uniform on {-1, 1}, X | V ~ N(delta V, sigma^2), via
/// Gauss-Hermite quadrature with order doubling to 1e-9.
double binary_gaussian_mi(double delta, double sigma);

}  // namespace dmest
