#include "dmest/families.hpp"

#include <cmath>
#include <ostream>

namespace dmest {
namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void check_theta(const Eigen::VectorXd& theta) {
  if (theta.size() < 1) throw std::invalid_argument("theta must have dimension >= 1");
  if (!theta.allFinite() || theta.cwiseAbs().maxCoeff() > 1.0)
    throw std::invalid_argument("theta must lie in [-1, 1]^d");
}

void check_designs(const std::vector<Eigen::MatrixXd>& designs, Eigen::Index d) {
  if (designs.empty()) throw std::invalid_argument("at least one design matrix is required");
  const auto n = designs.front().rows();
  for (const auto& a : designs) {
    if (a.cols() != d) throw std::invalid_argument("design column count must equal dim(theta)");
    if (a.rows() != n) throw std::invalid_argument("all designs must have the same row count");
    if (a.rows() < d) throw std::invalid_argument("designs need n >= d");
    if (!a.allFinite()) throw std::invalid_argument("design has non-finite entries");
  }
}

void resolve_design_shape(const std::vector<Eigen::MatrixXd>& designs, int& m, int& n) {
  const int dm = static_cast<int>(designs.size());
  const int dn = static_cast<int>(designs.front().rows());
  if ((m != 0 && m != dm) || (n != 0 && n != dn))
    throw std::invalid_argument("m/n must match the design matrices");
  m = dm;
  n = dn;
}

}  // namespace

std::string family_id(const ProblemSpec& spec) {
  return std::visit(overloaded{[](const GaussianLocationSpec&) { return "gaussian"; },
                               [](const BoundedProductSpec&) { return "bounded"; },
                               [](const UniformLocationSpec&) { return "uniform"; },
                               [](const BernoulliSpec&) { return "bernoulli"; },
                               [](const RegressionSpec&) { return "regression"; },
                               [](const ProbitSpec&) { return "probit"; }},
                    spec);
}

Eigen::VectorXd true_parameter(const ProblemSpec& spec) {
  return std::visit(overloaded{[](const BernoulliSpec& s) {
                                 return Eigen::VectorXd::Constant(1, s.p).eval();
                               },
                               [](const auto& s) { return s.theta; }},
                    spec);
}

int dimension(const ProblemSpec& spec) { return static_cast<int>(true_parameter(spec).size()); }

void validate(const ProblemSpec& spec) {
  std::visit(overloaded{[](const GaussianLocationSpec& s) {
                          check_theta(s.theta);
                          if (!(s.sigma > 0) || !std::isfinite(s.sigma))
                            throw std::invalid_argument("gaussian sigma must be positive");
                        },
                        [](const BoundedProductSpec& s) { check_theta(s.theta); },
                        [](const UniformLocationSpec& s) { check_theta(s.theta); },
                        [](const BernoulliSpec& s) {
                          if (!(s.p >= 0.0 && s.p <= 1.0))
                            throw std::invalid_argument("bernoulli p must lie in [0, 1]");
                        },
                        [](const RegressionSpec& s) {
                          check_theta(s.theta);
                          check_designs(s.designs, s.theta.size());
                          if (!(s.sigma >= 0) || !std::isfinite(s.sigma))
                            throw std::invalid_argument("regression sigma must be nonnegative");
                        },
                        [](const ProbitSpec& s) {
                          check_theta(s.theta);
                          check_designs(s.designs, s.theta.size());
                        }},
             spec);
}

SampleSet sample(const ProblemSpec& spec, int m, int n, std::uint64_t seed) {
  validate(spec);
  if (const auto* r = std::get_if<RegressionSpec>(&spec)) resolve_design_shape(r->designs, m, n);
  if (const auto* p = std::get_if<ProbitSpec>(&spec)) resolve_design_shape(p->designs, m, n);
  if (m < 1 || n < 1) throw std::invalid_argument("sample: need m >= 1 and n >= 1");

  SampleSet out;
  out.m = m;
  out.n = n;
  out.d = dimension(spec);
  const int d = out.d;

  for (int i = 0; i < m; ++i) {
    Rng rng = make_rng(seed, {static_cast<std::uint64_t>(i + 1)});
    std::visit(
        overloaded{
            [&](const GaussianLocationSpec& s) {
              std::normal_distribution<double> g(0.0, s.sigma);
              Eigen::MatrixXd x(d, n);
              for (int k = 0; k < n; ++k)
                for (int j = 0; j < d; ++j) x(j, k) = s.theta(j) + g(rng);
              out.blocks.push_back(std::move(x));
            },
            [&](const BoundedProductSpec& s) {
              Eigen::MatrixXd x(d, n);
              for (int k = 0; k < n; ++k)
                for (int j = 0; j < d; ++j) {
                  const double t = s.theta(j);
                  const double u = uniform01(rng);
                  if (s.law == BoundedLaw::two_point) {
                    x(j, k) = u < (1.0 + t) / 2.0 ? 1.0 : -1.0;
                  } else {
                    const double w = 1.0 - std::abs(t);
                    x(j, k) = t - w + 2.0 * w * u;
                  }
                }
              out.blocks.push_back(std::move(x));
            },
            [&](const UniformLocationSpec& s) {
              Eigen::MatrixXd x(d, n);
              for (int k = 0; k < n; ++k)
                for (int j = 0; j < d; ++j) x(j, k) = s.theta(j) - 1.0 + 2.0 * uniform01(rng);
              out.blocks.push_back(std::move(x));
            },
            [&](const BernoulliSpec& s) {
              Eigen::MatrixXd x(1, n);
              for (int k = 0; k < n; ++k) x(0, k) = uniform01(rng) < s.p ? 1.0 : 0.0;
              out.blocks.push_back(std::move(x));
            },
            [&](const RegressionSpec& s) {
              std::normal_distribution<double> g(0.0, 1.0);
              Eigen::VectorXd y = s.designs[i] * s.theta;
              for (int k = 0; k < n; ++k) y(k) += s.sigma * g(rng);
              out.responses.push_back(std::move(y));
            },
            [&](const ProbitSpec& s) {
              // Latent unit-variance regression thresholded at zero.
              std::normal_distribution<double> g(0.0, 1.0);
              Eigen::VectorXd y = s.designs[i] * s.theta;
              for (int k = 0; k < n; ++k) y(k) += g(rng);
              out.responses.push_back(reduce_regression_to_probit(y).cast<double>());
            }},
        spec);
  }
  return out;
}

void SampleSet::write_csv(std::ostream& os) const {
  os << "machine,obs_index,coordinate,value\n";
  char buf[64];
  for (int i = 0; i < static_cast<int>(blocks.size()); ++i)
    for (Eigen::Index k = 0; k < blocks[i].cols(); ++k)
      for (Eigen::Index j = 0; j < blocks[i].rows(); ++j) {
        std::snprintf(buf, sizeof buf, "%.17g", blocks[i](j, k));
        os << i + 1 << ',' << k << ',' << j << ',' << buf << '\n';
      }
  for (int i = 0; i < static_cast<int>(responses.size()); ++i)
    for (Eigen::Index k = 0; k < responses[i].size(); ++k) {
      std::snprintf(buf, sizeof buf, "%.17g", responses[i](k));
      os << i + 1 << ',' << k << ",0," << buf << '\n';
    }
}

EigenBounds design_eigenbounds(const std::vector<Eigen::MatrixXd>& designs) {
  if (designs.empty()) throw std::invalid_argument("design_eigenbounds: no designs");
  EigenBounds out{0.0, std::numeric_limits<double>::infinity()};
  for (const auto& a : designs) {
    if (a.rows() < a.cols())
      throw DegenerateDesignError("design has fewer rows than columns");
    const Eigen::MatrixXd gram = a.transpose() * a / static_cast<double>(a.rows());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram, Eigen::EigenvaluesOnly);
    const double lo = es.eigenvalues().minCoeff();
    const double hi = es.eigenvalues().maxCoeff();
    if (!(lo > 1e-12 * std::max(hi, 1.0)))
      throw DegenerateDesignError("design matrix is rank deficient");
    out.lambda_max2 = std::max(out.lambda_max2, hi);
    out.lambda_min2 = std::min(out.lambda_min2, lo);
  }
  return out;
}

MeanToRegressionReduction::MeanToRegressionReduction(Eigen::MatrixXd design, double sigma,
                                                     double lambda_max2)
    : design_(std::move(design)) {
  if (!(sigma >= 0) || !(lambda_max2 > 0))
    throw std::invalid_argument("reduction needs sigma >= 0 and lambda_max2 > 0");
  const auto n = design_.rows();
  const double s2 = sigma * sigma;
  covariance_ = s2 * Eigen::MatrixXd::Identity(n, n) -
                (s2 / (lambda_max2 * static_cast<double>(n))) * design_ * design_.transpose();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(covariance_);
  Eigen::VectorXd ev = es.eigenvalues();
  if (ev.minCoeff() < -1e-9 * std::max(s2, std::numeric_limits<double>::min()))
    throw ReductionInfeasibleError("noise covariance is not positive semidefinite");
  // Eigenvalues at rounding-noise level are set to zero so that an exactly
  // singular covariance (e.g. A = sqrt(n) I) stays exactly zero.
  const double floor = 1e-12 * s2 * static_cast<double>(n);
  ev = ev.unaryExpr([floor](double v) { return v <= floor ? 0.0 : v; });
  covariance_ = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
  factor_ = es.eigenvectors() * ev.cwiseSqrt().asDiagonal() * es.eigenvectors().transpose();
}

Eigen::VectorXd MeanToRegressionReduction::apply(const Eigen::VectorXd& x_mean, Rng& rng) const {
  if (x_mean.size() != design_.cols())
    throw std::invalid_argument("reduction: mean dimension does not match design");
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::VectorXd w(design_.rows());
  for (Eigen::Index k = 0; k < w.size(); ++k) w(k) = g(rng);
  return design_ * x_mean + factor_ * w;
}

Eigen::VectorXd reduce_mean_to_regression(const Eigen::VectorXd& x_mean,
                                          const Eigen::MatrixXd& design, double sigma,
                                          double lambda_max2, std::uint64_t seed) {
  Rng rng(seed);
  return MeanToRegressionReduction(design, sigma, lambda_max2).apply(x_mean, rng);
}

Eigen::VectorXi reduce_regression_to_probit(const Eigen::VectorXd& y) {
  return (y.array() >= 0.0).cast<int>().matrix();
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

}  // namespace dmest
