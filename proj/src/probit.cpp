#include <cmath>

#include "dmest/protocols.hpp"

namespace dmest {
namespace {

constexpr double kLogSqrt2Pi = 0.91893853320467274178;
constexpr double kTailCut = -30.0;

// log Phi(x), using the asymptotic Mills-ratio series deep in the left tail.
double log_normal_cdf(double x) {
  if (x > 0.0) return std::log1p(-0.5 * std::erfc(x / std::sqrt(2.0)));
  if (x > kTailCut) return std::log(0.5 * std::erfc(-x / std::sqrt(2.0)));
  const double x2 = x * x;
  return -0.5 * x2 - kLogSqrt2Pi - std::log(-x) +
         std::log1p(-1.0 / x2 + 3.0 / (x2 * x2) - 15.0 / (x2 * x2 * x2));
}

// phi(x) / Phi(x).
double inverse_mills(double x) {
  if (x > kTailCut) {
    const double pdf = std::exp(-0.5 * x * x - kLogSqrt2Pi);
    return pdf / (0.5 * std::erfc(-x / std::sqrt(2.0)));
  }
  const double x2 = x * x;
  return -x / (1.0 - 1.0 / x2 + 3.0 / (x2 * x2) - 15.0 / (x2 * x2 * x2));
}

}  // namespace

double probit_log_likelihood(const Eigen::MatrixXd& a, const Eigen::VectorXd& z,
                             const Eigen::VectorXd& theta) {
  const Eigen::VectorXd u = a * theta;
  double ll = 0.0;
  for (Eigen::Index k = 0; k < u.size(); ++k) ll += log_normal_cdf(z(k) > 0.5 ? u(k) : -u(k));
  return ll;
}

ProbitFit probit_mle(const Eigen::MatrixXd& a, const Eigen::VectorXd& z,
                     const ProbitSolverOptions& options) {
  if (a.rows() != z.size()) throw std::invalid_argument("probit_mle: design/response size mismatch");
  const auto d = a.cols();
  ProbitFit fit;
  fit.theta = Eigen::VectorXd::Zero(d);
  double ll = probit_log_likelihood(a, z, fit.theta);

  for (int it = 0; it < options.max_iterations; ++it) {
    fit.iterations = it + 1;
    const Eigen::VectorXd u = a * fit.theta;
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(d);
    Eigen::VectorXd weight(u.size());
    for (Eigen::Index k = 0; k < u.size(); ++k) {
      const double s = z(k) > 0.5 ? 1.0 : -1.0;
      const double r = inverse_mills(s * u(k));
      grad += (s * r) * a.row(k).transpose();
      weight(k) = r * (s * u(k) + r);
    }
    if (grad.norm() < options.gradient_tolerance) {
      fit.converged = true;
      break;
    }
    // Negative Hessian of the concave log-likelihood.
    Eigen::MatrixXd info = a.transpose() * weight.asDiagonal() * a;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(info);
    Eigen::VectorXd step;
    if (ldlt.info() == Eigen::Success && ldlt.isPositive()) step = ldlt.solve(grad);
    if (step.size() != d || !step.allFinite()) {
      const double ridge = 1e-8 * std::max(1.0, info.diagonal().maxCoeff());
      info.diagonal().array() += ridge;
      step = info.ldlt().solve(grad);
    }

    double t = 1.0;
    bool accepted = false;
    Eigen::VectorXd candidate;
    double ll_candidate = ll;
    for (int halving = 0; halving < 60; ++halving, t *= 0.5) {
      candidate = fit.theta + t * step;
      ll_candidate = probit_log_likelihood(a, z, candidate);
      if (ll_candidate > ll) {
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      // No ascent direction left at floating-point resolution.
      fit.converged = true;
      break;
    }
    fit.theta = candidate;
    ll = ll_candidate;
    if (fit.theta.norm() > options.divergence_norm) {
      fit.separated = true;
      break;
    }
  }
  // Probit Newton iterates grow only like sqrt(iterations) on separable data, so
  // the norm guard rarely fires; a fit that classifies every point strictly is
  // the reliable signal that no finite maximizer exists.
  if (!fit.separated && fit.theta.norm() > 0.0) {
    const Eigen::VectorXd u = a * fit.theta;
    bool all_correct = true;
    for (Eigen::Index k = 0; k < u.size() && all_correct; ++k)
      all_correct = (z(k) > 0.5 ? u(k) : -u(k)) > 0.0;
    fit.separated = all_correct;
  }
  if (fit.separated) {
    fit.converged = false;
    fit.theta *= options.divergence_norm / fit.theta.norm();
  }
  return fit;
}

}  // namespace dmest
