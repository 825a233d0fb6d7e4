// Acceptance gate: one PASS/FAIL line per criterion, exit 1 on any failure.
//
//   dmest_acceptance [criterion ...]   (default: all)

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "dmest/bounds.hpp"
#include "dmest/experiment.hpp"
#include "dmest/families.hpp"
#include "dmest/protocols.hpp"
#include "dmest/rng.hpp"
#include "dmest/verify.hpp"

using namespace dmest;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
  std::string csv;  // everything the criterion measured, for the determinism rerun
};

void require(Outcome& o, bool ok, const std::string& what) {
  if (!ok) {
    o.pass = false;
    o.detail += (o.detail.empty() ? "" : "; ") + what;
  }
}

std::string fmt(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

double slope(const std::vector<double>& x, const std::vector<double>& y) {
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += std::log(x[i]) / x.size();
    my += std::log(y[i]) / y.size();
  }
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (std::log(x[i]) - mx) * (std::log(y[i]) - my);
    sxx += (std::log(x[i]) - mx) * (std::log(x[i]) - mx);
  }
  return sxy / sxx;
}

Outcome bernoulli_single_machine() {
  Outcome o;
  double worst = 0;
  for (int k = 1; k <= 9; ++k) {
    const auto r = estimate_risk({ProtocolId::single_mean, 10}, BernoulliSpec{0.1 * k}, 1, 1024, 5000, 101);
    o.csv += r.csv_row() + "\n";
    worst = std::max(worst, r.mse_mean);
    require(o, r.mse_mean <= 2.0 / 1024, "theta " + fmt(0.1 * k) + " mse " + fmt(r.mse_mean));
    require(o, r.bits_max == 10, "budget exceeded");
  }
  o.detail = o.pass ? "max mse " + fmt(worst) + " <= " + fmt(2.0 / 1024) : o.detail;
  return o;
}

Outcome gaussian_quantize_average() {
  Outcome o;
  const GaussianLocationSpec g{Eigen::VectorXd::Constant(4, 0.25), 1.0};
  const auto r = estimate_risk({ProtocolId::gauss_qavg}, g, 16, 64, 5000, 202);
  o.csv = r.csv_row() + "\n";
  const double ratio = r.mse_mean / (4.0 / 1024);
  require(o, ratio >= 0.85 && ratio <= 1.35, "ratio " + fmt(ratio));
  const auto out = gaussian_quantized_average(sample(g, 16, 64, 7), 1.0);
  bool shape = out.transcript.messages.size() == 16;
  for (const auto& msg : out.transcript.messages) shape = shape && msg.payload.size() == 48;
  require(o, shape && r.bits_max == 768 && r.bits_mean == 768, "transcript is not 16 x 48 bits");
  if (o.pass) o.detail = "mse/(sigma^2 d/(mn)) = " + fmt(ratio) + ", 16 x 48 bits";
  return o;
}

Outcome onebit() {
  Outcome o;
  const int d = 8, m = 100;
  const auto r = estimate_risk({ProtocolId::onebit}, BoundedProductSpec{Eigen::VectorXd::Zero(d)}, m, 1, 10000, 303);
  o.csv = r.csv_row() + "\n";
  const double rel = std::abs(r.mse_mean - double(d) / m) / (double(d) / m);
  require(o, rel <= 0.03, "relative error " + fmt(rel));
  double worst_z = 0;
  for (double t : {-0.8, -0.4, 0.2, 0.6, 0.9}) {
    Eigen::VectorXd theta(d);
    for (int j = 0; j < d; ++j) theta(j) = (j % 2 ? -t : t);
    const auto g = estimate_risk({ProtocolId::onebit}, BoundedProductSpec{theta}, m, 1, 1000, 304);
    o.csv += g.csv_row() + "\n";
    for (int j = 0; j < d; ++j) worst_z = std::max(worst_z, std::abs(g.theta_hat_mean(j) - theta(j)) / g.theta_hat_stderr(j));
  }
  require(o, worst_z <= 4, "bias z " + fmt(worst_z));
  if (o.pass) o.detail = "|mse - d/m|/(d/m) = " + fmt(rel) + ", max bias z = " + fmt(worst_z);
  return o;
}

Outcome uniform_interactive() {
  Outcome o;
  const int d = 3, m = 8, n = 16, trials = 5000;
  const double N = m * n;
  const UniformLocationSpec u{Eigen::VectorXd::Constant(d, 0.3)};
  const auto r = estimate_risk({ProtocolId::uniform_min}, u, m, n, trials, 404);
  o.csv = r.csv_row() + "\n";
  const double oracle = 8.0 / ((N + 1) * (N + 2));
  const double rel = std::abs(r.mse_mean / d - oracle) / oracle;
  require(o, rel <= 0.15, "per-coordinate mse off by " + fmt(rel));
  const double allowed = prop3_budget(d, m, n).value + d;
  require(o, r.bits_mean <= allowed, "bits " + fmt(r.bits_mean) + " > " + fmt(allowed));

  std::vector<double> hits(m, 0.0);
  for (int t = 0; t < trials; ++t) {
    const auto run = run_uniform_min(sample(u, m, n, derive_seed(405, {std::uint64_t(t)})));
    for (int i = 1; i < m; ++i) hits[i] += double(run.improvements[i].size());
  }
  double worst_z = 0;
  for (int i = 1; i < m; ++i) {
    const double p = 1.0 / (i + 1), count = double(trials) * d;
    const double z = std::abs(hits[i] / count - p) / std::sqrt(p * (1 - p) / count);
    o.csv += fmt(hits[i]) + "\n";
    worst_z = std::max(worst_z, z);
  }
  require(o, worst_z <= 3, "improvement frequency z " + fmt(worst_z));
  if (o.pass)
    o.detail = "mse rel err " + fmt(rel) + ", bits " + fmt(r.bits_mean) + " <= " + fmt(allowed) +
               ", max improvement z " + fmt(worst_z);
  return o;
}

Outcome regression() {
  Outcome o;
  const int d = 3, m = 10, n = 30;
  const double sigma = 1.0;
  const auto designs = make_designs("orthogonal", m, n, d, 505);
  double trace = 0;
  for (const auto& a : designs) trace += (a.transpose() * a).inverse().trace();
  const double exact = sigma * sigma / (double(m) * m) * trace;
  const double allowance = d / std::pow(double(m) * n, 2);
  const RegressionSpec spec{designs, Eigen::VectorXd::Constant(d, 0.2), sigma};
  const auto r = estimate_risk({ProtocolId::regress_avg}, spec, 0, 0, 5000, 506);
  o.csv = r.csv_row() + "\n";
  const double gap = std::abs(r.mse_mean - exact);
  require(o, gap <= 0.10 * exact + allowance, "mse " + fmt(r.mse_mean) + " vs oracle " + fmt(exact));
  if (o.pass) o.detail = "mse " + fmt(r.mse_mean) + " vs oracle " + fmt(exact) + " (rel " + fmt(gap / exact) + ")";
  return o;
}

Outcome reductions() {
  Outcome o;
  const int n = 4, d = 2, draws = 100000;
  Eigen::MatrixXd a(n, d);
  a << 1.0, 0.5, -0.3, 1.2, 0.8, -1.0, 0.1, 0.4;
  const Eigen::Vector2d theta(0.3, -0.6);
  const double lmax = design_eigenbounds({a}).lambda_max2;

  // Gaussian mean -> regression, sigma = 1.5; then regression -> probit, sigma = 1.
  double worst_z = 0;
  for (double sigma : {1.5, 1.0}) {
    const MeanToRegressionReduction red(a, sigma, lmax);
    Rng rng(derive_seed(606, {std::uint64_t(sigma * 10)}));
    std::normal_distribution<double> normal;
    const double sd = sigma / std::sqrt(lmax * n);
    const Eigen::VectorXd center = a * theta;
    Eigen::VectorXd s1 = Eigen::VectorXd::Zero(n), ones = Eigen::VectorXd::Zero(n);
    Eigen::MatrixXd s2 = Eigen::MatrixXd::Zero(n, n), s4 = Eigen::MatrixXd::Zero(n, n);
    for (int t = 0; t < draws; ++t) {
      Eigen::VectorXd x(d);
      for (int j = 0; j < d; ++j) x(j) = theta(j) + sd * normal(rng);
      const Eigen::VectorXd y = red.apply(x, rng);
      const Eigen::VectorXd e = y - center;
      s1 += e;
      const Eigen::MatrixXd outer = e * e.transpose();
      s2 += outer;
      s4 += outer.cwiseProduct(outer);
      ones += reduce_regression_to_probit(y).cast<double>();
    }
    const double N = draws;
    if (sigma != 1.0) {
      for (int i = 0; i < n; ++i) {
        const double mean = s1(i) / N;
        worst_z = std::max(worst_z, std::abs(mean) / std::sqrt(s2(i, i) / N / N));
        for (int j = 0; j < n; ++j) {
          const double cov = s2(i, j) / N;
          const double var = s4(i, j) / N - cov * cov;
          worst_z = std::max(worst_z, std::abs(cov - (i == j ? sigma * sigma : 0.0)) / std::sqrt(var / N));
        }
      }
      o.csv += fmt(s1.sum()) + "," + fmt(s2.sum()) + "\n";
    } else {
      for (int i = 0; i < n; ++i) {
        const double p = normal_cdf(a.row(i).dot(theta));
        worst_z = std::max(worst_z, std::abs(ones(i) / N - p) / std::sqrt(p * (1 - p) / N));
      }
      o.csv += fmt(ones.sum()) + "\n";
    }
  }
  require(o, worst_z <= 3, "max z " + fmt(worst_z));
  if (o.pass) o.detail = "max |z| over means, covariances and P(Z=1) = " + fmt(worst_z);
  return o;
}

Outcome inequality_suites() {
  Outcome o;
  const std::vector<std::pair<std::string, int>> plan = {{"pinsker", 10000}, {"dpi", 1000},  {"dpi3", 1000},
                                                         {"dpi5", 1000},     {"dpi7", 1000}, {"tensor", 1000},
                                                         {"chain", 1000},    {"fano", 1000}};
  int total = 0, violations = 0;
  double min_slack = 1e300;
  for (const auto& [suite, count] : plan) {
    for (const auto& row : run_suite(suite, count, 707)) {
      ++total;
      if (!row.holds) {
        ++violations;
        o.detail += suite + " instance seed " + std::to_string(row.seed) + " violated; ";
      }
      min_slack = std::min(min_slack, row.slack);
      o.csv += to_csv(row) + "\n";
    }
  }
  require(o, violations == 0, std::to_string(violations) + " violations");
  if (o.pass) o.detail = std::to_string(total) + " instances, 0 violations, min slack " + fmt(min_slack);
  return o;
}

Outcome bound_calculators() {
  Outcome o;
  RateQuery q;
  q.d = 4;
  q.m = 16;
  q.n = 64;
  RateQuery q1 = q;
  q1.budgets_per_machine = std::vector<double>(16, 4.0);
  const double thm1 = theorem1_lower(q1).value;
  RateQuery q2 = q;
  q2.budget_total = 16;
  const double thm2 = theorem2_lower(q2).value;
  const double p3 = prop3_budget(2, 4, 8).value;
  o.csv = fmt(thm1) + "," + fmt(thm2) + "," + fmt(p3) + "\n";
  require(o, thm1 == 0.00390625, "thm1 " + fmt(thm1));
  require(o, std::abs(thm2 - 0.004508) <= 1e-6, "thm2 " + fmt(thm2));
  require(o, std::abs(p3 - 60.05) <= 0.01, "prop3_budget " + fmt(p3));

  int checked = 0;
  for (long long m : {1LL, 4LL, 50LL})
    for (long long d : {1LL, 8LL}) {
      RateQuery base;
      base.d = d;
      base.m = m;
      base.n = 100;
      base.lambda_max2 = 1.2;
      base.lambda_min2 = 0.4;
      std::vector<double> prev(7, 1e300);
      for (int k = 0; k < 200; ++k) {
        const double b = k == 0 ? 0.0 : std::pow(10.0, -2 + 7.0 * k / 199);
        RateQuery per = base, tot = base;
        per.budgets_per_machine = std::vector<double>(std::size_t(m), b);
        tot.budget_total = b;
        const std::vector<double> v = {prop1_lower(b, interval_entropy_inverse), theorem1_lower(per).value,
                                       prop2_lower(per).value, prop3_lower(tot).value, theorem2_lower(tot).value,
                                       cor1_rates(tot).lower.value, cor2_rates(tot).lower.value};
        for (std::size_t j = 0; j < v.size(); ++j) {
          if (v[j] > prev[j]) require(o, false, "formula " + std::to_string(j) + " increases at budget " + fmt(b));
          prev[j] = v[j];
          ++checked;
        }
      }
    }
  if (o.pass)
    o.detail = "thm1 " + fmt(thm1) + ", thm2 " + fmt(thm2) + ", prop3_budget " + fmt(p3) + ", " +
               std::to_string(checked) + " monotonicity checks";
  return o;
}

Outcome scaling_shape() {
  Outcome o;
  std::vector<double> ms, onebit_mse;
  for (int m : {25, 100, 400, 1600}) {
    const auto r = estimate_risk({ProtocolId::onebit}, BoundedProductSpec{Eigen::VectorXd::Zero(8)}, m, 1, 1000, 808);
    o.csv += r.csv_row() + "\n";
    ms.push_back(m);
    onebit_mse.push_back(r.mse_mean);
  }
  std::vector<double> ns, uniform_mse;
  for (int n : {8, 16, 32, 64}) {
    const auto r = estimate_risk({ProtocolId::uniform_min}, UniformLocationSpec{Eigen::VectorXd::Zero(3)}, 8, n, 2000, 809);
    o.csv += r.csv_row() + "\n";
    ns.push_back(8.0 * n);
    uniform_mse.push_back(r.mse_mean);
  }
  const double s1 = slope(ms, onebit_mse), s2 = slope(ns, uniform_mse);
  require(o, std::abs(s1 + 1) <= 0.1, "one-bit slope " + fmt(s1));
  require(o, std::abs(s2 + 2) <= 0.15, "uniform slope " + fmt(s2));
  if (o.pass) o.detail = "one-bit slope vs m " + fmt(s1) + ", uniform slope vs mn " + fmt(s2);
  return o;
}

struct Criterion {
  int id;
  std::string name;
  double seconds;  // runtime ceiling, 0 for none
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> criteria = {
      {1, "bounded-mean single machine", 5, bernoulli_single_machine},
      {2, "gaussian quantize-and-average", 30, gaussian_quantize_average},
      {3, "one-bit scheme", 20, onebit},
      {4, "uniform interactive minimum", 30, uniform_interactive},
      {5, "regression local average", 60, regression},
      {6, "reduction faithfulness", 0, reductions},
      {7, "inequality suites", 120, inequality_suites},
      {8, "bound calculators", 0, bound_calculators},
      {9, "scaling shape", 0, scaling_shape},
  };
  std::vector<int> wanted;
  for (int i = 1; i < argc; ++i) wanted.push_back(std::stoi(argv[i]));
  auto selected = [&](int id) { return wanted.empty() || std::find(wanted.begin(), wanted.end(), id) != wanted.end(); };

  bool all = true;
  std::map<int, std::string> first_csv;
  for (const auto& c : criteria) {
    if (!selected(c.id)) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o = c.run();
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (c.seconds > 0) require(o, secs < c.seconds, "runtime " + fmt(secs) + " s exceeds " + fmt(c.seconds) + " s");
    first_csv[c.id] = o.csv;
    all = all && o.pass;
    std::printf("%s criterion %d (%s): %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", c.id, c.name.c_str(),
                o.detail.c_str(), secs);
    std::fflush(stdout);
  }

  if (selected(10)) {
    Outcome o;
    for (const auto& c : criteria) {
      if (!first_csv.count(c.id)) continue;
      if (c.run().csv != first_csv[c.id]) require(o, false, "criterion " + std::to_string(c.id) + " output changed");
    }
    if (first_csv.empty()) require(o, false, "no criterion ran");
    if (o.pass) o.detail = "reran " + std::to_string(first_csv.size()) + " criteria, outputs byte-identical";
    all = all && o.pass;
    std::printf("%s criterion 10 (determinism): %s\n", o.pass ? "PASS" : "FAIL", o.detail.c_str());
  }
  return all ? 0 : 1;
}
