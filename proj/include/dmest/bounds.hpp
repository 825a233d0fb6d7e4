#pragma once

// Closed-form lower/upper rate calculators. Universal constants are exposed in
// RateConstants and default to 1; they set the scale only.

#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace dmest {

struct RateConstants {
  double c = 1.0;
  double c1 = 1.0;
  double c2 = 1.0;
  double c_upper = 1.0;  // c' of the regression/probit upper bounds
};

struct RateQuery {
  long long d = 1;
  long long m = 1;
  long long n = 1;
  double sigma2 = 1.0;
  std::optional<double> budget_total;
  std::optional<std::vector<double>> budgets_per_machine;
  std::optional<double> lambda_max2;
  std::optional<double> lambda_min2;
  RateConstants constants;
};

struct RateResult {
  double value = 0.0;
  std::string formula_id;
  std::vector<std::pair<std::string, double>> terms;

  // Throws std::out_of_range for a missing term.
  double term(const std::string& name) const;
};

/// Recomputes `value` from `terms` alone, using the formula named by formula_id.
double recombine(const RateResult& r);

/// d log2(1/(2 delta)); term "nats" holds d ln(1/(2 delta)). Zero for delta >= 1/2.
RateResult packing_entropy_hypercube_lower(long long d, double delta);

/// (1/8) entropy_inverse(2B + 2)^2.
double prop1_lower(double budget, const std::function<double(double)>& entropy_inverse);

/// Inverse packing entropy of [0, 1] with M(delta) >= log2(1/delta): 2^-B.
double interval_entropy_inverse(double bits);
/// Inverse of the hypercube volume bound d log2(1/(2 delta)): 2^(-B/d)/2.
double hypercube_entropy_inverse(double bits, long long d);

RateResult theorem1_lower(const RateQuery& q);
RateResult prop2_lower(const RateQuery& q);
RateResult prop3_lower(const RateQuery& q);
/// Value is the natural-log reading; terms carry the all-log2 reading and the
/// integer bit count charged by the implemented protocol's framing.
RateResult prop3_budget(long long d, long long m, long long n);
RateResult theorem2_lower(const RateQuery& q);

struct RatePair {
  RateResult lower;
  RateResult upper;
};
RatePair cor1_rates(const RateQuery& q);
RatePair cor2_rates(const RateQuery& q);

/// "gaussian"/"regression": sigma2 d/(mn); "bounded": d/m; "uniform": d/(mn)^2.
double centralized_rate(const std::string& family, long long d, long long m, long long n,
                        double sigma2);

/// min{2 exp(-(a - sqrt(n) delta)^2/(2 sigma^2)), 1/2}.
double tail_pstar(double a, double delta, long long n, double sigma);

/// Formula ids accepted by evaluate_formula.
const std::vector<std::string>& formula_ids();

/// Dispatch by stable id. "prop1" uses budget_total with the interval entropy
/// when d == 1 and the hypercube volume bound otherwise; "pstar" and
/// "centralized" need their extra arguments.
struct FormulaExtras {
  std::string family;
  double a = 0.0;
  double delta = 0.0;
};
RateResult evaluate_formula(const std::string& id, const RateQuery& q, const FormulaExtras& extras = {});

}  // namespace dmest
