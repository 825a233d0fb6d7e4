#include "dmest/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "dmest/codec.hpp"

namespace dmest {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_dims(const RateQuery& q) {
  if (q.d < 1 || q.m < 1 || q.n < 1) throw std::invalid_argument("d, m, n must be positive");
  if (!(q.sigma2 > 0) || !std::isfinite(q.sigma2)) throw std::invalid_argument("sigma2 must be positive");
}

double mn(const RateQuery& q) { return static_cast<double>(q.m) * static_cast<double>(q.n); }

double require_total(const RateQuery& q) {
  if (!q.budget_total) throw std::invalid_argument("formula needs budget_total");
  if (!(*q.budget_total >= 0)) throw std::invalid_argument("budget_total must be nonnegative");
  return *q.budget_total;
}

// sum_i min{1, B_i/d}; a single supplied budget applies to every machine.
double budget_fraction_sum(const RateQuery& q) {
  if (!q.budgets_per_machine || q.budgets_per_machine->empty())
    throw std::invalid_argument("formula needs budgets_per_machine");
  const auto& b = *q.budgets_per_machine;
  if (b.size() != 1 && static_cast<long long>(b.size()) != q.m)
    throw std::invalid_argument("budgets_per_machine must have 1 or m entries");
  double sum = 0.0;
  for (long long i = 0; i < q.m; ++i) {
    const double bi = b.size() == 1 ? b[0] : b[static_cast<std::size_t>(i)];
    if (!(bi >= 0)) throw std::invalid_argument("budgets must be nonnegative");
    sum += std::min(1.0, bi / static_cast<double>(q.d));
  }
  return sum;
}

// [m / (denominator * ln m)] v 1, with the m = 1 convention (inner term dropped)
// and +inf for a zero denominator.
std::pair<double, double> clamped_budget_branch(long long m, double denominator) {
  if (m == 1) return {0.0, 1.0};
  const double raw = denominator > 0 ? static_cast<double>(m) / (denominator * std::log(static_cast<double>(m))) : kInf;
  return {raw, std::max(raw, 1.0)};
}

void require_lambdas(const RateQuery& q) {
  if (!q.lambda_max2 || !q.lambda_min2) throw std::invalid_argument("formula needs lambda_max2 and lambda_min2");
  if (!(*q.lambda_max2 > 0) || !(*q.lambda_min2 > 0))
    throw std::invalid_argument("lambda values must be positive");
}

RatePair regression_rates(const RateQuery& q, double sigma2, const char* lower_id, const char* upper_id) {
  check_dims(q);
  require_lambdas(q);
  const double lmax = *q.lambda_max2, lmin = *q.lambda_min2;
  const double b = require_total(q);
  const double base = sigma2 * static_cast<double>(q.d) / mn(q);

  RatePair out;
  out.lower.formula_id = lower_id;
  const double prefactor = q.constants.c * base / lmax;
  const double centralized = lmax * mn(q) / sigma2;
  const auto [raw, clamped] = clamped_budget_branch(q.m, b / static_cast<double>(q.d) + 1.0);
  out.lower.terms = {{"prefactor", prefactor}, {"branch_centralized", centralized},
                     {"branch_budget_raw", raw}, {"branch_budget", clamped}};
  out.lower.value = prefactor * std::min(centralized, clamped);

  out.upper.formula_id = upper_id;
  out.upper.terms = {{"c_upper", q.constants.c_upper}, {"lambda_min2", lmin}, {"centralized_rate", base}};
  out.upper.value = q.constants.c_upper / lmin * base;
  return out;
}

}  // namespace

double RateResult::term(const std::string& name) const {
  for (const auto& [k, v] : terms)
    if (k == name) return v;
  throw std::out_of_range("no term named " + name);
}

double recombine(const RateResult& r) {
  const auto& id = r.formula_id;
  auto t = [&](const char* name) { return r.term(name); };
  if (id == "packing") return t("d") * t("log2_inverse_separation");
  if (id == "prop1") return t("separation") * t("separation") / 8.0;
  if (id == "thm1")
    return t("prefactor") * std::min({t("branch_centralized"), t("branch_log_m"), t("branch_budget")});
  if (id == "prop2") return t("prefactor") * std::min(t("branch_m"), t("branch_budget"));
  if (id == "prop3_lower") return t("c1") * std::max(t("exp_term"), t("centralized_term"));
  if (id == "prop3_budget")
    return t("d") * (2.0 * t("log2_2mn") + t("ln_m") * (t("ceil_log2_d") + 2.0 * t("log2_2mn")));
  if (id == "thm2" || id == "cor1_lower" || id == "cor2_lower")
    return t("prefactor") * std::min(t("branch_centralized"), t("branch_budget"));
  if (id == "cor1_upper" || id == "cor2_upper") return t("c_upper") / t("lambda_min2") * t("centralized_rate");
  if (id == "centralized") return t("rate");
  if (id == "pstar") return std::min(2.0 * std::exp(t("exponent")), 0.5);
  throw std::invalid_argument("recombine: unknown formula id " + id);
}

RateResult packing_entropy_hypercube_lower(long long d, double delta) {
  if (d < 1 || !(delta > 0)) throw std::invalid_argument("packing entropy needs d >= 1, delta > 0");
  const double inv = delta >= 0.5 ? 0.0 : std::log2(1.0 / (2.0 * delta));
  RateResult r;
  r.formula_id = "packing";
  r.terms = {{"d", static_cast<double>(d)},
             {"log2_inverse_separation", inv},
             {"nats", delta >= 0.5 ? 0.0 : static_cast<double>(d) * std::log(1.0 / (2.0 * delta))}};
  r.value = static_cast<double>(d) * inv;
  return r;
}

double prop1_lower(double budget, const std::function<double(double)>& entropy_inverse) {
  if (!(budget >= 0)) throw std::invalid_argument("budget must be nonnegative");
  const double sep = entropy_inverse(2.0 * budget + 2.0);
  return sep * sep / 8.0;
}

double interval_entropy_inverse(double bits) { return std::exp2(-bits); }

double hypercube_entropy_inverse(double bits, long long d) {
  return 0.5 * std::exp2(-bits / static_cast<double>(d));
}

RateResult theorem1_lower(const RateQuery& q) {
  check_dims(q);
  const double sum = budget_fraction_sum(q);
  RateResult r;
  r.formula_id = "thm1";
  const double prefactor = q.constants.c * q.sigma2 * static_cast<double>(q.d) / mn(q);
  const double centralized = mn(q) / q.sigma2;
  const double log_m = q.m == 1 ? kInf : static_cast<double>(q.m) / std::log(static_cast<double>(q.m));
  const auto [raw, clamped] = clamped_budget_branch(q.m, sum);
  r.terms = {{"prefactor", prefactor},  {"branch_centralized", centralized}, {"branch_log_m", log_m},
             {"budget_fraction_sum", sum}, {"branch_budget_raw", raw},       {"branch_budget", clamped}};
  r.value = prefactor * std::min({centralized, log_m, clamped});
  return r;
}

RateResult prop2_lower(const RateQuery& q) {
  check_dims(q);
  const double sum = budget_fraction_sum(q);
  RateResult r;
  r.formula_id = "prop2";
  const double m = static_cast<double>(q.m);
  const double prefactor = q.constants.c * static_cast<double>(q.d) / m;
  const double branch_budget = sum > 0 ? m / sum : kInf;
  r.terms = {{"prefactor", prefactor}, {"budget_fraction_sum", sum}, {"branch_m", m}, {"branch_budget", branch_budget}};
  r.value = prefactor * std::min(m, branch_budget);
  return r;
}

RateResult prop3_lower(const RateQuery& q) {
  check_dims(q);
  const double b = require_total(q);
  RateResult r;
  r.formula_id = "prop3_lower";
  const double exp_term = std::exp(-q.constants.c2 * b / static_cast<double>(q.d));
  const double centralized = static_cast<double>(q.d) / (mn(q) * mn(q));
  r.terms = {{"c1", q.constants.c1}, {"exp_term", exp_term}, {"centralized_term", centralized}};
  r.value = q.constants.c1 * std::max(exp_term, centralized);
  return r;
}

RateResult prop3_budget(long long d, long long m, long long n) {
  if (d < 1 || m < 1 || n < 1) throw std::invalid_argument("d, m, n must be positive");
  const double dd = static_cast<double>(d);
  const double l = std::log2(2.0 * static_cast<double>(m) * static_cast<double>(n));
  const double cd = ceil_log2(static_cast<std::uint64_t>(d));
  const double ln_m = std::log(static_cast<double>(m));
  const double log2_m = std::log2(static_cast<double>(m));
  const double value_bits = std::ceil(2.0 * l);
  RateResult r;
  r.formula_id = "prop3_budget";
  r.terms = {{"d", dd},
             {"log2_2mn", l},
             {"ceil_log2_d", cd},
             {"ln_m", ln_m},
             {"log2_m", log2_m},
             {"all_log2_reading", dd * (2.0 * l + log2_m * (cd + 2.0 * l))},
             {"integer_value_bits", value_bits}};
  r.value = dd * (2.0 * l + ln_m * (cd + 2.0 * l));
  return r;
}

RateResult theorem2_lower(const RateQuery& q) {
  check_dims(q);
  const double b = require_total(q);
  RateResult r;
  r.formula_id = "thm2";
  const double prefactor = q.constants.c * q.sigma2 * static_cast<double>(q.d) / mn(q);
  const double centralized = mn(q) / q.sigma2;
  const auto [raw, clamped] = clamped_budget_branch(q.m, b / static_cast<double>(q.d) + 1.0);
  r.terms = {{"prefactor", prefactor}, {"branch_centralized", centralized},
             {"branch_budget_raw", raw}, {"branch_budget", clamped}};
  r.value = prefactor * std::min(centralized, clamped);
  return r;
}

RatePair cor1_rates(const RateQuery& q) { return regression_rates(q, q.sigma2, "cor1_lower", "cor1_upper"); }

RatePair cor2_rates(const RateQuery& q) { return regression_rates(q, 1.0, "cor2_lower", "cor2_upper"); }

double centralized_rate(const std::string& family, long long d, long long m, long long n, double sigma2) {
  if (d < 1 || m < 1 || n < 1) throw std::invalid_argument("d, m, n must be positive");
  const double dd = static_cast<double>(d);
  const double N = static_cast<double>(m) * static_cast<double>(n);
  if (family == "gaussian" || family == "regression") {
    if (!(sigma2 > 0)) throw std::invalid_argument("sigma2 must be positive");
    return sigma2 * dd / N;
  }
  if (family == "bounded") return dd / N;  // n = 1 gives d/m
  if (family == "uniform") return dd / (N * N);
  throw std::invalid_argument("unknown family id: " + family);
}

double tail_pstar(double a, double delta, long long n, double sigma) {
  if (n < 1 || !(sigma > 0) || !(delta >= 0)) throw std::invalid_argument("pstar needs n >= 1, sigma > 0, delta >= 0");
  const double shift = std::sqrt(static_cast<double>(n)) * delta;
  if (!(a >= shift)) throw std::invalid_argument("pstar needs a >= sqrt(n) delta");
  const double gap = a - shift;
  return std::min(2.0 * std::exp(-gap * gap / (2.0 * sigma * sigma)), 0.5);
}

const std::vector<std::string>& formula_ids() {
  static const std::vector<std::string> ids = {
      "prop1",      "thm1",       "prop2",      "prop3_lower", "prop3_budget", "thm2",  "cor1_lower",
      "cor1_upper", "cor2_lower", "cor2_upper", "centralized", "pstar",        "packing"};
  return ids;
}

RateResult evaluate_formula(const std::string& id, const RateQuery& q, const FormulaExtras& extras) {
  if (id == "prop1") {
    check_dims(q);
    const double b = require_total(q);
    const double sep = q.d == 1 ? interval_entropy_inverse(2.0 * b + 2.0)
                                : hypercube_entropy_inverse(2.0 * b + 2.0, q.d);
    RateResult r;
    r.formula_id = "prop1";
    r.terms = {{"separation", sep}};
    r.value = sep * sep / 8.0;
    return r;
  }
  if (id == "thm1") return theorem1_lower(q);
  if (id == "prop2") return prop2_lower(q);
  if (id == "prop3_lower") return prop3_lower(q);
  if (id == "prop3_budget") return prop3_budget(q.d, q.m, q.n);
  if (id == "thm2") return theorem2_lower(q);
  if (id == "cor1_lower") return cor1_rates(q).lower;
  if (id == "cor1_upper") return cor1_rates(q).upper;
  if (id == "cor2_lower") return cor2_rates(q).lower;
  if (id == "cor2_upper") return cor2_rates(q).upper;
  if (id == "centralized") {
    RateResult r;
    r.formula_id = "centralized";
    r.value = centralized_rate(extras.family, q.d, q.m, q.n, q.sigma2);
    r.terms = {{"rate", r.value}};
    return r;
  }
  if (id == "pstar") {
    const double sigma = std::sqrt(q.sigma2);
    RateResult r;
    r.formula_id = "pstar";
    r.value = tail_pstar(extras.a, extras.delta, q.n, sigma);
    const double gap = extras.a - std::sqrt(static_cast<double>(q.n)) * extras.delta;
    r.terms = {{"exponent", -gap * gap / (2.0 * sigma * sigma)}};
    return r;
  }
  if (id == "packing") return packing_entropy_hypercube_lower(q.d, extras.delta);
  throw std::invalid_argument("unknown formula id: " + id);
}

}  // namespace dmest
