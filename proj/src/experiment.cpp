#include "dmest/experiment.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include "dmest/csv.hpp"
#include "dmest/verify.hpp"

namespace dmest {
namespace {

template <class T>
bool parse_number(const std::string& text, T& out) {
  const std::string s = csv::trim(text);
  if (s.empty()) return false;
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc() && ptr == end;
}

template <class T>
T config_number(const std::string& text, int line, const std::string& key) {
  T v{};
  if (!parse_number(text, v)) throw ConfigError(line, "bad numeric value for " + key + ": '" + text + "'");
  return v;
}

template <class T>
void append_list(std::vector<T>& grid, const std::string& value, int line, const std::string& key) {
  for (const auto& item : csv::split(value)) grid.push_back(config_number<T>(item, line, key));
}

const char* required_family(ProtocolId id) {
  switch (id) {
    case ProtocolId::single_mean: return "bernoulli";
    case ProtocolId::gauss_qavg: return "gaussian";
    case ProtocolId::onebit: return "bounded";
    case ProtocolId::uniform_min: return "uniform";
    case ProtocolId::regress_avg: return "regression";
    case ProtocolId::probit_avg: return "probit";
    case ProtocolId::centralized: return nullptr;
  }
  return nullptr;
}

std::string nan_text() { return csv::num(std::numeric_limits<double>::quiet_NaN()); }

// Lower bound evaluated at the communication the protocol actually used.
RateResult matching_lower_bound(const ExperimentConfig& c, const ProblemSpec& problem, const RiskReport& rep, int d,
                                int m, int n, double sigma) {
  RateQuery q;
  q.d = d;
  q.m = m;
  q.n = n;
  q.sigma2 = sigma > 0 ? sigma * sigma : 1.0;
  q.constants = c.constants;
  const double per_machine = rep.bits_mean / m;
  switch (c.protocol) {
    case ProtocolId::onebit:
      q.budgets_per_machine = std::vector<double>{per_machine};
      return prop2_lower(q);
    case ProtocolId::gauss_qavg:
      q.budgets_per_machine = std::vector<double>{per_machine};
      return theorem1_lower(q);
    case ProtocolId::uniform_min:
      q.budget_total = rep.bits_mean;
      return prop3_lower(q);
    case ProtocolId::single_mean:
      q.budget_total = rep.bits_mean;
      return evaluate_formula("prop1", q);
    case ProtocolId::regress_avg:
    case ProtocolId::probit_avg: {
      const auto& designs = c.protocol == ProtocolId::regress_avg ? std::get<RegressionSpec>(problem).designs
                                                                  : std::get<ProbitSpec>(problem).designs;
      const EigenBounds eb = design_eigenbounds(designs);
      q.lambda_max2 = eb.lambda_max2;
      q.lambda_min2 = eb.lambda_min2;
      q.budget_total = rep.bits_mean;
      return c.protocol == ProtocolId::regress_avg ? cor1_rates(q).lower : cor2_rates(q).lower;
    }
    case ProtocolId::centralized: break;
  }
  RateResult none;
  none.formula_id = "none";
  none.value = std::numeric_limits<double>::quiet_NaN();
  return none;
}

double matching_centralized_rate(const std::string& family, int d, int m, int n, double sigma) {
  if (family == "gaussian" || family == "regression") return centralized_rate(family, d, m, n, sigma * sigma);
  if (family == "probit") return centralized_rate("regression", d, m, n, 1.0);
  if (family == "bernoulli") return centralized_rate("bounded", d, m, n, 1.0);
  return centralized_rate(family, d, m, n, 1.0);
}

}  // namespace

ConfigError::ConfigError(int line, const std::string& message)
    : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + message : message), line_(line) {}

ExperimentConfig parse_config(std::istream& in) {
  ExperimentConfig c;
  std::set<std::string> seen;
  bool have_protocol = false, have_law = false;
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const std::string text = csv::trim(raw);
    if (text.empty() || text[0] == '#') continue;
    const auto eq = text.find('=');
    if (eq == std::string::npos) throw ConfigError(line, "expected key = value");
    const std::string key = csv::trim(text.substr(0, eq));
    const std::string value = csv::trim(text.substr(eq + 1));
    if (value.empty()) throw ConfigError(line, "empty value for " + key);

    if (key == "d") { append_list(c.d, value, line, key); continue; }
    if (key == "m") { append_list(c.m, value, line, key); continue; }
    if (key == "n") { append_list(c.n, value, line, key); continue; }
    if (key == "sigma") { append_list(c.sigma, value, line, key); continue; }

    if (!seen.insert(key).second) throw ConfigError(line, "repeated key " + key);
    if (key == "protocol") {
      const auto id = parse_protocol_id(value);
      if (!id) throw ConfigError(line, "unknown protocol id " + value);
      c.protocol = *id;
      have_protocol = true;
    } else if (key == "family") {
      static const std::set<std::string> families = {"bernoulli", "gaussian", "bounded",
                                                     "uniform",   "regression", "probit"};
      if (!families.count(value)) throw ConfigError(line, "unknown family id " + value);
      c.family = value;
    } else if (key == "law") {
      if (value == "two_point") c.law = BoundedLaw::two_point;
      else if (value == "uniform_interval") c.law = BoundedLaw::uniform_interval;
      else throw ConfigError(line, "unknown law " + value);
      have_law = true;
    } else if (key == "theta") {
      append_list(c.theta, value, line, key);
    } else if (key == "trials") {
      c.trials = config_number<int>(value, line, key);
    } else if (key == "seed") {
      c.seed = config_number<std::uint64_t>(value, line, key);
    } else if (key == "budget_bits") {
      c.budget_bits = config_number<int>(value, line, key);
      if (c.budget_bits < 0) throw ConfigError(line, "budget_bits must be nonnegative");
    } else if (key == "design") {
      if (value != "orthogonal" && value != "gaussian") throw ConfigError(line, "unknown design " + value);
      c.design = value;
    } else if (key == "design_seed") {
      c.design_seed = config_number<std::uint64_t>(value, line, key);
    } else if (key == "c") {
      c.constants.c = config_number<double>(value, line, key);
    } else if (key == "c1") {
      c.constants.c1 = config_number<double>(value, line, key);
    } else if (key == "c2") {
      c.constants.c2 = config_number<double>(value, line, key);
    } else if (key == "c_upper") {
      c.constants.c_upper = config_number<double>(value, line, key);
    } else {
      throw ConfigError(line, "unknown key " + key);
    }
  }

  if (!have_protocol) throw ConfigError(0, "missing protocol");
  if (c.family.empty()) {
    const char* f = required_family(c.protocol);
    if (!f) throw ConfigError(0, "missing family");
    c.family = f;
  }
  if (const char* f = required_family(c.protocol); f && c.family != f)
    throw ConfigError(0, std::string("protocol ") + to_string(c.protocol) + " needs family " + f);
  if (have_law && c.family != "bounded") throw ConfigError(0, "law applies to the bounded family only");
  if (c.family == "bernoulli" && c.d.empty()) c.d.push_back(1);
  if (c.sigma.empty()) c.sigma.push_back(1.0);
  if (c.d.empty() || c.m.empty() || c.n.empty()) throw ConfigError(0, "empty grid: d, m and n need at least one value");
  for (int v : c.d) if (v < 1) throw ConfigError(0, "grid values of d must be positive");
  for (int v : c.m) if (v < 1) throw ConfigError(0, "grid values of m must be positive");
  for (int v : c.n) if (v < 1) throw ConfigError(0, "grid values of n must be positive");
  for (double s : c.sigma) if (!(s >= 0) || !std::isfinite(s)) throw ConfigError(0, "sigma must be finite and nonnegative");
  if (c.trials < 2) throw ConfigError(0, "trials must be at least 2");
  if (c.theta.empty()) c.theta.push_back(0.0);
  if (c.theta.size() > 1)
    for (int v : c.d)
      if (static_cast<int>(c.theta.size()) != v) throw ConfigError(0, "theta list length must match every d");
  return c;
}

ExperimentConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(0, "cannot open config " + path);
  return parse_config(in);
}

std::vector<Eigen::MatrixXd> make_designs(const std::string& kind, int m, int n, int d, std::uint64_t seed) {
  if (m < 1 || n < 1 || d < 1) throw std::invalid_argument("make_designs: m, n, d must be positive");
  if (n < d) throw DegenerateDesignError("make_designs: need n >= d");
  std::vector<Eigen::MatrixXd> out;
  for (int i = 0; i < m; ++i) {
    Rng rng = make_rng(seed, {static_cast<std::uint64_t>(i + 1)});
    std::normal_distribution<double> normal;
    Eigen::MatrixXd g(n, d);
    for (Eigen::Index c = 0; c < d; ++c)
      for (Eigen::Index r = 0; r < n; ++r) g(r, c) = normal(rng);
    if (kind == "gaussian") {
      out.push_back(std::move(g));
    } else if (kind == "orthogonal") {
      Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
      Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(n, d);
      out.push_back(std::sqrt(static_cast<double>(n)) * q);
    } else {
      throw std::invalid_argument("make_designs: unknown kind " + kind);
    }
  }
  return out;
}

ProblemSpec make_problem(const ExperimentConfig& c, int d, int m, int n, double sigma) {
  Eigen::VectorXd theta = Eigen::VectorXd::Constant(d, c.theta[0]);
  if (c.theta.size() > 1) theta = Eigen::Map<const Eigen::VectorXd>(c.theta.data(), static_cast<Eigen::Index>(c.theta.size()));
  const std::uint64_t design_seed =
      derive_seed(c.design_seed, {static_cast<std::uint64_t>(d), static_cast<std::uint64_t>(m), static_cast<std::uint64_t>(n)});
  ProblemSpec p;
  if (c.family == "gaussian") {
    p = GaussianLocationSpec{theta, sigma};
  } else if (c.family == "bounded") {
    p = BoundedProductSpec{theta, c.law};
  } else if (c.family == "uniform") {
    p = UniformLocationSpec{theta};
  } else if (c.family == "bernoulli") {
    if (d != 1) throw std::invalid_argument("bernoulli family has d = 1");
    p = BernoulliSpec{theta(0)};
  } else if (c.family == "regression") {
    p = RegressionSpec{make_designs(c.design, m, n, d, design_seed), theta, sigma};
  } else if (c.family == "probit") {
    p = ProbitSpec{make_designs(c.design, m, n, d, design_seed), theta};
  } else {
    throw std::invalid_argument("unknown family id " + c.family);
  }
  validate(p);
  return p;
}

std::string sweep_csv_header() {
  return "protocol,family,d,m,n,sigma,seed," + RiskReport::csv_header() +
         ",centralized_rate,lower_bound,lower_bound_id,error";
}

void run_simulate(const ExperimentConfig& c, std::ostream& out, int threads) {
  out << sweep_csv_header() << '\n';
  const ProtocolConfig pc{c.protocol, c.budget_bits};
  for (int d : c.d)
    for (int m : c.m)
      for (int n : c.n)
        for (double sigma : c.sigma) {
          std::vector<std::string> row = {to_string(c.protocol), c.family,        std::to_string(d),
                                          std::to_string(m),     std::to_string(n), csv::num(sigma),
                                          std::to_string(c.seed)};
          try {
            const ProblemSpec problem = make_problem(c, d, m, n, sigma);
            const RiskReport rep = estimate_risk(pc, problem, m, n, c.trials, c.seed, threads);
            const RateResult lb = matching_lower_bound(c, problem, rep, d, m, n, sigma);
            row.push_back(rep.csv_row());
            row.push_back(csv::num(matching_centralized_rate(c.family, d, m, n, sigma)));
            row.push_back(csv::num(lb.value));
            row.push_back(lb.formula_id);
            row.push_back("");
          } catch (const std::exception& e) {
            const std::string nan = nan_text();
            row.insert(row.end(), {nan, nan, std::to_string(c.trials), nan, "0", "", "0", nan, nan, "none",
                                   csv::sanitize(e.what())});
          }
          out << csv::join(row) << '\n';
        }
}

std::string bounds_csv_header() { return "formula_id,inputs,terms,value,error"; }

void run_bounds(std::istream& queries, std::ostream& out) {
  out << bounds_csv_header() << '\n';
  std::string raw;
  std::vector<std::string> columns;
  while (std::getline(queries, raw)) {
    const std::string text = csv::trim(raw);
    if (text.empty() || text[0] == '#') continue;
    if (columns.empty()) {
      for (const auto& h : csv::split(text)) columns.push_back(csv::trim(h));
      continue;
    }
    const auto fields = csv::split(text);
    std::map<std::string, std::string> row;
    std::string inputs;
    for (std::size_t i = 0; i < columns.size() && i < fields.size(); ++i) {
      const std::string v = csv::trim(fields[i]);
      if (v.empty()) continue;
      row[columns[i]] = v;
      if (columns[i] != "formula") inputs += (inputs.empty() ? "" : ";") + columns[i] + "=" + v;
    }
    const std::string requested = row.count("formula") ? row["formula"] : "";
    std::vector<std::string> ids;
    if (requested == "all") ids = formula_ids();
    else ids.push_back(requested);

    auto emit_error = [&](const std::string& id, const std::string& what) {
      out << csv::join({csv::sanitize(id), csv::sanitize(inputs), "", nan_text(), csv::sanitize(what)}) << '\n';
    };

    RateQuery q;
    FormulaExtras extras;
    try {
      if (fields.size() != columns.size()) throw std::invalid_argument("field count does not match header");
      if (requested.empty()) throw std::invalid_argument("missing formula");
      auto num = [&](const std::string& key, double& target) {
        auto it = row.find(key);
        if (it == row.end()) return false;
        if (!parse_number(it->second, target)) throw std::invalid_argument("malformed numeric field " + key);
        return true;
      };
      auto integer = [&](const std::string& key, long long& target) {
        auto it = row.find(key);
        if (it == row.end()) return;
        if (!parse_number(it->second, target)) throw std::invalid_argument("malformed integer field " + key);
      };
      integer("d", q.d);
      integer("m", q.m);
      integer("n", q.n);
      num("sigma2", q.sigma2);
      double v = 0.0;
      if (num("budget_total", v)) q.budget_total = v;
      if (auto it = row.find("budget_per_machine"); it != row.end()) {
        std::vector<double> b;
        for (const auto& item : csv::split(it->second, ';')) {
          double x = 0.0;
          if (!parse_number(item, x)) throw std::invalid_argument("malformed numeric field budget_per_machine");
          b.push_back(x);
        }
        q.budgets_per_machine = b;
      }
      if (num("lambda_max2", v)) q.lambda_max2 = v;
      if (num("lambda_min2", v)) q.lambda_min2 = v;
      num("a", extras.a);
      num("delta", extras.delta);
      if (row.count("family")) extras.family = row["family"];
      num("c", q.constants.c);
      num("c1", q.constants.c1);
      num("c2", q.constants.c2);
      num("c_upper", q.constants.c_upper);
    } catch (const std::exception& e) {
      for (const auto& id : ids) emit_error(id, e.what());
      continue;
    }

    for (const auto& id : ids) {
      try {
        const RateResult r = evaluate_formula(id, q, extras);
        std::string terms;
        for (const auto& [k, t] : r.terms) terms += (terms.empty() ? "" : ";") + k + "=" + csv::num(t);
        out << csv::join({r.formula_id, csv::sanitize(inputs), terms, csv::num(r.value), ""}) << '\n';
      } catch (const std::exception& e) {
        emit_error(id, e.what());
      }
    }
  }
}

int run_verify(const std::vector<std::string>& suites, int count, std::uint64_t seed, std::ostream& out, int threads) {
  for (const auto& s : suites)
    if (!is_suite(s)) throw std::invalid_argument("unknown suite: " + s);
  if (count < 1) throw std::invalid_argument("instance count must be positive");
  out << verify_csv_header() << '\n';
  int violations = 0;
  for (const auto& s : suites)
    for (const auto& row : run_suite(s, count, seed, threads)) {
      if (!row.holds) ++violations;
      out << to_csv(row) << '\n';
    }
  return violations;
}

std::string gnuplot_hints(const std::string& subcommand) {
  if (subcommand == "simulate")
    return "# set datafile separator ','\n"
           "# set logscale xy\n"
           "# plot 'out.csv' every ::1 using 4:8:9 with yerrorbars title 'mse', "
           "'' every ::1 using 4:15 with lines title 'centralized', '' every ::1 using 4:16 with lines title 'lower'\n";
  if (subcommand == "bounds")
    return "# set datafile separator ','\n"
           "# plot 'out.csv' every ::1 using 0:4 with points title 'value'\n";
  if (subcommand == "verify")
    return "# set datafile separator ','\n"
           "# plot 'out.csv' every ::1 using 3:4 with points title 'rhs vs lhs', x with lines title 'equality'\n";
  return "";
}

}  // namespace dmest
