#include "dmest/verify.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "dmest/csv.hpp"
#include "dmest/parallel.hpp"

namespace dmest {
namespace {

int uniform_int(Rng& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

double uniform(Rng& rng, double lo, double hi) { return lo + (hi - lo) * uniform01(rng); }

bool coin(Rng& rng) { return (rng() >> 63) != 0; }

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

VerifyRow make_row(double lhs, double rhs, bool holds) {
  VerifyRow r;
  r.lhs = lhs;
  r.rhs = rhs;
  r.slack = rhs - lhs;
  r.holds = holds;
  return r;
}

// Either a two-point channel or a random tilted one.
ChannelSpec coordinate_channel(Rng& rng, int max_outputs) {
  if (coin(rng)) return ChannelSpec::two_point(coin(rng) ? 0.1 : 0.2);
  return random_tilted_channel(rng, 2, uniform_int(rng, 2, max_outputs), uniform(rng, 0.05, 1.0));
}

// Channel whose symbols outside `subset` are unconstrained (possibly zero in a row).
ChannelSpec truncated_channel(Rng& rng, int outputs, const std::vector<bool>& subset) {
  Eigen::MatrixXd rows = random_tilted_channel(rng, 2, outputs, uniform(rng, 0.05, 0.8)).rows;
  for (int x = 0; x < outputs; ++x) {
    if (subset[x]) continue;
    for (int v = 0; v < 2; ++v) rows(v, x) *= coin(rng) ? uniform(rng, 0.0, 6.0) : 0.0;
  }
  for (int v = 0; v < 2; ++v) rows.row(v) /= rows.row(v).sum();
  return ChannelSpec(rows);
}

std::vector<bool> random_subset(Rng& rng, int outputs) {
  std::vector<bool> s(outputs);
  for (int x = 0; x < outputs; ++x) s[x] = uniform01(rng) < 0.75;
  s[uniform_int(rng, 0, outputs - 1)] = true;  // keep S nonempty
  return s;
}

VerifyRow pinsker_instance(Rng& rng) {
  const int ny = uniform_int(rng, 2, 6);
  Eigen::VectorXd t(2 * ny);
  for (int v = 0; v < 2; ++v) t.segment(v * ny, ny) = 0.5 * random_simplex(rng, ny);
  const auto r = check_pinsker_consequence(JointPMF({"V", "Y"}, {2, ny}, t));
  return make_row(r.lhs, r.rhs, r.holds);
}

VerifyRow dpi3_instance(Rng& rng) {
  CoordinateModel model;
  model.v_dim = uniform_int(rng, 1, 2);
  for (int j = 0; j < model.v_dim; ++j) model.channels.push_back(coordinate_channel(rng, 3));
  const auto q = random_quantizer(rng, static_cast<int>(model.x_states()), uniform_int(rng, 1, 4), coin(rng));
  const auto r = check_dpi_independent(model, q);
  return make_row(r.i_vy, r.bound, r.holds);
}

VerifyRow truncated_instance(Rng& rng, int v_dim, int copies, int max_outputs) {
  CoordinateModel model;
  model.v_dim = v_dim;
  std::vector<std::vector<bool>> subsets;
  for (int j = 0; j < v_dim; ++j) {
    const int nx = uniform_int(rng, 2, max_outputs);
    subsets.push_back(random_subset(rng, nx));
    model.channels.push_back(truncated_channel(rng, nx, subsets.back()));
  }
  std::int64_t rows = 1;
  for (int j = 0; j < v_dim; ++j)
    for (int c = 0; c < copies; ++c) rows *= model.channels[j].outputs();
  const auto q = random_quantizer(rng, static_cast<int>(rows), uniform_int(rng, 1, 4), coin(rng));
  const auto r = check_dpi_truncated(model, copies, subsets, q);
  return make_row(r.i_vy, r.bound, r.holds);
}

VerifyRow tensor_instance(Rng& rng) {
  CoordinateModel model;
  model.v_dim = uniform_int(rng, 1, 2);
  for (int j = 0; j < model.v_dim; ++j)
    model.channels.push_back(random_tilted_channel(rng, 2, 2, uniform(rng, 0.05, 2.0)));
  const int m = uniform_int(rng, 1, 3);
  std::vector<Eigen::MatrixXd> qs;
  for (int i = 0; i < m; ++i) qs.push_back(random_quantizer(rng, static_cast<int>(model.x_states()), 2, coin(rng)));
  const auto r = check_tensorization(model, qs);
  return make_row(r.i_joint, r.sum_i, r.holds);
}

VerifyRow chain_instance(Rng& rng) {
  const auto r = check_information_chaining(random_chain_model(rng, uniform_int(rng, 1, 2)));
  return make_row(r.worst_lhs, r.worst_rhs, r.holds);
}

VerifyRow fano_instance(Rng& rng) {
  CoordinateModel model;
  model.v_dim = uniform_int(rng, 2, 4);
  for (int j = 0; j < model.v_dim; ++j)
    model.channels.push_back(random_tilted_channel(rng, 2, uniform_int(rng, 2, 3), uniform(rng, 0.1, 3.0)));
  const double t = uniform_int(rng, 0, model.v_dim - 1);
  const auto r = check_fano_reduction(model, t, uniform(rng, 0.05, 1.0));
  // Report whichever of the testing and estimation inequalities is tighter.
  if (r.min_error - r.fano_bound <= r.bayes_risk - r.risk_bound) return make_row(r.fano_bound, r.min_error, r.holds);
  return make_row(r.risk_bound, r.bayes_risk, r.holds);
}

VerifyRow markov_instance(Rng& rng) {
  const int nv = uniform_int(rng, 2, 4), nx = uniform_int(rng, 2, 5), ny = uniform_int(rng, 2, 4);
  const FinitePMF prior(random_simplex(rng, nv));
  const ChannelSpec vx(random_quantizer(rng, nv, nx, false));
  const ChannelSpec xy(random_quantizer(rng, nx, ny, coin(rng)));
  const auto r = check_markov_dpi(prior, vx, xy);
  return make_row(r.i_vy, r.i_vx, r.holds);
}

}  // namespace

Eigen::VectorXd random_simplex(Rng& rng, int k) {
  Eigen::VectorXd p(k);
  for (int i = 0; i < k; ++i) p(i) = -std::log(1.0 - uniform01(rng)) + 1e-3;
  return p / p.sum();
}

ChannelSpec random_tilted_channel(Rng& rng, int inputs, int outputs, double alpha) {
  if (inputs < 1 || outputs < 1 || !(alpha >= 0)) throw std::invalid_argument("random_tilted_channel: bad shape");
  const Eigen::VectorXd base = random_simplex(rng, outputs);
  Eigen::MatrixXd rows(inputs, outputs);
  for (int v = 0; v < inputs; ++v) {
    for (int x = 0; x < outputs; ++x) rows(v, x) = base(x) * std::exp(uniform(rng, -alpha / 4, alpha / 4));
    rows.row(v) /= rows.row(v).sum();
  }
  return ChannelSpec(rows);
}

Eigen::MatrixXd random_quantizer(Rng& rng, int inputs, int outputs, bool deterministic) {
  Eigen::MatrixXd q = Eigen::MatrixXd::Zero(inputs, outputs);
  for (int x = 0; x < inputs; ++x) {
    if (deterministic)
      q(x, uniform_int(rng, 0, outputs - 1)) = 1.0;
    else
      q.row(x) = random_simplex(rng, outputs).transpose();
  }
  return q;
}

JointPMF random_chain_model(Rng& rng, int rounds) {
  if (rounds < 1 || rounds > 2) throw std::invalid_argument("random_chain_model: rounds must be 1 or 2");
  const Eigen::VectorXd pa = random_simplex(rng, 2);
  const Eigen::MatrixXd pb = random_tilted_channel(rng, 2, 2, uniform(rng, 0.1, 2.0)).rows;
  // speaker[r] == 0: A speaks in round r. bit_prob[r](value, history) = P(bit = 1).
  int speaker[2];
  Eigen::MatrixXd bit_prob[2];
  for (int r = 0; r < rounds; ++r) {
    speaker[r] = coin(rng) ? 1 : 0;
    bit_prob[r] = Eigen::MatrixXd(2, 2);
    for (int v = 0; v < 2; ++v)
      for (int h = 0; h < 2; ++h) bit_prob[r](v, h) = uniform(rng, 0.02, 0.98);
  }
  const int nc = rounds == 1 ? 2 : 4;
  const Eigen::MatrixXd pd = random_quantizer(rng, 2 * nc, 2, false);  // row b * nc + c

  Eigen::VectorXd t(2 * 2 * nc * 2);
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b)
      for (int c = 0; c < nc; ++c) {
        double pc = 1.0;
        int history = 0;
        for (int r = 0; r < rounds; ++r) {
          const int bit = (c >> (rounds - 1 - r)) & 1;
          const double p1 = bit_prob[r](speaker[r] == 0 ? a : b, history);
          pc *= bit ? p1 : 1.0 - p1;
          history = bit;
        }
        for (int d = 0; d < 2; ++d)
          t(((a * 2 + b) * nc + c) * 2 + d) = pa(a) * pb(a, b) * pc * pd(b * nc + c, d);
      }
  t /= t.sum();
  return JointPMF({"A", "B", "C", "D"}, {2, 2, nc, 2}, t);
}

const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names = {"dpi3", "dpi5", "dpi7", "chain", "tensor", "pinsker", "fano", "dpi"};
  return names;
}

bool is_suite(const std::string& name) {
  const auto& n = suite_names();
  return std::find(n.begin(), n.end(), name) != n.end();
}

std::uint64_t instance_seed(const std::string& suite, std::uint64_t seed, int i) {
  return derive_seed(seed, {fnv1a(suite), static_cast<std::uint64_t>(i)});
}

VerifyRow run_instance(const std::string& suite, std::uint64_t seed) {
  Rng rng(seed);
  VerifyRow row;
  if (suite == "pinsker")
    row = pinsker_instance(rng);
  else if (suite == "dpi3")
    row = dpi3_instance(rng);
  else if (suite == "dpi5")
    row = truncated_instance(rng, uniform_int(rng, 1, 2), 1, 4);
  else if (suite == "dpi7")
    row = truncated_instance(rng, 1, uniform_int(rng, 2, 3), 3);
  else if (suite == "tensor")
    row = tensor_instance(rng);
  else if (suite == "chain")
    row = chain_instance(rng);
  else if (suite == "fano")
    row = fano_instance(rng);
  else if (suite == "dpi")
    row = markov_instance(rng);
  else
    throw std::invalid_argument("unknown suite: " + suite);
  row.suite = suite;
  row.seed = seed;
  return row;
}

std::vector<VerifyRow> run_suite(const std::string& suite, int count, std::uint64_t seed, int threads) {
  if (!is_suite(suite)) throw std::invalid_argument("unknown suite: " + suite);
  if (count < 0) throw std::invalid_argument("instance count must be nonnegative");
  std::vector<VerifyRow> rows(static_cast<std::size_t>(count));
  parallel_for(count, threads, [&](int i) { rows[static_cast<std::size_t>(i)] = run_instance(suite, instance_seed(suite, seed, i)); });
  return rows;
}

std::string verify_csv_header() { return "suite,seed,lhs,rhs,slack,holds"; }

std::string to_csv(const VerifyRow& row) {
  return csv::join({row.suite, std::to_string(row.seed), csv::num(row.lhs), csv::num(row.rhs), csv::num(row.slack),
                    row.holds ? "1" : "0"});
}

}  // namespace dmest
