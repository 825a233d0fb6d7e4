#include "dmest/protocols.hpp"

#include <algorithm>
#include <cmath>

#include "dmest/csv.hpp"
#include "dmest/parallel.hpp"

namespace dmest {
namespace {

void check_location_samples(const SampleSet& s) {
  if (s.m < 1 || s.n < 1 || s.d < 1 || static_cast<int>(s.blocks.size()) != s.m)
    throw std::invalid_argument("protocol needs per-machine d x n sample blocks");
  for (const auto& b : s.blocks)
    if (b.rows() != s.d || b.cols() != s.n)
      throw std::invalid_argument("sample block has inconsistent shape");
}

void check_response_samples(const std::vector<Eigen::MatrixXd>& designs, const SampleSet& s) {
  if (s.responses.size() != designs.size())
    throw std::invalid_argument("one response vector per design is required");
  for (std::size_t i = 0; i < designs.size(); ++i)
    if (s.responses[i].size() != designs[i].rows())
      throw std::invalid_argument("response length does not match design rows");
}

// Encodes every coordinate of `v` with `spec` into one payload.
BitString encode_vector(const Eigen::VectorXd& v, const QuantizerSpec& spec) {
  BitString out;
  for (Eigen::Index j = 0; j < v.size(); ++j) out.push_uint(quantize(v(j), spec), spec.bits);
  return out;
}

Eigen::VectorXd decode_vector(const BitString& payload, Eigen::Index d, const QuantizerSpec& spec) {
  Eigen::VectorXd v(d);
  std::size_t pos = 0;
  for (Eigen::Index j = 0; j < d; ++j) v(j) = dequantize(payload.read_uint(pos, spec.bits), spec);
  return v;
}

Eigen::VectorXd least_squares(const Eigen::MatrixXd& a, const Eigen::VectorXd& y) {
  const Eigen::MatrixXd gram = a.transpose() * a;
  Eigen::LLT<Eigen::MatrixXd> llt(gram);
  if (llt.info() != Eigen::Success) throw DegenerateDesignError("local Gram matrix is singular");
  return llt.solve(a.transpose() * y);
}

// Quantize-and-average over machines' local estimates in [-1, 1]^d.
ProtocolOutput average_local_estimates(const std::vector<Eigen::VectorXd>& local, int m, int n) {
  const auto d = local.front().size();
  const QuantizerSpec q{-1.0, 1.0, regression_bits_per_coordinate(m, n), RoundingMode::round_nearest};
  ProtocolOutput out;
  out.transcript.kind = ProtocolKind::independent;
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(d);
  for (int i = 0; i < m; ++i) {
    const Eigen::VectorXd clipped = local[i].cwiseMax(-1.0).cwiseMin(1.0);
    Message msg{i + 1, 1, encode_vector(clipped, q)};
    sum += decode_vector(msg.payload, d, q);
    out.transcript.append(std::move(msg));
  }
  out.theta_hat = sum / static_cast<double>(m);
  out.metadata["bits_per_coordinate"] = q.bits;
  out.metadata["nominal_bits_per_machine"] =
      std::ceil(static_cast<double>(d) * std::log2(static_cast<double>(m) * n));
  return out;
}

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

}  // namespace

ProtocolOutput single_machine_quantized_mean(std::span<const double> x, int budget_bits) {
  if (x.empty()) throw std::invalid_argument("single_mean: no samples");
  if (budget_bits < 1) throw std::invalid_argument("single_mean: budget must be at least one bit");
  double sum = 0.0;
  for (double v : x) {
    if (!(v >= 0.0 && v <= 1.0)) throw std::invalid_argument("single_mean: sample outside [0, 1]");
    sum += v;
  }
  const QuantizerSpec q{0.0, 1.0, budget_bits, RoundingMode::round_nearest};
  BitString payload;
  payload.push_uint(quantize(sum / static_cast<double>(x.size()), q), budget_bits);
  std::size_t pos = 0;
  ProtocolOutput out;
  out.theta_hat = Eigen::VectorXd::Constant(1, dequantize(payload.read_uint(pos, budget_bits), q));
  out.transcript.append(Message{1, 1, std::move(payload)});
  return out;
}

int gaussian_bits_per_machine(int d, int m, int n, double sigma) {
  const double half = 1.0 + sigma / std::sqrt(static_cast<double>(n));
  const double eps = sigma * sigma / (static_cast<double>(m) * n);
  return d * bits_for_accuracy(-half, half, eps);
}

ProtocolOutput gaussian_quantized_average(const SampleSet& samples, double sigma) {
  check_location_samples(samples);
  if (!(sigma > 0)) throw std::invalid_argument("gauss_qavg: sigma must be positive");
  const int m = samples.m, n = samples.n, d = samples.d;
  const double half = 1.0 + sigma / std::sqrt(static_cast<double>(n));
  const QuantizerSpec q{-half, half,
                        bits_for_accuracy(-half, half, sigma * sigma / (static_cast<double>(m) * n)),
                        RoundingMode::round_nearest};
  ProtocolOutput out;
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(d);
  for (int i = 0; i < m; ++i) {
    const Eigen::VectorXd local = samples.blocks[i].rowwise().mean().cwiseMax(-half).cwiseMin(half);
    Message msg{i + 1, 1, encode_vector(local, q)};
    sum += decode_vector(msg.payload, d, q);
    out.transcript.append(std::move(msg));
  }
  out.theta_hat = sum / static_cast<double>(m);
  out.metadata["bits_per_coordinate"] = q.bits;
  return out;
}

ProtocolOutput onebit_bounded_mean(const SampleSet& samples, std::uint64_t seed) {
  check_location_samples(samples);
  if (samples.n != 1) throw std::invalid_argument("onebit: each machine must hold one observation");
  const int m = samples.m, d = samples.d;
  ProtocolOutput out;
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(d);
  for (int i = 0; i < m; ++i) {
    const auto& x = samples.blocks[i];
    Rng rng = make_rng(seed, {static_cast<std::uint64_t>(i + 1)});
    BitString payload;
    for (int j = 0; j < d; ++j) {
      const double v = x(j, 0);
      if (!(v >= -1.0 && v <= 1.0)) throw std::invalid_argument("onebit: entry outside [-1, 1]");
      payload.push_bit(uniform01(rng) < (1.0 + v) / 2.0);
    }
    for (int j = 0; j < d; ++j) sum(j) += payload[j] ? 1.0 : -1.0;
    out.transcript.append(Message{i + 1, 1, std::move(payload)});
  }
  out.theta_hat = sum / static_cast<double>(m);
  return out;
}

UniformMinRun run_uniform_min(const SampleSet& samples, const UniformMinOptions& options) {
  check_location_samples(samples);
  const int m = samples.m, n = samples.n, d = samples.d;
  const double mn = static_cast<double>(m) * n;
  const QuantizerSpec q{-2.0, 2.0, bits_for_accuracy(-2.0, 2.0, 1.0 / (mn * mn)),
                        RoundingMode::round_down};
  const int index_bits = ceil_log2(static_cast<std::uint64_t>(d));

  UniformMinRun run;
  run.value_bits = q.bits;
  run.improvements.assign(m, {});
  ProtocolOutput& out = run.output;
  out.transcript.kind = ProtocolKind::interactive;

  const Eigen::VectorXd first = samples.blocks[0].rowwise().minCoeff();
  Eigen::VectorXd s(d);
  if (options.quantize) {
    Message msg{1, 1, encode_vector(first, q)};
    s = decode_vector(msg.payload, d, q);
    out.transcript.append(std::move(msg));
  } else {
    s = first;
    out.transcript.append(Message{1, 1, {}});
  }

  for (int i = 1; i < m; ++i) {
    const Eigen::VectorXd local = samples.blocks[i].rowwise().minCoeff();
    std::vector<int> improved;
    std::vector<std::uint64_t> values;
    for (int j = 0; j < d; ++j) {
      if (local(j) < s(j)) {
        improved.push_back(j);
        values.push_back(options.quantize ? quantize(local(j), q) : 0);
      }
    }
    run.improvements[i] = improved;
    if (improved.empty()) continue;
    if (options.quantize) {
      Message msg{i + 1, i + 1, encode_improvement_message(improved, values, d, q.bits)};
      const auto decoded = decode_improvement_message(msg.payload, d, q.bits);
      for (std::size_t k = 0; k < decoded.indices.size(); ++k)
        s(decoded.indices[k]) = dequantize(decoded.values[k], q);
      out.transcript.append(std::move(msg));
    } else {
      BitString payload;
      for (int j : improved) {
        payload.push_uint(static_cast<std::uint64_t>(j), index_bits);
        s(j) = local(j);
      }
      out.transcript.append(Message{i + 1, i + 1, std::move(payload)});
    }
  }
  run.fusion_state = s;
  out.theta_hat = s.array() + 1.0;
  out.metadata["value_bits"] = q.bits;
  return run;
}

ProtocolOutput uniform_interactive_min(const SampleSet& samples) {
  return run_uniform_min(samples).output;
}

int regression_bits_per_coordinate(int m, int n) {
  return bits_for_accuracy(-1.0, 1.0, 1.0 / (static_cast<double>(m) * n));
}

ProtocolOutput regression_local_average(const RegressionSpec& spec, const SampleSet& responses) {
  check_response_samples(spec.designs, responses);
  const int m = static_cast<int>(spec.designs.size());
  const int n = static_cast<int>(spec.designs.front().rows());
  std::vector<Eigen::VectorXd> local;
  local.reserve(m);
  for (int i = 0; i < m; ++i) local.push_back(least_squares(spec.designs[i], responses.responses[i]));
  return average_local_estimates(local, m, n);
}

ProtocolOutput probit_local_average(const ProbitSpec& spec, const SampleSet& responses) {
  check_response_samples(spec.designs, responses);
  const int m = static_cast<int>(spec.designs.size());
  const int n = static_cast<int>(spec.designs.front().rows());
  std::vector<Eigen::VectorXd> local;
  local.reserve(m);
  int flagged = 0;
  for (int i = 0; i < m; ++i) {
    auto fit = probit_mle(spec.designs[i], responses.responses[i]);
    if (fit.separated) ++flagged;
    local.push_back(std::move(fit.theta));
  }
  auto out = average_local_estimates(local, m, n);
  out.flagged = flagged;
  return out;
}

Eigen::VectorXd centralized_baseline(const ProblemSpec& problem, const SampleSet& pooled) {
  auto pooled_designs = [&](const std::vector<Eigen::MatrixXd>& designs) {
    check_response_samples(designs, pooled);
    Eigen::Index rows = 0;
    for (const auto& a : designs) rows += a.rows();
    Eigen::MatrixXd a(rows, designs.front().cols());
    Eigen::VectorXd y(rows);
    Eigen::Index r = 0;
    for (std::size_t i = 0; i < designs.size(); ++i) {
      a.middleRows(r, designs[i].rows()) = designs[i];
      y.segment(r, designs[i].rows()) = pooled.responses[i];
      r += designs[i].rows();
    }
    return std::pair{a, y};
  };
  return std::visit(
      overloaded{
          [&](const UniformLocationSpec&) -> Eigen::VectorXd {
            check_location_samples(pooled);
            Eigen::VectorXd mins = Eigen::VectorXd::Constant(pooled.d, std::numeric_limits<double>::infinity());
            for (const auto& b : pooled.blocks) mins = mins.cwiseMin(b.rowwise().minCoeff());
            return mins.array() + 1.0;
          },
          [&](const RegressionSpec& s) -> Eigen::VectorXd {
            auto [a, y] = pooled_designs(s.designs);
            return least_squares(a, y);
          },
          [&](const ProbitSpec& s) -> Eigen::VectorXd {
            auto [a, y] = pooled_designs(s.designs);
            auto fit = probit_mle(a, y);
            return fit.separated ? fit.theta.cwiseMax(-1.0).cwiseMin(1.0).eval() : fit.theta;
          },
          [&](const auto&) -> Eigen::VectorXd {
            check_location_samples(pooled);
            Eigen::VectorXd sum = Eigen::VectorXd::Zero(pooled.d);
            for (const auto& b : pooled.blocks) sum += b.rowwise().sum();
            return sum / (static_cast<double>(pooled.m) * pooled.n);
          }},
      problem);
}

const char* to_string(ProtocolId id) {
  switch (id) {
    case ProtocolId::single_mean: return "single_mean";
    case ProtocolId::gauss_qavg: return "gauss_qavg";
    case ProtocolId::onebit: return "onebit";
    case ProtocolId::uniform_min: return "uniform_min";
    case ProtocolId::regress_avg: return "regress_avg";
    case ProtocolId::probit_avg: return "probit_avg";
    case ProtocolId::centralized: return "centralized";
  }
  return "?";
}

std::optional<ProtocolId> parse_protocol_id(const std::string& s) {
  for (auto id : {ProtocolId::single_mean, ProtocolId::gauss_qavg, ProtocolId::onebit,
                  ProtocolId::uniform_min, ProtocolId::regress_avg, ProtocolId::probit_avg,
                  ProtocolId::centralized})
    if (s == to_string(id)) return id;
  return std::nullopt;
}

ProtocolOutput run_protocol(const ProtocolConfig& config, const ProblemSpec& problem,
                            const SampleSet& samples, std::uint64_t protocol_seed) {
  switch (config.id) {
    case ProtocolId::single_mean: {
      if (samples.m != 1 || samples.d != 1)
        throw std::invalid_argument("single_mean needs one machine and d = 1");
      const int budget = config.budget_bits > 0
                             ? config.budget_bits
                             : std::max(1, ceil_log2(static_cast<std::uint64_t>(samples.n)));
      const auto& row = samples.blocks[0];
      return single_machine_quantized_mean(std::span<const double>(row.data(), row.size()), budget);
    }
    case ProtocolId::gauss_qavg: {
      const auto* g = std::get_if<GaussianLocationSpec>(&problem);
      if (!g) throw std::invalid_argument("gauss_qavg needs the gaussian family");
      return gaussian_quantized_average(samples, g->sigma);
    }
    case ProtocolId::onebit:
      return onebit_bounded_mean(samples, protocol_seed);
    case ProtocolId::uniform_min:
      return uniform_interactive_min(samples);
    case ProtocolId::regress_avg: {
      const auto* r = std::get_if<RegressionSpec>(&problem);
      if (!r) throw std::invalid_argument("regress_avg needs the regression family");
      return regression_local_average(*r, samples);
    }
    case ProtocolId::probit_avg: {
      const auto* p = std::get_if<ProbitSpec>(&problem);
      if (!p) throw std::invalid_argument("probit_avg needs the probit family");
      return probit_local_average(*p, samples);
    }
    case ProtocolId::centralized: {
      ProtocolOutput out;
      out.theta_hat = centralized_baseline(problem, samples);
      return out;
    }
  }
  throw std::invalid_argument("unknown protocol");
}

std::string RiskReport::csv_header() {
  return "mse_mean,mse_stderr,trials,bits_mean,bits_max,protocol_kind,flagged_trials";
}

std::string RiskReport::csv_row() const {
  return csv::join({csv::num(mse_mean), csv::num(mse_stderr), std::to_string(trials),
                    csv::num(bits_mean), std::to_string(bits_max), to_string(kind),
                    std::to_string(flagged_trials)});
}

RiskReport estimate_risk(const ProtocolConfig& config, const ProblemSpec& problem, int m, int n,
                         int trials, std::uint64_t seed, int threads) {
  if (trials < 2) throw std::invalid_argument("estimate_risk: need at least two trials");
  validate(problem);
  const Eigen::VectorXd theta = true_parameter(problem);

  struct Trial {
    double sq_error = 0.0;
    std::uint64_t bits = 0;
    int flagged = 0;
    ProtocolKind kind = ProtocolKind::independent;
    Eigen::VectorXd theta_hat;
  };
  std::vector<Trial> results(static_cast<std::size_t>(trials));

  auto run_trial = [&](int t) {
    const auto tag = static_cast<std::uint64_t>(t);
    const SampleSet data = sample(problem, m, n, derive_seed(seed, {tag, 0}));
    auto out = run_protocol(config, problem, data, derive_seed(seed, {tag, 1}));
    out.transcript.validate(data.m);
    Trial& r = results[static_cast<std::size_t>(t)];
    r.sq_error = (out.theta_hat - theta).squaredNorm();
    r.bits = transcript_total_bits(out.transcript);
    r.flagged = out.flagged;
    r.kind = out.transcript.kind;
    r.theta_hat = std::move(out.theta_hat);
  };

  parallel_for(trials, threads, run_trial);

  // Welford accumulation in trial order: independent of thread count, and
  // exactly zero spread for constant inputs.
  RiskReport rep;
  rep.trials = trials;
  const auto d = theta.size();
  double mean = 0.0, m2 = 0.0, bits_sum = 0.0;
  Eigen::VectorXd th_mean = Eigen::VectorXd::Zero(d), th_m2 = Eigen::VectorXd::Zero(d);
  for (int t = 0; t < trials; ++t) {
    const auto& r = results[static_cast<std::size_t>(t)];
    const double k = t + 1;
    const double delta = r.sq_error - mean;
    mean += delta / k;
    m2 += delta * (r.sq_error - mean);
    const Eigen::VectorXd dv = r.theta_hat - th_mean;
    th_mean += dv / k;
    th_m2 += dv.cwiseProduct(r.theta_hat - th_mean);
    bits_sum += static_cast<double>(r.bits);
    rep.bits_max = std::max(rep.bits_max, r.bits);
    if (r.flagged > 0) ++rep.flagged_trials;
    if (r.kind == ProtocolKind::interactive) rep.kind = ProtocolKind::interactive;
  }
  rep.mse_mean = mean;
  rep.mse_stderr = std::sqrt(m2 / (trials - 1)) / std::sqrt(static_cast<double>(trials));
  rep.bits_mean = bits_sum / trials;
  rep.theta_hat_mean = th_mean;
  rep.theta_hat_stderr = (th_m2 / (trials - 1)).cwiseSqrt() / std::sqrt(static_cast<double>(trials));
  return rep;
}

}  // namespace dmest
