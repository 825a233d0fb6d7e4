#include "dmest/infotheory.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <map>
#include <mutex>
#include <limits>
#include <numeric>

namespace dmest {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kStructTol = 1e-10;

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

void check_distribution(const Eigen::Ref<const Eigen::VectorXd>& p, const char* what) {
  if (p.size() == 0) throw std::invalid_argument(std::string(what) + ": empty distribution");
  if (!p.allFinite() || (p.array() < 0.0).any())
    throw std::invalid_argument(std::string(what) + ": negative or non-finite probability");
  if (std::abs(p.sum() - 1.0) > kNormTol) throw std::invalid_argument(std::string(what) + ": not normalized");
}

void check_states(double states) {
  if (states > static_cast<double>(kMaxJointStates))
    throw EnumerationTooLargeError("enumeration exceeds 2^20 joint states");
}

// Mutual information of a row-major |A| x |B| joint table.
double table_mi(const RowMatrix& pab) {
  const Eigen::VectorXd pa = pab.rowwise().sum();
  const Eigen::RowVectorXd pb = pab.colwise().sum();
  double mi = 0.0;
  for (Eigen::Index a = 0; a < pab.rows(); ++a)
    for (Eigen::Index b = 0; b < pab.cols(); ++b) {
      const double p = pab(a, b);
      if (p > 0.0) mi += p * std::log(p / (pa(a) * pb(b)));
    }
  return std::max(mi, 0.0);
}

double binary_entropy(double p) {
  double h = 0.0;
  if (p > 0.0) h -= p * std::log(p);
  if (p < 1.0) h -= (1.0 - p) * std::log1p(-p);
  return h;
}

// P(x | v) for a list of sample slots; slot s reads coordinate vbit[s] of v
// through channel ch[s]. Slot 0 is the slowest index of the flattened x.
Eigen::MatrixXd slot_likelihood(int v_dim, const std::vector<const ChannelSpec*>& ch, const std::vector<int>& vbit) {
  const std::int64_t nv = std::int64_t{1} << v_dim;
  std::int64_t nx = 1;
  for (const auto* c : ch) nx *= c->outputs();
  check_states(static_cast<double>(nv) * static_cast<double>(nx));
  Eigen::MatrixXd l(nv, nx);
  std::vector<int> digit(ch.size());
  for (std::int64_t v = 0; v < nv; ++v) {
    std::fill(digit.begin(), digit.end(), 0);
    for (std::int64_t x = 0; x < nx; ++x) {
      double p = 1.0;
      for (std::size_t s = 0; s < ch.size(); ++s) p *= ch[s]->rows((v >> vbit[s]) & 1, digit[s]);
      l(v, x) = p;
      for (std::size_t s = ch.size(); s-- > 0;) {
        if (++digit[s] < ch[s]->outputs()) break;
        digit[s] = 0;
      }
    }
  }
  return l;
}

void check_quantizer(const Eigen::MatrixXd& q, std::int64_t rows) {
  if (q.rows() != rows) throw std::invalid_argument("quantizer must have one row per X state");
  for (Eigen::Index r = 0; r < q.rows(); ++r) check_distribution(q.row(r).transpose(), "quantizer row");
}

}  // namespace

FinitePMF::FinitePMF(Eigen::VectorXd probs) : p(std::move(probs)) { check_distribution(p, "FinitePMF"); }

FinitePMF FinitePMF::uniform(Eigen::Index k) {
  if (k < 1) throw std::invalid_argument("uniform needs k >= 1");
  return FinitePMF(Eigen::VectorXd::Constant(k, 1.0 / static_cast<double>(k)));
}

JointPMF::JointPMF(std::vector<std::string> l, std::vector<int> s, Eigen::VectorXd t)
    : labels(std::move(l)), sizes(std::move(s)), table(std::move(t)) {
  if (labels.size() != sizes.size()) throw std::invalid_argument("JointPMF: label/size mismatch");
  std::int64_t total = 1;
  for (int k : sizes) {
    if (k < 1) throw std::invalid_argument("JointPMF: axis sizes must be positive");
    total *= k;
  }
  if (total != table.size()) throw std::invalid_argument("JointPMF: table size mismatch");
  check_distribution(table, "JointPMF");
}

int JointPMF::axis(const std::string& label) const {
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (labels[i] == label) return static_cast<int>(i);
  throw std::invalid_argument("JointPMF: no axis " + label);
}

JointPMF JointPMF::marginal(const std::vector<int>& keep) const {
  const int r = rank();
  std::vector<std::int64_t> out_stride(r, 0);
  std::vector<int> out_sizes;
  std::vector<std::string> out_labels;
  std::int64_t out_total = 1;
  for (int k : keep) {
    if (k < 0 || k >= r) throw std::invalid_argument("JointPMF::marginal: axis out of range");
    if (out_stride[k] != 0) throw std::invalid_argument("JointPMF::marginal: repeated axis");
    out_stride[k] = -1;
    out_sizes.push_back(sizes[k]);
    out_labels.push_back(labels[k]);
  }
  for (std::size_t i = keep.size(); i-- > 0;) {
    out_stride[keep[i]] = out_total;
    out_total *= sizes[keep[i]];
  }
  Eigen::VectorXd out = Eigen::VectorXd::Zero(out_total);
  std::vector<int> digit(r, 0);
  std::int64_t pos = 0;
  for (Eigen::Index flat = 0; flat < table.size(); ++flat) {
    out(pos) += table(flat);
    for (int a = r; a-- > 0;) {
      pos += out_stride[a];
      if (++digit[a] < sizes[a]) break;
      pos -= out_stride[a] * sizes[a];
      digit[a] = 0;
    }
  }
  JointPMF m;
  m.labels = std::move(out_labels);
  m.sizes = std::move(out_sizes);
  m.table = std::move(out);
  return m;
}

FinitePMF JointPMF::marginal(int axis) const {
  FinitePMF p;
  p.p = marginal(std::vector<int>{axis}).table;
  return p;
}

ChannelSpec::ChannelSpec(Eigen::MatrixXd table) : rows(std::move(table)) {
  if (rows.rows() == 0) throw std::invalid_argument("ChannelSpec: no rows");
  for (Eigen::Index r = 0; r < rows.rows(); ++r) check_distribution(rows.row(r).transpose(), "ChannelSpec row");
}

ChannelSpec ChannelSpec::two_point(double delta) {
  if (!(delta >= 0.0 && delta <= 1.0)) throw std::invalid_argument("two_point needs delta in [0, 1]");
  Eigen::MatrixXd t(2, 2);
  t << (1 + delta) / 2, (1 - delta) / 2, (1 - delta) / 2, (1 + delta) / 2;
  return ChannelSpec(t);
}

double entropy(const Eigen::VectorXd& p) {
  double h = 0.0;
  for (double x : p)
    if (x > 0.0) h -= x * std::log(x);
  return h;
}

double entropy(const FinitePMF& p) { return entropy(p.p); }

double kl(const FinitePMF& p, const FinitePMF& q) {
  if (p.size() != q.size()) throw std::invalid_argument("kl: shape mismatch");
  double d = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    if (p.p(i) <= 0.0) continue;
    if (q.p(i) <= 0.0) return kInf;
    d += p.p(i) * std::log(p.p(i) / q.p(i));
  }
  return std::max(d, 0.0);
}

double tv(const Eigen::VectorXd& p, const Eigen::VectorXd& q) {
  if (p.size() != q.size()) throw std::invalid_argument("tv: shape mismatch");
  return std::min(1.0, 0.5 * (p - q).lpNorm<1>());
}

double tv(const FinitePMF& p, const FinitePMF& q) { return tv(p.p, q.p); }

double mutual_information(const JointPMF& j, const std::vector<int>& a, const std::vector<int>& b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("mutual_information: empty axis group");
  std::vector<int> keep(a);
  keep.insert(keep.end(), b.begin(), b.end());
  const JointPMF m = j.marginal(keep);
  std::int64_t na = 1;
  for (std::size_t i = 0; i < a.size(); ++i) na *= m.sizes[i];
  const Eigen::Index nb = m.table.size() / na;
  return table_mi(Eigen::Map<const RowMatrix>(m.table.data(), na, nb));
}

double mutual_information(const JointPMF& j, int a, int b) {
  return mutual_information(j, std::vector<int>{a}, std::vector<int>{b});
}

std::uint64_t hamming_neighborhood_size(int d, double t) {
  if (d < 0 || d > 62) throw std::invalid_argument("hamming_neighborhood_size: d must be in [0, 62]");
  if (!(t >= 0.0)) throw std::invalid_argument("hamming_neighborhood_size: t must be nonnegative");
  const int top = static_cast<int>(std::min<double>(std::floor(t), d));
  std::uint64_t total = 0, binom = 1;
  for (int k = 0; k <= top; ++k) {
    total += binom;
    binom = binom * static_cast<std::uint64_t>(d - k) / static_cast<std::uint64_t>(k + 1);
  }
  return total;
}

double fano_variant_lower(int d, double t, double info_nats) {
  const double log_ratio = d * std::log(2.0) - std::log(static_cast<double>(hamming_neighborhood_size(d, t)));
  if (!(log_ratio > 0.0)) throw std::invalid_argument("fano_variant_lower: need 2^d > N_t");
  if (!(info_nats >= 0.0)) throw std::invalid_argument("fano_variant_lower: information must be nonnegative");
  return std::max(0.0, 1.0 - (info_nats + std::log(2.0)) / log_ratio);
}

double estimation_to_testing_lower(double delta, double t, double test_error_prob) {
  if (!(delta >= 0.0) || !(t >= 0.0) || !(test_error_prob >= 0.0 && test_error_prob <= 1.0))
    throw std::invalid_argument("estimation_to_testing_lower: bad arguments");
  return delta * delta * (std::floor(t) + 1.0) * test_error_prob;
}

double lecam_testing_error(const FinitePMF& p1, const FinitePMF& p2) {
  if (p1.size() != p2.size()) throw std::invalid_argument("lecam_testing_error: shape mismatch");
  return 0.5 - 0.5 * tv(p1, p2);
}

double check_likelihood_ratio(const ChannelSpec& channel, const std::vector<bool>* mask) {
  if (mask && static_cast<int>(mask->size()) != channel.outputs())
    throw std::invalid_argument("check_likelihood_ratio: mask size mismatch");
  double worst = 1.0;
  for (int x = 0; x < channel.outputs(); ++x) {
    if (mask && !(*mask)[x]) continue;
    const double hi = channel.rows.col(x).maxCoeff();
    const double lo = channel.rows.col(x).minCoeff();
    if (lo <= 0.0) {
      if (hi > 0.0) return kInf;
      continue;
    }
    worst = std::max(worst, hi / lo);
  }
  return std::log(worst);
}

PinskerReport check_pinsker_consequence(const JointPMF& j, int v_axis, int y_axis) {
  const JointPMF vy = j.marginal(std::vector<int>{v_axis, y_axis});
  if (vy.sizes[0] != 2) throw std::invalid_argument("check_pinsker_consequence: V must be binary");
  const Eigen::Map<const RowMatrix> t(vy.table.data(), 2, vy.sizes[1]);
  PinskerReport r;
  if (t.row(0).sum() <= 0.0 || t.row(1).sum() <= 0.0) {
    r.holds = true;  // V is degenerate; both conditionals cannot be formed
    return r;
  }
  const Eigen::VectorXd p0 = t.row(0).transpose() / t.row(0).sum();
  const Eigen::VectorXd p1 = t.row(1).transpose() / t.row(1).sum();
  const double d = tv(p0, p1);
  r.lhs = d * d;
  r.rhs = 2.0 * table_mi(t);
  r.holds = r.lhs <= r.rhs + kCheckSlack;
  return r;
}

const ChannelSpec& CoordinateModel::channel(int j) const {
  if (channels.empty()) throw std::invalid_argument("CoordinateModel: no channels");
  if (channels.size() == 1) return channels.front();
  if (static_cast<int>(channels.size()) != v_dim) throw std::invalid_argument("CoordinateModel: need 1 or v_dim channels");
  return channels[static_cast<std::size_t>(j)];
}

std::int64_t CoordinateModel::x_states() const {
  std::int64_t n = 1;
  for (int j = 0; j < v_dim; ++j) n *= channel(j).outputs();
  return n;
}

Eigen::MatrixXd CoordinateModel::likelihood() const {
  if (v_dim < 1 || v_dim > 20) throw std::invalid_argument("CoordinateModel: v_dim must be in [1, 20]");
  std::vector<const ChannelSpec*> ch;
  std::vector<int> vbit;
  for (int j = 0; j < v_dim; ++j) {
    if (channel(j).inputs() != 2) throw std::invalid_argument("CoordinateModel: channels need two input rows");
    ch.push_back(&channel(j));
    vbit.push_back(j);
  }
  return slot_likelihood(v_dim, ch, vbit);
}

namespace {

// Joint over (V, X, Y) with V uniform on the rows of `likelihood`.
JointPMF vxy_joint(const Eigen::MatrixXd& likelihood, const Eigen::MatrixXd& quantizer) {
  const Eigen::Index nv = likelihood.rows(), nx = likelihood.cols(), ny = quantizer.cols();
  check_states(static_cast<double>(nv) * static_cast<double>(nx) * static_cast<double>(ny));
  Eigen::VectorXd t(nv * nx * ny);
  const double pv = 1.0 / static_cast<double>(nv);
  for (Eigen::Index v = 0; v < nv; ++v)
    for (Eigen::Index x = 0; x < nx; ++x)
      for (Eigen::Index y = 0; y < ny; ++y) t((v * nx + x) * ny + y) = pv * likelihood(v, x) * quantizer(x, y);
  t /= t.sum();
  return JointPMF({"V", "X", "Y"}, {static_cast<int>(nv), static_cast<int>(nx), static_cast<int>(ny)}, t);
}

}  // namespace

DpiReport check_dpi_independent(const CoordinateModel& model, const Eigen::MatrixXd& quantizer) {
  check_states(std::ldexp(static_cast<double>(model.x_states()) * static_cast<double>(quantizer.cols()), model.v_dim));
  const Eigen::MatrixXd l = model.likelihood();
  check_quantizer(quantizer, l.cols());
  const JointPMF j = vxy_joint(l, quantizer);
  DpiReport r;
  r.i_vy = mutual_information(j, 0, 2);
  r.i_xy = mutual_information(j, 1, 2);
  r.i_vx = mutual_information(j, 0, 1);
  for (int c = 0; c < model.v_dim; ++c) r.alpha = std::max(r.alpha, check_likelihood_ratio(model.channel(c)));
  const double k = std::expm1(2.0 * r.alpha);
  r.bound = 2.0 * k * k * r.i_xy;
  r.holds = r.i_vy <= r.bound + kCheckSlack;
  r.classical_holds = r.i_vy <= r.i_vx + kCheckSlack;
  return r;
}

MarkovDpiReport check_markov_dpi(const FinitePMF& prior, const ChannelSpec& v_to_x, const ChannelSpec& x_to_y) {
  if (v_to_x.inputs() != prior.size() || x_to_y.inputs() != v_to_x.outputs())
    throw std::invalid_argument("check_markov_dpi: alphabet mismatch");
  const RowMatrix pvx = prior.p.asDiagonal() * v_to_x.rows;
  const RowMatrix pvy = pvx * x_to_y.rows;
  MarkovDpiReport r;
  r.i_vx = table_mi(pvx);
  r.i_vy = table_mi(pvy);
  r.holds = r.i_vy <= r.i_vx + kCheckSlack;
  return r;
}

TruncatedDpiReport check_dpi_truncated(const CoordinateModel& model, int copies,
                                       const std::vector<std::vector<bool>>& subsets,
                                       const Eigen::MatrixXd& quantizer) {
  if (copies < 1) throw std::invalid_argument("check_dpi_truncated: copies must be positive");
  if (static_cast<int>(subsets.size()) != model.v_dim)
    throw std::invalid_argument("check_dpi_truncated: need one subset per coordinate");
  if (model.v_dim < 1 || model.v_dim > 20) throw std::invalid_argument("check_dpi_truncated: bad v_dim");
  std::vector<const ChannelSpec*> ch;
  std::vector<int> vbit;
  double nx_d = 1.0;
  for (int j = 0; j < model.v_dim; ++j) {
    if (static_cast<int>(subsets[j].size()) != model.channel(j).outputs())
      throw std::invalid_argument("check_dpi_truncated: subset size mismatch");
    for (int c = 0; c < copies; ++c) {
      ch.push_back(&model.channel(j));
      vbit.push_back(j);
      nx_d *= model.channel(j).outputs();
    }
  }
  check_states(std::ldexp(nx_d * static_cast<double>(quantizer.cols()), model.v_dim));
  const Eigen::MatrixXd l = slot_likelihood(model.v_dim, ch, vbit);
  check_quantizer(quantizer, l.cols());
  const JointPMF j = vxy_joint(l, quantizer);

  TruncatedDpiReport r;
  r.i_vy = mutual_information(j, 0, 2);
  r.i_xy = mutual_information(j, 1, 2);
  for (int c = 0; c < model.v_dim; ++c) r.alpha = std::max(r.alpha, check_likelihood_ratio(model.channel(c), &subsets[c]));

  // P(E_j = 1) = sum_x P(x) [all copies of coordinate j in S_j].
  const Eigen::VectorXd px = l.colwise().sum().transpose() / static_cast<double>(l.rows());
  std::vector<double> pe(model.v_dim, 0.0);
  std::vector<int> digit(ch.size(), 0);
  for (Eigen::Index x = 0; x < px.size(); ++x) {
    for (int jj = 0; jj < model.v_dim; ++jj) {
      bool inside = true;
      for (int c = 0; c < copies && inside; ++c) inside = subsets[jj][digit[jj * copies + c]];
      if (inside) pe[jj] += px(x);
    }
    for (std::size_t s = ch.size(); s-- > 0;) {
      if (++digit[s] < ch[s]->outputs()) break;
      digit[s] = 0;
    }
  }
  for (double p : pe) {
    p = std::clamp(p, 0.0, 1.0);
    r.entropy_e += binary_entropy(p);
    r.prob_e_zero += 1.0 - p;
  }
  const double k4 = std::expm1(4.0 * r.alpha), k2 = std::expm1(2.0 * r.alpha);
  const double extra = r.entropy_e + r.prob_e_zero;
  r.bound = 2.0 * k4 * k4 * r.i_xy + extra;
  if (std::isnan(r.bound)) r.bound = kInf;  // infinite alpha with I(X;Y) = 0
  r.holds = r.i_vy <= r.bound + kCheckSlack;
  const double tight = 2.0 * k2 * k2 * r.i_xy + extra;
  r.tighter_constant_holds = std::isnan(tight) || r.i_vy <= tight + kCheckSlack;
  return r;
}

TensorReport check_tensorization(const CoordinateModel& model, const std::vector<Eigen::MatrixXd>& quantizers) {
  if (quantizers.empty()) throw std::invalid_argument("check_tensorization: need at least one machine");
  const Eigen::MatrixXd l = model.likelihood();
  const Eigen::Index nv = l.rows();
  double states = static_cast<double>(nv);
  std::vector<Eigen::MatrixXd> py;  // P(y_i | v)
  std::vector<int> sizes{static_cast<int>(nv)};
  for (const auto& q : quantizers) {
    check_quantizer(q, l.cols());
    py.push_back(l * q);
    states *= static_cast<double>(q.cols());
    sizes.push_back(static_cast<int>(q.cols()));
  }
  check_states(states);

  TensorReport r;
  const double pv = 1.0 / static_cast<double>(nv);
  for (const auto& p : py) r.sum_i += table_mi(pv * p);

  Eigen::VectorXd t(static_cast<Eigen::Index>(states));
  const std::size_t m = py.size();
  std::vector<int> digit(m, 0);
  for (Eigen::Index flat = 0; flat < t.size(); ++flat) {
    const Eigen::Index v = flat / (t.size() / nv);
    double p = pv;
    for (std::size_t i = 0; i < m; ++i) p *= py[i](v, digit[i]);
    t(flat) = p;
    for (std::size_t i = m; i-- > 0;) {
      if (++digit[i] < sizes[i + 1]) break;
      digit[i] = 0;
    }
  }
  t /= t.sum();
  std::vector<std::string> labels{"V"};
  std::vector<int> ys;
  for (std::size_t i = 0; i < m; ++i) {
    labels.push_back("Y" + std::to_string(i + 1));
    ys.push_back(static_cast<int>(i + 1));
  }
  const JointPMF j(labels, sizes, t);
  r.i_joint = mutual_information(j, {0}, ys);
  r.holds = r.i_joint <= r.sum_i + kCheckSlack;
  return r;
}

ChainReport check_information_chaining(const JointPMF& model) {
  if (model.rank() != 4) throw std::invalid_argument("check_information_chaining: need axes (A, B, C, D)");
  const int na = model.sizes[0], nb = model.sizes[1], nc = model.sizes[2], nd = model.sizes[3];
  auto p = [&](int a, int b, int c, int d) { return model.table(((a * nb + b) * nc + c) * nd + d); };

  // Marginals needed below, indexed row-major.
  std::vector<double> pabc(static_cast<std::size_t>(na * nb * nc), 0.0), pbcd(static_cast<std::size_t>(nb * nc * nd), 0.0);
  std::vector<double> pab(static_cast<std::size_t>(na * nb), 0.0), pbc(static_cast<std::size_t>(nb * nc), 0.0);
  for (int a = 0; a < na; ++a)
    for (int b = 0; b < nb; ++b)
      for (int c = 0; c < nc; ++c)
        for (int d = 0; d < nd; ++d) {
          const double q = p(a, b, c, d);
          pabc[(a * nb + b) * nc + c] += q;
          pbcd[(b * nc + c) * nd + d] += q;
          pab[a * nb + b] += q;
          pbc[b * nc + c] += q;
        }

  // D independent of A given (B, C).
  for (int a = 0; a < na; ++a)
    for (int b = 0; b < nb; ++b)
      for (int c = 0; c < nc; ++c) {
        const double bc = pbc[b * nc + c];
        for (int d = 0; d < nd; ++d) {
          const double predicted = bc > 0.0 ? pabc[(a * nb + b) * nc + c] * pbcd[(b * nc + c) * nd + d] / bc : 0.0;
          if (std::abs(p(a, b, c, d) - predicted) > kStructTol)
            throw std::invalid_argument("check_information_chaining: D depends on A given (B, C)");
        }
      }

  // Each C-slice of P(c | a, b) must be rank one in (a, b).
  auto cond = [&](int a, int b, int c) { return pabc[(a * nb + b) * nc + c] / pab[a * nb + b]; };
  for (int c = 0; c < nc; ++c)
    for (int a = 0; a < na; ++a)
      for (int a2 = a + 1; a2 < na; ++a2)
        for (int b = 0; b < nb; ++b)
          for (int b2 = b + 1; b2 < nb; ++b2) {
            if (pab[a * nb + b] <= 0 || pab[a * nb + b2] <= 0 || pab[a2 * nb + b] <= 0 || pab[a2 * nb + b2] <= 0)
              continue;
            const double minor = cond(a, b, c) * cond(a2, b2, c) - cond(a, b2, c) * cond(a2, b, c);
            if (std::abs(minor) > kStructTol)
              throw std::invalid_argument("check_information_chaining: P(C|A,B) does not factor");
          }

  // Likelihood ratio of P(B | A).
  ChainReport r;
  {
    Eigen::MatrixXd rows(na, nb);
    int kept = 0;
    for (int a = 0; a < na; ++a) {
      double pa = 0.0;
      for (int b = 0; b < nb; ++b) pa += pab[a * nb + b];
      if (pa <= 0.0) continue;
      for (int b = 0; b < nb; ++b) rows(kept, b) = pab[a * nb + b] / pa;
      ++kept;
    }
    r.alpha = kept > 0 ? check_likelihood_ratio(ChannelSpec(rows.topRows(kept))) : 0.0;
  }
  const double factor = 2.0 * std::expm1(2.0 * r.alpha);

  r.max_violation = -kInf;
  for (int c = 0; c < nc; ++c) {
    Eigen::VectorXd p_ac = Eigen::VectorXd::Zero(na), p_bc = Eigen::VectorXd::Zero(nb);
    for (int a = 0; a < na; ++a)
      for (int b = 0; b < nb; ++b) {
        p_ac(a) += pabc[(a * nb + b) * nc + c];
        p_bc(b) += pabc[(a * nb + b) * nc + c];
      }
    const double pc = p_ac.sum();
    for (int d = 0; d < nd; ++d) {
      Eigen::VectorXd p_acd = Eigen::VectorXd::Zero(na), p_bcd = Eigen::VectorXd::Zero(nb);
      for (int a = 0; a < na; ++a)
        for (int b = 0; b < nb; ++b) {
          p_acd(a) += p(a, b, c, d);
          p_bcd(b) += p(a, b, c, d);
        }
      const double pcd = p_acd.sum();
      if (pcd <= 0.0) {
        r.skipped += na;
        continue;
      }
      const double dist = tv(Eigen::VectorXd(p_bcd / pcd), Eigen::VectorXd(p_bc / pc));
      for (int a = 0; a < na; ++a) {
        const double given_c = p_ac(a) / pc, given_cd = p_acd(a) / pcd;
        const double lhs = std::abs(given_cd - given_c);
        const double scale = std::min(given_c, given_cd) * dist;
        const double rhs = scale > 0.0 ? factor * scale : 0.0;
        ++r.checked;
        if (lhs - rhs > r.max_violation) {
          r.max_violation = lhs - rhs;
          r.worst_lhs = lhs;
          r.worst_rhs = rhs;
        }
      }
    }
  }
  if (r.checked == 0) r.max_violation = 0.0;
  r.holds = r.max_violation <= kCheckSlack;
  return r;
}

FanoReport check_fano_reduction(const CoordinateModel& model, double t, double delta) {
  const int d = model.v_dim;
  if (!(t >= 0.0) || !(delta >= 0.0)) throw std::invalid_argument("check_fano_reduction: bad t or delta");
  const Eigen::MatrixXd l = model.likelihood();
  const Eigen::Index nv = l.rows(), nx = l.cols();
  check_states(static_cast<double>(nv) * static_cast<double>(nv) * static_cast<double>(nx));
  const RowMatrix pvx = l / static_cast<double>(nv);

  FanoReport r;
  r.info = table_mi(pvx);
  r.fano_bound = fano_variant_lower(d, t, r.info);

  const double radius = std::floor(t);
  double hit = 0.0, risk = 0.0;
  for (Eigen::Index x = 0; x < nx; ++x) {
    const auto col = pvx.col(x);
    double best = 0.0;
    for (Eigen::Index center = 0; center < nv; ++center) {
      double mass = 0.0;
      for (Eigen::Index v = 0; v < nv; ++v)
        if (std::popcount(static_cast<std::uint64_t>(v ^ center)) <= radius) mass += col(v);
      best = std::max(best, mass);
    }
    hit += best;
    const double px = col.sum();
    if (px <= 0.0) continue;
    for (int j = 0; j < d; ++j) {
      double mean = 0.0;  // px * E[V_j | x]
      for (Eigen::Index v = 0; v < nv; ++v) mean += ((v >> j) & 1 ? 1.0 : -1.0) * col(v);
      risk += px - mean * mean / px;
    }
  }
  r.min_error = std::clamp(1.0 - hit, 0.0, 1.0);
  r.bayes_risk = delta * delta * std::max(risk, 0.0);
  r.risk_bound = estimation_to_testing_lower(delta, t, r.min_error);
  r.holds = r.min_error >= r.fano_bound - kCheckSlack && r.bayes_risk >= r.risk_bound - kCheckSlack;
  return r;
}

namespace {

// Physicists' Gauss-Hermite rule (weight e^{-x^2}) by Golub-Welsch, cached per order.
struct HermiteRule {
  Eigen::VectorXd nodes;
  Eigen::VectorXd weights;
};

const HermiteRule& hermite_rule(int order) {
  static std::mutex mu;
  static std::map<int, HermiteRule> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(order);
  if (it != cache.end()) return it->second;
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(order), sub(order - 1);
  for (int k = 1; k < order; ++k) sub(k - 1) = std::sqrt(0.5 * k);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
  es.computeFromTridiagonal(diag, sub);
  HermiteRule rule{es.eigenvalues(), std::sqrt(M_PI) * es.eigenvectors().row(0).transpose().array().square()};
  return cache.emplace(order, std::move(rule)).first->second;
}

double softplus(double u) { return std::max(u, 0.0) + std::log1p(std::exp(-std::abs(u))); }

}  // namespace

double binary_gaussian_mi(double delta, double sigma) {
  if (!(delta >= 0.0) || !(sigma > 0.0) || !std::isfinite(delta) || !std::isfinite(sigma))
    throw std::invalid_argument("binary_gaussian_mi: need delta >= 0, sigma > 0");
  if (delta == 0.0) return 0.0;
  // I = ln 2 - E[softplus(-2 delta X / sigma^2)] with X ~ N(delta, sigma^2).
  auto estimate = [&](int order) {
    const HermiteRule& rule = hermite_rule(order);
    const Eigen::VectorXd& x = rule.nodes;
    const Eigen::VectorXd& w = rule.weights;
    double e = 0.0;
    for (int i = 0; i < order; ++i) {
      const double sample = delta + sigma * std::sqrt(2.0) * x(i);
      e += w(i) * softplus(-2.0 * delta * sample / (sigma * sigma));
    }
    return std::log(2.0) - e / std::sqrt(M_PI);
  };
  double prev = estimate(16);
  for (int order = 32; order <= 1024; order *= 2) {
    const double next = estimate(order);
    if (std::abs(next - prev) < 1e-9) return std::clamp(next, 0.0, std::log(2.0));
    prev = next;
  }
  throw std::runtime_error("binary_gaussian_mi: quadrature did not converge");
}

}  // namespace dmest
