#include "dmest/codec.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace dmest {

void BitString::push_uint(std::uint64_t value, int width) {
  if (width < 0 || width > 64) throw std::invalid_argument("bit field width out of range");
  for (int b = width - 1; b >= 0; --b) bits_.push_back(((value >> b) & 1U) != 0);
}

std::uint64_t BitString::read_uint(std::size_t& pos, int width) const {
  if (width < 0 || width > 64) throw std::invalid_argument("bit field width out of range");
  if (pos + static_cast<std::size_t>(width) > bits_.size())
    throw std::invalid_argument("read past end of bit string");
  std::uint64_t v = 0;
  for (int b = 0; b < width; ++b) v = (v << 1) | (bits_[pos++] ? 1U : 0U);
  return v;
}

std::string BitString::to_hex() const {
  static constexpr char kDigits[] = "0123456789abcdef";
  const std::size_t pad = (4 - bits_.size() % 4) % 4;
  std::string out;
  out.reserve((bits_.size() + pad) / 4);
  unsigned nibble = 0;
  std::size_t filled = pad;
  for (bool bit : bits_) {
    nibble = (nibble << 1) | (bit ? 1U : 0U);
    if (++filled == 4) {
      out.push_back(kDigits[nibble]);
      nibble = 0;
      filled = 0;
    }
  }
  return out;
}

const char* to_string(ProtocolKind kind) {
  return kind == ProtocolKind::independent ? "independent" : "interactive";
}

void Transcript::validate(int m) const {
  std::set<int> seen;
  for (const auto& msg : messages) {
    if (msg.machine < 1 || msg.machine > m)
      throw std::invalid_argument("message machine index out of range");
    if (msg.round < 1) throw std::invalid_argument("message round must be positive");
    if (kind == ProtocolKind::independent) {
      if (msg.round != 1)
        throw std::invalid_argument("independent protocol message outside round 1");
      if (!seen.insert(msg.machine).second)
        throw std::invalid_argument("independent protocol machine sent twice");
    }
  }
}

std::uint64_t transcript_total_bits(const Transcript& t) {
  std::uint64_t total = 0;
  for (const auto& msg : t.messages) total += msg.payload.size();
  return total;
}

Transcript concatenate(const Transcript& a, const Transcript& b) {
  Transcript out = a;
  out.messages.insert(out.messages.end(), b.messages.begin(), b.messages.end());
  if (b.kind == ProtocolKind::interactive) out.kind = ProtocolKind::interactive;
  return out;
}

void QuantizerSpec::validate() const {
  if (!std::isfinite(lo) || !std::isfinite(hi) || !(lo < hi))
    throw std::invalid_argument("quantizer range must satisfy lo < hi");
  if (bits < 0 || bits > 62) throw std::invalid_argument("quantizer bit count out of range");
}

double QuantizerSpec::cell_width() const { return std::ldexp(hi - lo, -bits); }

int ceil_log2(std::uint64_t x) {
  if (x == 0) throw std::invalid_argument("ceil_log2 of zero");
  int b = 0;
  while ((std::uint64_t{1} << b) < x) ++b;
  return b;
}

int bits_for_accuracy(double lo, double hi, double eps) {
  if (!std::isfinite(lo) || !std::isfinite(hi) || !std::isfinite(eps))
    throw std::invalid_argument("bits_for_accuracy: non-finite input");
  if (!(lo < hi) || !(eps > 0)) throw std::invalid_argument("bits_for_accuracy: need lo < hi, eps > 0");
  int b = 0;
  // Division by a power of two is exact, so the comparison is exact too.
  while (std::ldexp(hi - lo, -b) > eps) {
    if (++b > 62) throw std::invalid_argument("bits_for_accuracy: accuracy too fine");
  }
  return b;
}

std::uint64_t quantize(double value, const QuantizerSpec& spec) {
  spec.validate();
  if (!std::isfinite(value)) throw std::invalid_argument("quantize: non-finite value");
  const double v = std::clamp(value, spec.lo, spec.hi);
  const double scaled = std::ldexp((v - spec.lo) / (spec.hi - spec.lo), spec.bits);
  const auto top = spec.cell_count() - 1;
  const double k = std::floor(scaled);
  if (k >= static_cast<double>(top)) return top;
  return static_cast<std::uint64_t>(k);
}

double dequantize(std::uint64_t index, const QuantizerSpec& spec) {
  spec.validate();
  if (index >= spec.cell_count()) throw std::invalid_argument("dequantize: index out of range");
  const double width = spec.cell_width();
  const double left = spec.lo + width * static_cast<double>(index);
  return spec.mode == RoundingMode::round_down ? left : left + 0.5 * width;
}

BitString encode_improvement_message(std::span<const int> indices,
                                     std::span<const std::uint64_t> values, int d,
                                     int value_bits) {
  if (d < 1) throw std::invalid_argument("improvement message: d must be positive");
  if (indices.size() != values.size())
    throw std::invalid_argument("improvement message: index/value length mismatch");
  if (value_bits < 1 || value_bits > 64)
    throw std::invalid_argument("improvement message: value_bits out of range");
  const int index_bits = ceil_log2(static_cast<std::uint64_t>(d));
  for (std::size_t k = 0; k < indices.size(); ++k) {
    if (indices[k] < 0 || indices[k] >= d)
      throw std::invalid_argument("improvement message: coordinate index out of range");
    if (k > 0 && indices[k] <= indices[k - 1])
      throw std::invalid_argument("improvement message: indices must be strictly increasing");
    if (value_bits < 64 && values[k] >> value_bits)
      throw std::invalid_argument("improvement message: value does not fit in value_bits");
  }
  BitString out;
  for (int j : indices) out.push_uint(static_cast<std::uint64_t>(j), index_bits);
  for (auto v : values) out.push_uint(v, value_bits);
  return out;
}

ImprovementList decode_improvement_message(const BitString& payload, int d, int value_bits) {
  if (d < 1 || value_bits < 1 || value_bits > 64)
    throw std::invalid_argument("improvement message: bad decode parameters");
  const int index_bits = ceil_log2(static_cast<std::uint64_t>(d));
  const std::size_t per_entry = static_cast<std::size_t>(index_bits + value_bits);
  if (payload.size() % per_entry != 0)
    throw std::invalid_argument("improvement message: length is not a whole number of entries");
  const std::size_t count = payload.size() / per_entry;
  ImprovementList out;
  std::size_t pos = 0;
  for (std::size_t k = 0; k < count; ++k)
    out.indices.push_back(static_cast<int>(payload.read_uint(pos, index_bits)));
  for (std::size_t k = 0; k < count; ++k) out.values.push_back(payload.read_uint(pos, value_bits));
  return out;
}

}  // namespace dmest
