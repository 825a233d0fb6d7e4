#pragma once

// Fixed-point quantization and bit-exact message accounting.

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace dmest {

/// Ordered sequence of bits. Multi-bit fields are written most-significant bit first.
class BitString {
 public:
  BitString() = default;

  std::size_t size() const { return bits_.size(); }
  bool empty() const { return bits_.empty(); }
  bool operator[](std::size_t i) const { return bits_[i]; }

  void push_bit(bool b) { bits_.push_back(b); }
  // Appends the low `width` bits of `value`, MSB first.
  void push_uint(std::uint64_t value, int width);
  // Reads `width` bits starting at `pos` and advances `pos`.
  std::uint64_t read_uint(std::size_t& pos, int width) const;

  // Hex text of the string read as a big-endian number, left-padded with zero
  // bits to a multiple of four. The empty string maps to "".
  std::string to_hex() const;

  friend bool operator==(const BitString&, const BitString&) = default;

 private:
  std::vector<bool> bits_;
};

enum class ProtocolKind { independent, interactive };

const char* to_string(ProtocolKind kind);

struct Message {
  int machine = 1;  // 1-based
  int round = 1;    // 1-based
  BitString payload;

  friend bool operator==(const Message&, const Message&) = default;
};

struct Transcript {
  std::vector<Message> messages;
  ProtocolKind kind = ProtocolKind::independent;

  void append(Message msg) { messages.push_back(std::move(msg)); }
  // Throws std::invalid_argument when the structural invariants fail for `m` machines.
  void validate(int m) const;
};

std::uint64_t transcript_total_bits(const Transcript& t);

// Concatenation keeps the kind of `a` unless either side is interactive.
Transcript concatenate(const Transcript& a, const Transcript& b);

enum class RoundingMode { round_down, round_nearest };

struct QuantizerSpec {
  double lo = 0.0;
  double hi = 1.0;
  int bits = 0;
  RoundingMode mode = RoundingMode::round_nearest;

  void validate() const;
  double cell_width() const;
  std::uint64_t cell_count() const { return std::uint64_t{1} << bits; }
};

// ceil(log2 x) for x >= 1; 0 for x == 1.
int ceil_log2(std::uint64_t x);

// Smallest b >= 0 with (hi - lo) / 2^b <= eps.
int bits_for_accuracy(double lo, double hi, double eps);

std::uint64_t quantize(double value, const QuantizerSpec& spec);
double dequantize(std::uint64_t index, const QuantizerSpec& spec);

// Improvement broadcast: |J| indices of ceil(log2 d) bits each, followed by |J|
// values of `value_bits` bits each.
BitString encode_improvement_message(std::span<const int> indices,
                                     std::span<const std::uint64_t> values, int d,
                                     int value_bits);

struct ImprovementList {
  std::vector<int> indices;
  std::vector<std::uint64_t> values;
};

ImprovementList decode_improvement_message(const BitString& payload, int d, int value_bits);

}  // namespace dmest
