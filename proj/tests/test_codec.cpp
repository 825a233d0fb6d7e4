#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "dmest/codec.hpp"

using namespace dmest;

TEST(BitString, PushAndReadMsbFirst) {
  BitString b;
  b.push_uint(0b101, 3);
  b.push_uint(0xA, 4);
  ASSERT_EQ(b.size(), 7u);
  EXPECT_TRUE(b[0]);
  EXPECT_FALSE(b[1]);
  std::size_t pos = 0;
  EXPECT_EQ(b.read_uint(pos, 3), 5u);
  EXPECT_EQ(b.read_uint(pos, 4), 10u);
  EXPECT_EQ(pos, 7u);
}

TEST(BitString, HexPadsOnTheLeft) {
  BitString b;
  EXPECT_EQ(b.to_hex(), "");
  b.push_uint(0b101, 3);
  EXPECT_EQ(b.to_hex(), "5");
  b.push_uint(0xF, 4);
  EXPECT_EQ(b.to_hex(), "5f");
}

TEST(BitsForAccuracy, Examples) {
  EXPECT_EQ(bits_for_accuracy(0, 1, 1.0 / 1024), 10);
  EXPECT_EQ(bits_for_accuracy(-2, 2, 1.0 / (32.0 * 32.0)), 12);
  EXPECT_EQ(bits_for_accuracy(0, 1, 1), 0);
}

TEST(BitsForAccuracy, MonotoneAndConsistent) {
  int prev = 1 << 30;
  for (double eps = 1e-6; eps < 4; eps *= 1.37) {
    const int b = bits_for_accuracy(-1, 1, eps);
    EXPECT_LE(b, prev);
    EXPECT_LE(2.0 / std::ldexp(1.0, b), eps);
    prev = b;
  }
  EXPECT_THROW(bits_for_accuracy(0, 1, 0), std::invalid_argument);
}

TEST(Quantize, Examples) {
  const QuantizerSpec down{-1, 1, 3, RoundingMode::round_down};
  EXPECT_EQ(quantize(-1, down), 0u);
  EXPECT_EQ(quantize(0.3, down), 5u);
  EXPECT_EQ(quantize(1, down), 7u);
  EXPECT_EQ(quantize(7.5, down), 7u);
  EXPECT_EQ(quantize(-9, down), 0u);
  EXPECT_DOUBLE_EQ(dequantize(5, down), 0.25);
  const QuantizerSpec near{-1, 1, 3, RoundingMode::round_nearest};
  EXPECT_DOUBLE_EQ(dequantize(0, near), -1 + 0.125);
}

TEST(Quantize, RoundTripProperty) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-3, 5);
  for (int i = 0; i < 10000; ++i) {
    const int bits = 1 + static_cast<int>(rng() % 20);
    const QuantizerSpec near{-3, 5, bits, RoundingMode::round_nearest};
    const QuantizerSpec down{-3, 5, bits, RoundingMode::round_down};
    const double v = u(rng);
    EXPECT_LE(std::abs(dequantize(quantize(v, near), near) - v), near.cell_width());
    const double back = dequantize(quantize(v, down), down);
    EXPECT_LE(back, v);
    EXPECT_LE(v - back, down.cell_width());
  }
}

TEST(Transcript, TotalBitsAndConcatenation) {
  Transcript empty;
  EXPECT_EQ(transcript_total_bits(empty), 0u);
  Transcript a, b;
  BitString three, five;
  three.push_uint(5, 3);
  five.push_uint(17, 5);
  a.append({1, 1, three});
  b.append({2, 1, five});
  EXPECT_EQ(transcript_total_bits(a) + transcript_total_bits(b), 8u);
  EXPECT_EQ(transcript_total_bits(concatenate(a, b)), 8u);
}

TEST(Transcript, ValidateStructure) {
  Transcript t;
  t.append({1, 1, {}});
  t.append({1, 1, {}});
  EXPECT_THROW(t.validate(2), std::invalid_argument);
  Transcript r;
  r.append({1, 2, {}});
  EXPECT_THROW(r.validate(1), std::invalid_argument);
  Transcript out_of_range;
  out_of_range.append({3, 1, {}});
  EXPECT_THROW(out_of_range.validate(2), std::invalid_argument);
}

TEST(ImprovementMessage, Examples) {
  EXPECT_TRUE(encode_improvement_message({}, {}, 5, 12).empty());
  const std::vector<int> idx{1, 4};
  const std::vector<std::uint64_t> val{100, 4095};
  const BitString msg = encode_improvement_message(idx, val, 5, 12);
  EXPECT_EQ(msg.size(), 30u);
  const auto back = decode_improvement_message(msg, 5, 12);
  EXPECT_EQ(back.indices, idx);
  EXPECT_EQ(back.values, val);
}

TEST(ImprovementMessage, RoundTripProperty) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 1000; ++trial) {
    const int d = 1 + static_cast<int>(rng() % 40);
    const int vb = 1 + static_cast<int>(rng() % 30);
    std::vector<int> idx;
    std::vector<std::uint64_t> val;
    for (int j = 0; j < d; ++j)
      if (rng() % 3 == 0) {
        idx.push_back(j);
        val.push_back(rng() & ((std::uint64_t{1} << vb) - 1));
      }
    const BitString msg = encode_improvement_message(idx, val, d, vb);
    EXPECT_EQ(msg.size(), idx.size() * static_cast<std::size_t>(ceil_log2(d) + vb));
    const auto back = decode_improvement_message(msg, d, vb);
    EXPECT_EQ(back.indices, idx);
    EXPECT_EQ(back.values, val);
  }
}
