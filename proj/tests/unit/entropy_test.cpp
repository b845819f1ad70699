// Copyright (C) 2026 The gsvc Authors
// SPDX-License-Identifier: Apache-2.0

#include "gsvc/entropy.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "gsvc/error.hpp"

namespace gsvc {
namespace {

std::vector<std::uint32_t> draw(std::mt19937_64& rng, const std::vector<double>& probs,
                                std::size_t n) {
  std::discrete_distribution<std::uint32_t> dist(probs.begin(), probs.end());
  std::vector<std::uint32_t> out(n);
  for (auto& s : out) s = dist(rng);
  return out;
}

double entropy_bits(const std::vector<double>& probs) {
  double h = 0.0;
  for (double p : probs) {
    if (p > 0.0) h -= p * std::log2(p);
  }
  return h;
}

TEST(Entropy, EmptyInputIsHeaderOnly) {
  const auto payload = entropy_encode({}, 8);
  EXPECT_EQ(payload.size(), 1u);
  EXPECT_TRUE(entropy_decode(payload, 8, 0).empty());
}

TEST(Entropy, RandomArraysRoundTrip) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    const int bits = 1 + static_cast<int>(rng() % 32);
    const std::size_t n = rng() % 300;
    std::vector<std::uint32_t> symbols(n);
    const std::uint64_t mask = bits == 32 ? 0xFFFFFFFFull : (1ull << bits) - 1;
    // Mix uniform and heavily skewed arrays so both coding modes run.
    const bool skewed = trial % 2 == 0;
    for (auto& s : symbols) {
      s = static_cast<std::uint32_t>((skewed ? rng() % 3 : rng()) & mask);
    }
    const auto payload = entropy_encode(symbols, bits);
    EXPECT_EQ(entropy_decode(payload, bits, n), symbols) << "trial " << trial;
    EXPECT_LE(payload.size(), 1 + (n * static_cast<std::size_t>(bits) + 7) / 8);
  }
}

TEST(Entropy, ThreeSymbolSourceNearEntropy) {
  const std::vector<double> probs{0.5, 0.25, 0.25};
  ASSERT_DOUBLE_EQ(entropy_bits(probs), 1.5);
  std::mt19937_64 rng(11);
  const auto symbols = draw(rng, probs, 10000);
  const auto payload = entropy_encode(symbols, 2);
  const double ideal = 1.5 * 10000 / 8;  // 1875 bytes
  EXPECT_LE(static_cast<double>(payload.size()), ideal * 1.02 + 16);
  EXPECT_GE(static_cast<double>(payload.size()), ideal * 0.98 - 16);
  EXPECT_EQ(entropy_decode(payload, 2, symbols.size()), symbols);
}

TEST(Entropy, GeometricByteSourceNearEntropy) {
  std::vector<double> probs(256);
  double z = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) z += probs[i] = std::pow(0.7, i);
  for (auto& p : probs) p /= z;
  std::mt19937_64 rng(3);
  const auto symbols = draw(rng, probs, 10000);
  const auto payload = entropy_encode(symbols, 8);
  const double ideal = entropy_bits(probs) * 10000 / 8;
  EXPECT_LE(static_cast<double>(payload.size()), ideal * 1.02 + 16);
  EXPECT_EQ(entropy_decode(payload, 8, symbols.size()), symbols);
}

TEST(Entropy, WideSymbolsSplitIntoLanes) {
  std::mt19937_64 rng(5);
  std::vector<std::uint32_t> symbols(5000);
  for (auto& s : symbols) s = 30000 + static_cast<std::uint32_t>(rng() % 40);
  const auto payload = entropy_encode(symbols, 16);
  EXPECT_LT(payload.size(), symbols.size());  // raw would be 2 bytes each
  EXPECT_EQ(entropy_decode(payload, 16, symbols.size()), symbols);
}

TEST(Entropy, MixedModelsRoundTrip) {
  std::mt19937_64 rng(9);
  EntropyWriter w({3, 16, 1, 32});
  std::vector<std::pair<std::size_t, std::uint32_t>> log;
  for (int i = 0; i < 3000; ++i) {
    const std::size_t m = rng() % 4;
    const int b = std::vector<int>{3, 16, 1, 32}[m];
    const std::uint32_t v =
        static_cast<std::uint32_t>(rng() & (b == 32 ? 0xFFFFFFFFull : (1ull << b) - 1));
    w.put(m, v);
    log.emplace_back(m, v);
  }
  const auto payload = w.finish();
  EntropyReader r(payload, {3, 16, 1, 32});
  for (const auto& [m, v] : log) ASSERT_EQ(r.get(m), v);
  EXPECT_NO_THROW(r.finish());
}

TEST(Entropy, SymbolOutsideAlphabetThrows) {
  const std::vector<std::uint32_t> symbols{0, 1, 4};
  EXPECT_THROW(entropy_encode(symbols, 2), InvalidParameter);
  EXPECT_THROW(entropy_encode(symbols, 0), InvalidParameter);
  EXPECT_THROW(entropy_encode(symbols, 33), InvalidParameter);
}

TEST(Entropy, TruncatedPayloadThrowsWithPosition) {
  std::mt19937_64 rng(1);
  const auto symbols = draw(rng, {0.9, 0.05, 0.05}, 2000);
  const auto payload = entropy_encode(symbols, 2);
  ASSERT_EQ(payload[0], 1) << "expected the range-coded mode";
  for (std::size_t cut = 0; cut < payload.size(); ++cut) {
    std::vector<std::uint8_t> head(payload.begin(), payload.begin() + static_cast<long>(cut));
    try {
      entropy_decode(head, 2, symbols.size());
      ADD_FAILURE() << "no error at cut " << cut;
    } catch (const StreamError& e) {
      EXPECT_LE(e.position(), payload.size());
    }
  }
}

TEST(Entropy, TrailingBytesRejected) {
  auto payload = entropy_encode(std::vector<std::uint32_t>{1, 2, 3}, 4);
  payload.push_back(0);
  EXPECT_THROW(entropy_decode(payload, 4, 3), StreamError);
}

TEST(Entropy, NonzeroRawPaddingRejected) {
  auto payload = entropy_encode(std::vector<std::uint32_t>{1}, 3);
  ASSERT_EQ(payload[0], 2);
  payload.back() |= 1;
  EXPECT_THROW(entropy_decode(payload, 3, 1), StreamError);
}

TEST(Entropy, CorruptedPayloadNeverCrashes) {
  std::mt19937_64 rng(21);
  const auto symbols = draw(rng, {0.6, 0.2, 0.1, 0.1}, 3000);
  const auto clean = entropy_encode(symbols, 2);
  int detected = 0;
  for (int trial = 0; trial < 300; ++trial) {
    auto bad = clean;
    bad[rng() % bad.size()] ^= static_cast<std::uint8_t>(1u << (rng() % 8));
    try {
      if (entropy_decode(bad, 2, symbols.size()) != symbols) ++detected;
    } catch (const StreamError&) {
      ++detected;
    }
  }
  // Flips in the final flush bytes can be invisible; everything else must
  // surface as a typed error or a different decode.
  EXPECT_GT(detected, 250);
}

TEST(Entropy, UnknownModeRejected) {
  const std::vector<std::uint8_t> payload{7, 0, 0};
  EXPECT_THROW(entropy_decode(payload, 2, 1), StreamError);
}

}  // namespace
}  // namespace gsvc
