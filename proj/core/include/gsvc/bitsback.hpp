// Copyright (C) 2026 The gsvc Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>

namespace gsvc {

/// log2(m!) as a sum of log2 k (no factorial overflow).
double log2_factorial(std::uint64_t m);

/// Bits saved on one P-frame carrying m Gaussians when their order is used
/// as side information: log2(m!) - log2(m). Zero for m <= 1.
double bitsback_per_pframe(std::uint64_t m);

struct SavingsReport {
  std::uint64_t frames = 0;
  std::uint64_t gop = 1;
  std::uint64_t pframes = 0;  // frames - ceil(frames / gop)
  double per_pframe_bits = 0.0;
  double total_bits = 0.0;
  // Filled by with_stream_bits().
  double bits_without = 0.0;  // I-frame bits + P-frame bits
  double bits_with = 0.0;     // bits_without - total_bits, floored at zero
};

/// Savings for `frames` frames at GoP length `gop` when every P-frame
/// carries m Gaussians. Throws InvalidParameter on m, frames or gop < 1.
SavingsReport bitsback_savings(std::uint64_t m, std::uint64_t frames, std::uint64_t gop);

/// Attaches measured stream totals to `report`.
SavingsReport with_stream_bits(SavingsReport report, double i_frame_bits, double p_frame_bits);

}  // namespace gsvc
