// Copyright (C) 2026 The gsvc Authors
// SPDX-License-Identifier: Apache-2.0

#include "gsvc/bitsback.hpp"

#include <algorithm>
#include <cmath>

#include "gsvc/error.hpp"

namespace gsvc {

double log2_factorial(std::uint64_t m) {
  double s = 0.0;
  for (std::uint64_t k = 2; k <= m; ++k) s += std::log2(static_cast<double>(k));
  return s;
}

double bitsback_per_pframe(std::uint64_t m) {
  if (m <= 1) return 0.0;
  return log2_factorial(m) - std::log2(static_cast<double>(m));
}

SavingsReport bitsback_savings(std::uint64_t m, std::uint64_t frames, std::uint64_t gop) {
  if (m < 1 || frames < 1 || gop < 1) {
    throw InvalidParameter("bitsback_savings: m, frames and gop must be >= 1");
  }
  SavingsReport r;
  r.frames = frames;
  r.gop = gop;
  r.pframes = frames - (frames + gop - 1) / gop;
  r.per_pframe_bits = bitsback_per_pframe(m);
  r.total_bits = static_cast<double>(r.pframes) * r.per_pframe_bits;
  return r;
}

SavingsReport with_stream_bits(SavingsReport report, double i_frame_bits, double p_frame_bits) {
  report.bits_without = i_frame_bits + p_frame_bits;
  report.bits_with = std::max(0.0, report.bits_without - report.total_bits);
  return report;
}

}  // namespace gsvc
