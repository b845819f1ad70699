// Copyright (C) 2026 The gsvc Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "gsvc/gaussian.hpp"

namespace gsvc {

enum class QuantMode : std::uint8_t { kNone = 0, kPtq = 1, kQat = 2 };

std::string_view to_string(QuantMode mode);
QuantMode parse_quant_mode(std::string_view text);

struct ChannelRange {
  double lo = 0.0;
  double hi = 0.0;
  bool operator==(const ChannelRange&) const = default;
};

/// Per-attribute quantizer parameters.
///
/// Positions are fixed-point over [mu_lo, mu_hi] in frame-normalized units
/// (x / width, y / height). Cholesky entries and colors use uniform
/// asymmetric quantizers whose per-channel ranges come from calibration.
struct QuantSpec {
  int bits_mu = 16;
  int bits_chol = 6;
  int bits_color = 8;
  double mu_lo = -0.5;
  double mu_hi = 1.5;
  std::array<ChannelRange, 3> chol{};   // l1, l2, l3
  std::array<ChannelRange, 3> color{};  // r, g, b
  bool calibrated = false;

  /// Throws InvalidParameter on bits outside [2,16] or non-positive ranges.
  void validate() const;
  int bits_for(std::size_t param) const;
  bool operator==(const QuantSpec&) const = default;
};

/// Round-to-nearest-even uniform quantizer over [lo, lo + step * max_index].
struct UniformQuantizer {
  double lo = 0.0;
  double step = 1.0;
  std::uint32_t max_index = 0;

  std::uint32_t quantize(double x) const;
  double dequantize(std::uint32_t q) const { return lo + step * static_cast<double>(q); }
};

UniformQuantizer make_quantizer(double lo, double hi, int bits);

/// Quantizer for parameter `param` (ParamVec layout) of a frame of `dims`.
UniformQuantizer channel_quantizer(const QuantSpec& spec, FrameDims dims, std::size_t param);

using QuantizedGaussian = std::array<std::uint32_t, kParamsPerGaussian>;

struct QuantizedSet {
  FrameDims dims;
  std::vector<QuantizedGaussian> symbols;
  bool operator==(const QuantizedSet&) const = default;
};

/// Throws InvalidParameter if the spec is not calibrated.
QuantizedSet quantize(const GaussianSet& set, const QuantSpec& spec);
QuantizedGaussian quantize_one(const Gaussian2D& g, const QuantSpec& spec, FrameDims dims);
GaussianSet dequantize(const QuantizedSet& q, const QuantSpec& spec);
Gaussian2D dequantize_one(const QuantizedGaussian& q, const QuantSpec& spec, FrameDims dims);

/// dequantize(quantize(set)): the parameters a decoder would see.
GaussianSet fake_quantize(const GaussianSet& set, const QuantSpec& spec);

/// Nearest-rank percentile (p in [0,1]) of unsorted values: the smallest
/// value with at least p of the samples at or below it. Unchanged when the
/// sample is duplicated.
double percentile(std::vector<double> values, double p);

/// Per-channel ranges from the 0.1% / 99.9% percentiles of all Cholesky and
/// color values across `sets`. Bit widths and the position range are taken
/// from `base`. Throws InvalidParameter on an empty collection.
QuantSpec calibrate_ptq(std::span<const GaussianSet> sets, const QuantSpec& base = {});

}  // namespace gsvc
