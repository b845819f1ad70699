// Copyright (C) 2026 The gsvc Authors
// SPDX-License-Identifier: Apache-2.0

#include "gsvc/quant.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "gsvc/error.hpp"

namespace gsvc {

namespace {

constexpr double kCalibrationLow = 0.001;
constexpr double kCalibrationHigh = 0.999;
constexpr double kMinRangeWidth = 1e-3;
constexpr double kMinCholDiagonal = 1e-4;

bool is_chol_diagonal(std::size_t chol_channel) { return chol_channel != 1; }

ChannelRange widen_if_degenerate(ChannelRange r) {
  if (r.hi - r.lo < kMinRangeWidth) {
    const double mid = 0.5 * (r.lo + r.hi);
    r = {mid - 0.5 * kMinRangeWidth, mid + 0.5 * kMinRangeWidth};
  }
  return r;
}

}  // namespace

std::string_view to_string(QuantMode mode) {
  switch (mode) {
    case QuantMode::kNone: return "none";
    case QuantMode::kPtq: return "ptq";
    case QuantMode::kQat: return "qat";
  }
  return "unknown";
}

QuantMode parse_quant_mode(std::string_view text) {
  if (text == "none") return QuantMode::kNone;
  if (text == "ptq") return QuantMode::kPtq;
  if (text == "qat") return QuantMode::kQat;
  throw InvalidParameter("unknown quantization mode '" + std::string(text) + "'");
}

void QuantSpec::validate() const {
  for (int b : {bits_mu, bits_chol, bits_color}) {
    if (b < 2 || b > 16) throw InvalidParameter("QuantSpec: bit widths must be in [2,16]");
  }
  if (!(mu_hi > mu_lo)) throw InvalidParameter("QuantSpec: empty position range");
  if (!calibrated) return;
  for (const auto* ranges : {&chol, &color}) {
    for (const auto& r : *ranges) {
      if (!(r.hi > r.lo) || !std::isfinite(r.lo) || !std::isfinite(r.hi)) {
        throw InvalidParameter("QuantSpec: channel range must satisfy hi > lo");
      }
    }
  }
  if (!(chol[0].lo > 0.0) || !(chol[2].lo > 0.0)) {
    throw InvalidParameter("QuantSpec: Cholesky diagonal ranges must be positive");
  }
}

int QuantSpec::bits_for(std::size_t param) const {
  if (param < 2) return bits_mu;
  if (param < 5) return bits_chol;
  return bits_color;
}

std::uint32_t UniformQuantizer::quantize(double x) const {
  const double t = std::nearbyint((x - lo) / step);
  if (!(t > 0.0)) return 0;  // NaN maps to 0
  if (t >= static_cast<double>(max_index)) return max_index;
  return static_cast<std::uint32_t>(t);
}

UniformQuantizer make_quantizer(double lo, double hi, int bits) {
  const std::uint32_t max_index = (1u << bits) - 1u;
  return {lo, (hi - lo) / static_cast<double>(max_index), max_index};
}

UniformQuantizer channel_quantizer(const QuantSpec& spec, FrameDims dims, std::size_t param) {
  if (param < 2) {
    const double side = param == 0 ? dims.width : dims.height;
    return make_quantizer(spec.mu_lo * side, spec.mu_hi * side, spec.bits_mu);
  }
  if (param < 5) {
    const auto& r = spec.chol[param - 2];
    return make_quantizer(r.lo, r.hi, spec.bits_chol);
  }
  const auto& r = spec.color[param - 5];
  return make_quantizer(r.lo, r.hi, spec.bits_color);
}

QuantizedGaussian quantize_one(const Gaussian2D& g, const QuantSpec& spec, FrameDims dims) {
  const ParamVec p = g.params();
  QuantizedGaussian q{};
  for (std::size_t k = 0; k < kParamsPerGaussian; ++k) {
    q[k] = channel_quantizer(spec, dims, k).quantize(p[k]);
  }
  return q;
}

Gaussian2D dequantize_one(const QuantizedGaussian& q, const QuantSpec& spec, FrameDims dims) {
  ParamVec p{};
  for (std::size_t k = 0; k < kParamsPerGaussian; ++k) {
    p[k] = channel_quantizer(spec, dims, k).dequantize(q[k]);
  }
  return Gaussian2D::from_params(p);
}

QuantizedSet quantize(const GaussianSet& set, const QuantSpec& spec) {
  if (!spec.calibrated) throw InvalidParameter("quantize: QuantSpec is not calibrated");
  spec.validate();
  QuantizedSet out{set.dims(), {}};
  out.symbols.reserve(set.size());
  for (const auto& g : set.gaussians()) out.symbols.push_back(quantize_one(g, spec, set.dims()));
  return out;
}

GaussianSet dequantize(const QuantizedSet& q, const QuantSpec& spec) {
  if (!spec.calibrated) throw InvalidParameter("dequantize: QuantSpec is not calibrated");
  std::vector<Gaussian2D> gs;
  gs.reserve(q.symbols.size());
  for (const auto& s : q.symbols) gs.push_back(dequantize_one(s, spec, q.dims));
  return GaussianSet(q.dims, std::move(gs));
}

GaussianSet fake_quantize(const GaussianSet& set, const QuantSpec& spec) {
  return dequantize(quantize(set, spec), spec);
}

double percentile(std::vector<double> values, double p) {
  if (values.empty()) throw InvalidParameter("percentile: no values");
  std::sort(values.begin(), values.end());
  const double rank = std::ceil(std::clamp(p, 0.0, 1.0) * static_cast<double>(values.size()));
  const auto i = static_cast<std::size_t>(std::max(rank, 1.0)) - 1;
  return values[std::min(i, values.size() - 1)];
}

QuantSpec calibrate_ptq(std::span<const GaussianSet> sets, const QuantSpec& base) {
  std::size_t total = 0;
  for (const auto& s : sets) total += s.size();
  if (sets.empty() || total == 0) {
    throw InvalidParameter("calibrate_ptq: need at least one non-empty Gaussian set");
  }
  QuantSpec spec = base;
  std::vector<double> values;
  values.reserve(total);
  for (std::size_t k = 2; k < kParamsPerGaussian; ++k) {
    values.clear();
    for (const auto& s : sets) {
      for (const auto& g : s.gaussians()) values.push_back(g.params()[k]);
    }
    ChannelRange r{percentile(values, kCalibrationLow), percentile(values, kCalibrationHigh)};
    r = widen_if_degenerate(r);
    if (k < 5) {
      if (is_chol_diagonal(k - 2) && r.lo < kMinCholDiagonal) {
        r.hi += kMinCholDiagonal - r.lo;
        r.lo = kMinCholDiagonal;
      }
      spec.chol[k - 2] = r;
    } else {
      spec.color[k - 5] = r;
    }
  }
  spec.calibrated = true;
  spec.validate();
  return spec;
}

}  // namespace gsvc
