// Copyright (C) 2026 The gsvc Authors
// SPDX-License-Identifier: Apache-2.0

#include "gsvc/image.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "gsvc/error.hpp"

namespace gsvc {

Image::Image(FrameDims dims, double fill)
    : dims_(dims), data_(dims.pixel_count() * 3, fill) {}

Image Image::clamped() const {
  Image out = *this;
  for (double& v : out.data_) v = std::clamp(v, 0.0, 1.0);
  return out;
}

RoiMask::RoiMask(FrameDims dims, bool value)
    : dims_(dims), bits_(dims.pixel_count(), value ? 1 : 0) {}

RoiMask::RoiMask(FrameDims dims, std::vector<std::uint8_t> bits)
    : dims_(dims), bits_(std::move(bits)) {
  if (bits_.size() != dims.pixel_count()) {
    throw InvalidParameter("RoiMask: bit count does not match dimensions");
  }
  for (auto& b : bits_) b = b ? 1 : 0;
}

std::size_t RoiMask::count() const {
  return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

double mse(const Image& a, const Image& b, const RoiMask* mask) {
  if (a.dims() != b.dims()) throw InvalidParameter("mse: image dimensions differ");
  if (mask && mask->dims() != a.dims()) throw InvalidParameter("mse: mask dimensions differ");
  const auto& da = a.data();
  const auto& db = b.data();
  double sum = 0.0;
  std::size_t n = 0;
  const std::size_t pixels = a.dims().pixel_count();
  for (std::size_t p = 0; p < pixels; ++p) {
    if (mask && !mask->bits()[p]) continue;
    for (std::size_t c = 0; c < 3; ++c) {
      const double d = da[p * 3 + c] - db[p * 3 + c];
      sum += d * d;
    }
    n += 3;
  }
  if (n == 0) throw InvalidParameter("mse: mask selects no pixels");
  return sum / static_cast<double>(n);
}

double psnr_from_mse(double m) {
  if (m <= 0.0) return kPsnrCeilingDb;
  return std::min(kPsnrCeilingDb, 10.0 * std::log10(1.0 / m));
}

double psnr(const Image& a, const Image& b, const RoiMask* mask) {
  return psnr_from_mse(mse(a, b, mask));
}

Image composite_background(const Image& foreground, const RoiMask& mask, const Rgb& fill) {
  if (mask.dims() != foreground.dims()) {
    throw InvalidParameter("composite_background: mask dimensions differ");
  }
  Image out = foreground;
  for (int y = 0; y < out.height(); ++y) {
    for (int x = 0; x < out.width(); ++x) {
      if (mask.at(x, y)) continue;
      for (int c = 0; c < 3; ++c) out.at(x, y, c) = fill[static_cast<std::size_t>(c)];
    }
  }
  return out;
}

Rgb mean_outside(const Image& frame, const RoiMask& mask) {
  Rgb sum;
  std::size_t n = 0;
  for (int y = 0; y < frame.height(); ++y) {
    for (int x = 0; x < frame.width(); ++x) {
      if (mask.at(x, y)) continue;
      for (std::size_t c = 0; c < 3; ++c) sum[c] += frame.at(x, y, static_cast<int>(c));
      ++n;
    }
  }
  if (n == 0) return {};
  const double inv = 1.0 / static_cast<double>(n);
  return {sum.r * inv, sum.g * inv, sum.b * inv};
}

}  // namespace gsvc
