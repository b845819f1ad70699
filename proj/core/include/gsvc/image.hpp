// Copyright (C) 2026 The gsvc Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "gsvc/gaussian.hpp"

namespace gsvc {

/// Row-major interleaved RGB image. Rendered images hold values in [0,1];
/// unclamped renders and gradient images may hold anything finite.
class Image {
 public:
  Image() = default;
  Image(FrameDims dims, double fill = 0.0);

  FrameDims dims() const { return dims_; }
  int width() const { return dims_.width; }
  int height() const { return dims_.height; }
  bool empty() const { return data_.empty(); }

  double& at(int x, int y, int c) { return data_[index(x, y) + static_cast<std::size_t>(c)]; }
  double at(int x, int y, int c) const {
    return data_[index(x, y) + static_cast<std::size_t>(c)];
  }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  /// Copy with every value clamped to [0,1].
  Image clamped() const;

  bool operator==(const Image&) const = default;

 private:
  std::size_t index(int x, int y) const {
    return (static_cast<std::size_t>(y) * static_cast<std::size_t>(dims_.width) +
            static_cast<std::size_t>(x)) *
           3;
  }

  FrameDims dims_;
  std::vector<double> data_;
};

/// Per-pixel ROI membership.
class RoiMask {
 public:
  RoiMask() = default;
  RoiMask(FrameDims dims, bool value);
  RoiMask(FrameDims dims, std::vector<std::uint8_t> bits);

  static RoiMask full(FrameDims dims) { return RoiMask(dims, true); }

  FrameDims dims() const { return dims_; }
  bool at(int x, int y) const {
    return bits_[static_cast<std::size_t>(y) * static_cast<std::size_t>(dims_.width) +
                 static_cast<std::size_t>(x)] != 0;
  }
  void set(int x, int y, bool v) {
    bits_[static_cast<std::size_t>(y) * static_cast<std::size_t>(dims_.width) +
          static_cast<std::size_t>(x)] = v ? 1 : 0;
  }
  const std::vector<std::uint8_t>& bits() const { return bits_; }

  std::size_t count() const;
  bool is_full() const { return count() == dims_.pixel_count(); }

  bool operator==(const RoiMask&) const = default;

 private:
  FrameDims dims_;
  std::vector<std::uint8_t> bits_;
};

/// PSNR reported for identical images instead of +inf.
inline constexpr double kPsnrCeilingDb = 99.0;

/// Mean squared error over every channel of the pixels selected by `mask`
/// (all pixels when no mask is given).
double mse(const Image& a, const Image& b, const RoiMask* mask = nullptr);

/// 10 log10(1 / mse) for [0,1] images, capped at kPsnrCeilingDb.
double psnr_from_mse(double mse);
double psnr(const Image& a, const Image& b, const RoiMask* mask = nullptr);

/// Replace pixels outside `mask` with `fill`.
Image composite_background(const Image& foreground, const RoiMask& mask, const Rgb& fill);

/// Mean color of the pixels outside `mask`; black if the mask is full.
Rgb mean_outside(const Image& frame, const RoiMask& mask);

}  // namespace gsvc
