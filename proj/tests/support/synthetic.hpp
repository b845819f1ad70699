// Copyright (C) 2026 The gsvc Authors
// SPDX-License-Identifier: Apache-2.0

// Synthetic frames and sequences for tests and the acceptance suite.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "gsvc/image.hpp"

namespace gsvc::testing {

/// Smooth, low-frequency color texture: a few random sinusoids per channel.
inline Image smooth_texture(FrameDims dims, std::uint64_t seed, int waves = 4,
                            double max_freq = 3.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Image img(dims, 0.0);
  for (int c = 0; c < 3; ++c) {
    const double base = 0.3 + 0.4 * u(rng);
    std::vector<std::array<double, 4>> w(static_cast<std::size_t>(waves));
    for (auto& k : w) {
      k = {max_freq * (u(rng) - 0.5) * 2.0, max_freq * (u(rng) - 0.5) * 2.0,
           6.283185307179586 * u(rng), 0.25 / waves + 0.25 / waves * u(rng)};
    }
    for (int y = 0; y < dims.height; ++y) {
      for (int x = 0; x < dims.width; ++x) {
        double v = base;
        for (const auto& k : w) {
          v += k[3] * std::sin(6.283185307179586 *
                                   (k[0] * (x + 0.5) / dims.width + k[1] * (y + 0.5) / dims.height) +
                               k[2]);
        }
        img.at(x, y, c) = std::clamp(v, 0.0, 1.0);
      }
    }
  }
  return img;
}

/// Blocky piecewise-constant image: random colors on a `block` pixel grid.
inline Image block_image(FrameDims dims, int block, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.05, 0.95);
  const int bx = (dims.width + block - 1) / block;
  const int by = (dims.height + block - 1) / block;
  std::vector<std::array<double, 3>> colors(static_cast<std::size_t>(bx * by));
  for (auto& col : colors) col = {u(rng), u(rng), u(rng)};
  Image img(dims, 0.0);
  for (int y = 0; y < dims.height; ++y) {
    for (int x = 0; x < dims.width; ++x) {
      const auto& col = colors[static_cast<std::size_t>((y / block) * bx + x / block)];
      for (int c = 0; c < 3; ++c) img.at(x, y, c) = col[static_cast<std::size_t>(c)];
    }
  }
  return img;
}

/// Paints an axis-aligned square of side `size` with its top-left corner at
/// (x0, y0) in `color`.
inline void paint_square(Image& img, int x0, int y0, int size, const std::array<double, 3>& color) {
  for (int y = std::max(0, y0); y < std::min(img.height(), y0 + size); ++y) {
    for (int x = std::max(0, x0); x < std::min(img.width(), x0 + size); ++x) {
      for (int c = 0; c < 3; ++c) img.at(x, y, c) = color[static_cast<std::size_t>(c)];
    }
  }
}

/// Static background with a square that moves by (dx, dy) pixels per frame.
inline std::vector<Image> moving_square(const Image& background, int frames, int size, int x0,
                                        int y0, int dx, int dy,
                                        const std::array<double, 3>& color = {0.9, 0.15, 0.1}) {
  std::vector<Image> out;
  for (int f = 0; f < frames; ++f) {
    Image img = background;
    paint_square(img, x0 + f * dx, y0 + f * dy, size, color);
    out.push_back(std::move(img));
  }
  return out;
}

}  // namespace gsvc::testing
