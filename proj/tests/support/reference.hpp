// Copyright (C) 2026 The gsvc Authors
// SPDX-License-Identifier: Apache-2.0

// Test-only oracles. Nothing here calls into the rasterizer, so the
// implementation is always checked against an independent route.

#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "gsvc/gaussian.hpp"
#include "gsvc/image.hpp"

namespace gsvc::testing {

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

/// Direct evaluation of C_i = sum_n c_n exp(-1/2 d^T Sigma^-1 d) over every
/// Gaussian with no footprint truncation. Sigma is built by explicit matrix
/// multiplication and inverted with the generic 2x2 adjugate.
inline Image reference_render(const GaussianSet& set) {
  Image out(set.dims(), 0.0);
  for (int y = 0; y < out.height(); ++y) {
    for (int x = 0; x < out.width(); ++x) {
      for (const auto& g : set.gaussians()) {
        const double L[2][2] = {{g.chol.l1, 0.0}, {g.chol.l2, g.chol.l3}};
        double S[2][2] = {};
        for (int i = 0; i < 2; ++i)
          for (int j = 0; j < 2; ++j)
            for (int k = 0; k < 2; ++k) S[i][j] += L[i][k] * L[j][k];
        const double det = S[0][0] * S[1][1] - S[0][1] * S[1][0];
        const double inv[2][2] = {{S[1][1] / det, -S[0][1] / det},
                                  {-S[1][0] / det, S[0][0] / det}};
        const double d[2] = {x + 0.5 - g.mu.x, y + 0.5 - g.mu.y};
        double q = 0.0;
        for (int i = 0; i < 2; ++i)
          for (int j = 0; j < 2; ++j) q += d[i] * inv[i][j] * d[j];
        const double w = std::exp(-0.5 * q);
        for (int c = 0; c < 3; ++c) out.at(x, y, c) += g.color[static_cast<std::size_t>(c)] * w;
      }
    }
  }
  return out;
}

/// Central finite differences of `loss` with respect to every parameter.
inline std::vector<ParamVec> finite_difference_grad(
    const GaussianSet& set, double h, const std::function<double(const GaussianSet&)>& loss) {
  std::vector<ParamVec> grads(set.size());
  for (std::size_t n = 0; n < set.size(); ++n) {
    for (std::size_t k = 0; k < kParamsPerGaussian; ++k) {
      GaussianSet plus = set, minus = set;
      ParamVec p = set[n].params();
      ParamVec q = p;
      p[k] += h;
      q[k] -= h;
      plus.mutable_gaussians()[n] = Gaussian2D::from_params(p);
      minus.mutable_gaussians()[n] = Gaussian2D::from_params(q);
      grads[n][k] = (loss(plus) - loss(minus)) / (2.0 * h);
    }
  }
  return grads;
}

/// Random scene with Gaussians comfortably inside a small frame.
inline GaussianSet random_scene(std::mt19937_64& rng, FrameDims dims, int n) {
  std::vector<Gaussian2D> gs;
  for (int i = 0; i < n; ++i) {
    Gaussian2D g;
    g.mu = {uniform(rng, 2.0, dims.width - 2.0), uniform(rng, 2.0, dims.height - 2.0)};
    g.chol = {uniform(rng, 1.0, 3.5), uniform(rng, -1.5, 1.5), uniform(rng, 1.0, 3.5)};
    g.color = {uniform(rng, -0.3, 1.0), uniform(rng, -0.3, 1.0), uniform(rng, -0.3, 1.0)};
    gs.push_back(g);
  }
  return GaussianSet(dims, std::move(gs));
}

inline Image random_image(std::mt19937_64& rng, FrameDims dims, double lo, double hi) {
  Image img(dims);
  for (double& v : img.data()) v = uniform(rng, lo, hi);
  return img;
}

/// Sum over pixels and channels of weight * value.
inline double weighted_sum(const Image& img, const Image& weights) {
  double s = 0.0;
  for (std::size_t i = 0; i < img.data().size(); ++i) s += img.data()[i] * weights.data()[i];
  return s;
}

/// True when analytic and numeric agree within `rel` relative error or
/// `abs_floor` absolute error.
inline bool grad_close(double analytic, double numeric, double rel, double abs_floor) {
  const double diff = std::abs(analytic - numeric);
  if (diff <= abs_floor) return true;
  return diff <= rel * std::max(std::abs(analytic), std::abs(numeric));
}

/// exp(-1/2 d^T Sigma^-1 d) of `g` at the center of pixel (x, y), by the
/// same explicit matrix route as reference_render.
inline double reference_weight(const Gaussian2D& g, int x, int y) {
  const double L[2][2] = {{g.chol.l1, 0.0}, {g.chol.l2, g.chol.l3}};
  double S[2][2] = {};
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      for (int k = 0; k < 2; ++k) S[i][j] += L[i][k] * L[j][k];
  const double det = S[0][0] * S[1][1] - S[0][1] * S[1][0];
  const double inv[2][2] = {{S[1][1] / det, -S[0][1] / det}, {-S[1][0] / det, S[0][0] / det}};
  const double d[2] = {x + 0.5 - g.mu.x, y + 0.5 - g.mu.y};
  double q = 0.0;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) q += d[i] * inv[i][j] * d[j];
  return std::exp(-0.5 * q);
}

}  // namespace gsvc::testing
