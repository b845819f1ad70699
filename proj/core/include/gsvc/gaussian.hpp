// Copyright (C) 2026 The gsvc Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace gsvc {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
  bool operator==(const Vec2&) const = default;
};

/// Symmetric 2x2 matrix [[xx, xy], [xy, yy]].
struct Mat2Sym {
  double xx = 0.0;
  double xy = 0.0;
  double yy = 0.0;

  double det() const { return xx * yy - xy * xy; }
  double trace() const { return xx + yy; }
  bool is_spd() const { return det() > 0.0 && trace() > 0.0; }
};

/// Lower-triangular factor L = [[l1, 0], [l2, l3]] of a covariance.
struct Cholesky {
  double l1 = 1.0;
  double l2 = 0.0;
  double l3 = 1.0;
  bool operator==(const Cholesky&) const = default;
};

struct Rgb {
  double r = 0.0;
  double g = 0.0;
  double b = 0.0;

  double& operator[](std::size_t c) { return c == 0 ? r : (c == 1 ? g : b); }
  double operator[](std::size_t c) const { return c == 0 ? r : (c == 1 ? g : b); }
  bool operator==(const Rgb&) const = default;
};

/// Parameter vector layout shared by gradients, optimizer state and
/// quantization: mu.x, mu.y, l1, l2, l3, r, g, b.
inline constexpr std::size_t kParamsPerGaussian = 8;
using ParamVec = std::array<double, kParamsPerGaussian>;

/// One splat. Opacity is folded into `color`; there is no alpha channel.
struct Gaussian2D {
  Vec2 mu;
  Cholesky chol;
  Rgb color;

  ParamVec params() const;
  static Gaussian2D from_params(const ParamVec& p);
  bool operator==(const Gaussian2D&) const = default;
};

struct FrameDims {
  int width = 0;
  int height = 0;

  int max_side() const { return width > height ? width : height; }
  std::size_t pixel_count() const {
    return static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  }
  bool operator==(const FrameDims&) const = default;
};

/// Adam first/second moments per parameter, in the optimizer's internal
/// (reparametrized) coordinates.
struct OptimizerState {
  std::vector<ParamVec> first_moment;
  std::vector<ParamVec> second_moment;
  std::int64_t step = 0;

  bool empty() const { return first_moment.empty(); }
};

/// The per-frame collection of Gaussians. Storage order is irrelevant to the
/// rendered image but defines Gaussian IDs.
class GaussianSet {
 public:
  GaussianSet() = default;
  GaussianSet(FrameDims dims, std::vector<Gaussian2D> gaussians);

  FrameDims dims() const { return dims_; }
  std::size_t size() const { return gaussians_.size(); }
  bool empty() const { return gaussians_.empty(); }

  const std::vector<Gaussian2D>& gaussians() const { return gaussians_; }
  std::span<Gaussian2D> mutable_gaussians() { return gaussians_; }
  const Gaussian2D& operator[](std::size_t i) const { return gaussians_[i]; }

  const OptimizerState& optimizer_state() const { return optimizer_state_; }
  void set_optimizer_state(OptimizerState state) { optimizer_state_ = std::move(state); }

  /// FNV-1a digest over dims and every parameter's bit pattern.
  std::uint64_t fingerprint() const;

 private:
  FrameDims dims_;
  std::vector<Gaussian2D> gaussians_;
  OptimizerState optimizer_state_;
};

/// Sigma = L * L^T. Throws InvalidParameter unless l1 > 0 and l3 > 0.
Mat2Sym cov_from_chol(const Cholesky& l);

struct CholFromCovResult {
  Cholesky chol;
  /// True when the input was not SPD and a diagonal shift was applied.
  bool regularized = false;
};

/// Inverse of cov_from_chol. Non-SPD input is shifted by (eps + max(0,
/// -lambda_min)) * I before factorization instead of failing.
CholFromCovResult chol_from_cov(const Mat2Sym& cov, double eps = 1e-6);

/// Sigma^-1 in closed form from the Cholesky entries.
Mat2Sym inverse_cov(const Cholesky& l);

/// Diagonal regularizer used for degenerate segment covariances:
/// 1e-6 * max(width, height)^2.
double degenerate_cov_epsilon(FrameDims dims);

// Smooth positive reparametrization of l1 and l3 during optimization.
double softplus(double x);
double softplus_inverse(double y);
double softplus_derivative(double x);

}  // namespace gsvc
