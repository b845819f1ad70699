// Copyright (C) 2026 The gsvc Authors
// SPDX-License-Identifier: Apache-2.0

#include "gsvc/gaussian.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <string>

#include "gsvc/error.hpp"

namespace gsvc {

ParamVec Gaussian2D::params() const {
  return {mu.x, mu.y, chol.l1, chol.l2, chol.l3, color.r, color.g, color.b};
}

Gaussian2D Gaussian2D::from_params(const ParamVec& p) {
  return Gaussian2D{{p[0], p[1]}, {p[2], p[3], p[4]}, {p[5], p[6], p[7]}};
}

GaussianSet::GaussianSet(FrameDims dims, std::vector<Gaussian2D> gaussians)
    : dims_(dims), gaussians_(std::move(gaussians)) {
  if (dims.width <= 0 || dims.height <= 0) {
    throw InvalidParameter("GaussianSet: frame dimensions must be positive");
  }
}

std::uint64_t GaussianSet::fingerprint() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](std::uint64_t v) {
    for (int i = 0; i < 8; ++i) {
      h ^= (v >> (8 * i)) & 0xFFu;
      h *= 0x100000001b3ULL;
    }
  };
  mix(static_cast<std::uint64_t>(dims_.width));
  mix(static_cast<std::uint64_t>(dims_.height));
  mix(gaussians_.size());
  for (const auto& g : gaussians_) {
    for (double v : g.params()) mix(std::bit_cast<std::uint64_t>(v));
  }
  return h;
}

Mat2Sym cov_from_chol(const Cholesky& l) {
  if (!(l.l1 > 0.0) || !(l.l3 > 0.0)) {
    throw InvalidParameter("cov_from_chol: diagonal entries must be positive (l1=" +
                           std::to_string(l.l1) + ", l3=" + std::to_string(l.l3) + ")");
  }
  return {l.l1 * l.l1, l.l1 * l.l2, l.l2 * l.l2 + l.l3 * l.l3};
}

CholFromCovResult chol_from_cov(const Mat2Sym& cov, double eps) {
  Mat2Sym s = cov;
  CholFromCovResult out;
  if (!s.is_spd() || !std::isfinite(s.det())) {
    const double half_gap = std::sqrt(0.25 * (s.xx - s.yy) * (s.xx - s.yy) + s.xy * s.xy);
    const double lambda_min = 0.5 * s.trace() - half_gap;
    const double shift = eps + std::max(0.0, -lambda_min);
    s.xx += shift;
    s.yy += shift;
    out.regularized = true;
  }
  const double l1 = std::sqrt(s.xx);
  const double l2 = s.xy / l1;
  // det > 0 guarantees yy - l2^2 = det / xx > 0 up to rounding
  const double schur = s.det() / s.xx;
  const double l3 = std::sqrt(schur > 0.0 ? schur : eps);
  out.chol = {l1, l2, l3};
  return out;
}

Mat2Sym inverse_cov(const Cholesky& l) {
  // (L L^T)^-1 = 1/(l1^2 l3^2) * [[l2^2 + l3^2, -l1 l2], [-l1 l2, l1^2]]
  const double inv_l1 = 1.0 / l.l1;
  const double inv_l3 = 1.0 / l.l3;
  const double inv_l3_sq = inv_l3 * inv_l3;
  return {inv_l1 * inv_l1 * (1.0 + l.l2 * l.l2 * inv_l3_sq), -l.l2 * inv_l1 * inv_l3_sq,
          inv_l3_sq};
}

double degenerate_cov_epsilon(FrameDims dims) {
  const double side = static_cast<double>(dims.max_side());
  return 1e-6 * side * side;
}

double softplus(double x) {
  if (x > 30.0) return x;
  return std::log1p(std::exp(x));
}

double softplus_inverse(double y) {
  if (y > 30.0) return y;
  return std::log(std::expm1(y));
}

double softplus_derivative(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace gsvc
