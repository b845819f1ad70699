// Copyright (C) 2026 The gsvc Authors
// SPDX-License-Identifier: Apache-2.0

#include "gsvc/rasterizer.hpp"

#include <algorithm>
#include <cmath>

#include "gsvc/error.hpp"

namespace gsvc {

namespace {

int clamped_floor(double v, int lo, int hi) {
  if (!(v > lo)) return lo;  // also catches NaN
  if (v >= hi) return hi;
  return static_cast<int>(std::floor(v));
}

int clamped_ceil(double v, int lo, int hi) {
  if (!(v > lo)) return lo;
  if (v >= hi) return hi;
  return static_cast<int>(std::ceil(v));
}

// Per-entry backward partials, reduced per Gaussian after the tile pass.
struct EntryGrad {
  double mu_x = 0.0;
  double mu_y = 0.0;
  double g_xx = 0.0;  // sum dL/dsigma * dx^2 / 2
  double g_xy = 0.0;  // sum dL/dsigma * dx * dy
  double g_yy = 0.0;  // sum dL/dsigma * dy^2 / 2
  double r = 0.0;
  double g = 0.0;
  double b = 0.0;
};

}  // namespace

PixelRect PixelRect::intersect(const PixelRect& o) const {
  return {std::max(x0, o.x0), std::max(y0, o.y0), std::min(x1, o.x1), std::min(y1, o.y1)};
}

Vec2 footprint_half_extent(const Gaussian2D& g, double cutoff) {
  const Mat2Sym cov = cov_from_chol(g.chol);
  return {cutoff * std::sqrt(cov.xx), cutoff * std::sqrt(cov.yy)};
}

PixelRect footprint(const Gaussian2D& g, double cutoff, FrameDims dims) {
  const Vec2 half = footprint_half_extent(g, cutoff);
  PixelRect r;
  r.x0 = clamped_ceil(g.mu.x - half.x - 0.5, 0, dims.width);
  r.x1 = clamped_floor(g.mu.x + half.x - 0.5, -1, dims.width - 1) + 1;
  r.y0 = clamped_ceil(g.mu.y - half.y - 0.5, 0, dims.height);
  r.y1 = clamped_floor(g.mu.y + half.y - 0.5, -1, dims.height - 1) + 1;
  if (r.empty()) return {};
  return r;
}

TileGrid::TileGrid(FrameDims dims, int tile_size, std::span<const PixelRect> footprints)
    : dims_(dims), tile_size_(tile_size) {
  if (tile_size <= 0) throw InvalidParameter("TileGrid: tile size must be positive");
  tiles_x_ = (dims.width + tile_size - 1) / tile_size;
  tiles_y_ = (dims.height + tile_size - 1) / tile_size;
  const std::size_t tiles = tile_count();

  std::vector<std::size_t> counts(tiles + 1, 0);
  auto for_each_tile = [&](const PixelRect& r, auto&& fn) {
    if (r.empty()) return;
    const int tx0 = r.x0 / tile_size, tx1 = (r.x1 - 1) / tile_size;
    const int ty0 = r.y0 / tile_size, ty1 = (r.y1 - 1) / tile_size;
    for (int ty = ty0; ty <= ty1; ++ty) {
      for (int tx = tx0; tx <= tx1; ++tx) {
        fn(static_cast<std::size_t>(ty) * tiles_x_ + static_cast<std::size_t>(tx));
      }
    }
  };
  for (const auto& r : footprints) for_each_tile(r, [&](std::size_t t) { ++counts[t + 1]; });
  offsets_.assign(tiles + 1, 0);
  for (std::size_t t = 0; t < tiles; ++t) offsets_[t + 1] = offsets_[t] + counts[t + 1];
  ids_.resize(offsets_[tiles]);
  std::vector<std::size_t> cursor(offsets_.begin(), offsets_.end() - 1);
  for (std::size_t id = 0; id < footprints.size(); ++id) {
    for_each_tile(footprints[id],
                  [&](std::size_t t) { ids_[cursor[t]++] = static_cast<std::uint32_t>(id); });
  }
}

PixelRect TileGrid::tile_rect(std::size_t tile) const {
  const int tx = static_cast<int>(tile % static_cast<std::size_t>(tiles_x_));
  const int ty = static_cast<int>(tile / static_cast<std::size_t>(tiles_x_));
  return {tx * tile_size_, ty * tile_size_, std::min(dims_.width, (tx + 1) * tile_size_),
          std::min(dims_.height, (ty + 1) * tile_size_)};
}

RasterCounters& raster_counters() {
  static RasterCounters counters;
  return counters;
}

Rasterizer::Rasterizer(RasterOptions options)
    : options_(options), pool_(std::make_shared<WorkerPool>(options.threads)) {
  if (options_.tile_size <= 0) throw InvalidParameter("Rasterizer: tile size must be positive");
  if (!(options_.cutoff > 0.0)) throw InvalidParameter("Rasterizer: cutoff must be positive");
}

PreparedScene Rasterizer::prepare(const GaussianSet& set, double cutoff) const {
  if (cutoff <= 0.0) cutoff = options_.cutoff;
  PreparedScene scene;
  scene.dims = set.dims();
  scene.gaussians.resize(set.size());
  std::vector<PixelRect> rects(set.size());
  for (std::size_t i = 0; i < set.size(); ++i) {
    const Gaussian2D& g = set[i];
    auto& p = scene.gaussians[i];
    p.mu = g.mu;
    p.chol = g.chol;
    p.inv_cov = inverse_cov(g.chol);
    p.color = g.color;
    p.rect = footprint(g, cutoff, scene.dims);
    rects[i] = p.rect;
  }
  scene.grid = TileGrid(scene.dims, options_.tile_size, rects);
  return scene;
}

Image Rasterizer::render_unclamped(const PreparedScene& scene) const {
  raster_counters().forward.fetch_add(1, std::memory_order_relaxed);
  Image out(scene.dims, 0.0);
  const int width = scene.dims.width;
  pool_->parallel_for(scene.grid.tile_count(), [&](std::size_t t) {
    const PixelRect tile = scene.grid.tile_rect(t);
    const int tw = tile.x1 - tile.x0;
    std::vector<double> acc(static_cast<std::size_t>(tw * (tile.y1 - tile.y0)) * 3, 0.0);
    for (std::uint32_t id : scene.grid.gaussians_in(t)) {
      const PreparedGaussian& g = scene.gaussians[id];
      const PixelRect r = g.rect.intersect(tile);
      for (int y = r.y0; y < r.y1; ++y) {
        const double dy = y + 0.5 - g.mu.y;
        double* row = acc.data() + static_cast<std::size_t>((y - tile.y0) * tw) * 3;
        for (int x = r.x0; x < r.x1; ++x) {
          const double dx = x + 0.5 - g.mu.x;
          const double w = std::exp(-mahalanobis_half(g.inv_cov, dx, dy));
          double* px = row + static_cast<std::size_t>(x - tile.x0) * 3;
          px[0] += g.color.r * w;
          px[1] += g.color.g * w;
          px[2] += g.color.b * w;
        }
      }
    }
    auto& data = out.data();
    for (int y = tile.y0; y < tile.y1; ++y) {
      const double* src = acc.data() + static_cast<std::size_t>((y - tile.y0) * tw) * 3;
      double* dst = data.data() + (static_cast<std::size_t>(y) * width + tile.x0) * 3;
      std::copy(src, src + static_cast<std::size_t>(tw) * 3, dst);
    }
  });
  return out;
}

std::vector<ParamVec> Rasterizer::backward(const PreparedScene& scene,
                                           const Image& loss_grad) const {
  if (loss_grad.dims() != scene.dims) {
    throw InvalidParameter("Rasterizer::backward: gradient image dimensions differ");
  }
  raster_counters().backward.fetch_add(1, std::memory_order_relaxed);
  std::vector<EntryGrad> partial(scene.grid.entry_count());
  const auto& grad = loss_grad.data();
  const int width = scene.dims.width;

  pool_->parallel_for(scene.grid.tile_count(), [&](std::size_t t) {
    const PixelRect tile = scene.grid.tile_rect(t);
    const auto ids = scene.grid.gaussians_in(t);
    EntryGrad* out = partial.data() + scene.grid.entry_offset(t);
    for (std::size_t e = 0; e < ids.size(); ++e) {
      const PreparedGaussian& g = scene.gaussians[ids[e]];
      const PixelRect r = g.rect.intersect(tile);
      const Mat2Sym& a = g.inv_cov;
      EntryGrad acc;
      for (int y = r.y0; y < r.y1; ++y) {
        const double dy = y + 0.5 - g.mu.y;
        for (int x = r.x0; x < r.x1; ++x) {
          const double dx = x + 0.5 - g.mu.x;
          const double w = std::exp(-mahalanobis_half(a, dx, dy));
          const double* gp = grad.data() + (static_cast<std::size_t>(y) * width + x) * 3;
          acc.r += gp[0] * w;
          acc.g += gp[1] * w;
          acc.b += gp[2] * w;
          const double dl_dw = gp[0] * g.color.r + gp[1] * g.color.g + gp[2] * g.color.b;
          const double dl_dsigma = -w * dl_dw;
          // dsigma/dmu = -A d
          acc.mu_x -= dl_dsigma * (a.xx * dx + a.xy * dy);
          acc.mu_y -= dl_dsigma * (a.xy * dx + a.yy * dy);
          acc.g_xx += dl_dsigma * 0.5 * dx * dx;
          acc.g_xy += dl_dsigma * dx * dy;
          acc.g_yy += dl_dsigma * 0.5 * dy * dy;
        }
      }
      out[e] = acc;
    }
  });

  std::vector<EntryGrad> sums(scene.gaussians.size());
  for (std::size_t t = 0; t < scene.grid.tile_count(); ++t) {
    const auto ids = scene.grid.gaussians_in(t);
    const EntryGrad* in = partial.data() + scene.grid.entry_offset(t);
    for (std::size_t e = 0; e < ids.size(); ++e) {
      EntryGrad& s = sums[ids[e]];
      s.mu_x += in[e].mu_x;
      s.mu_y += in[e].mu_y;
      s.g_xx += in[e].g_xx;
      s.g_xy += in[e].g_xy;
      s.g_yy += in[e].g_yy;
      s.r += in[e].r;
      s.g += in[e].g;
      s.b += in[e].b;
    }
  }

  // Chain rule through A = (L L^T)^-1 with
  // A_xx = (l2^2 + l3^2) / (l1^2 l3^2), A_xy = -l2 / (l1 l3^2), A_yy = 1 / l3^2.
  std::vector<ParamVec> grads(scene.gaussians.size());
  for (std::size_t i = 0; i < sums.size(); ++i) {
    const EntryGrad& s = sums[i];
    const Mat2Sym& a = scene.gaussians[i].inv_cov;
    const auto [l1, l2, l3] = scene.gaussians[i].chol;
    const double dxx_dl1 = -2.0 * a.xx / l1;
    const double dxx_dl2 = 2.0 * l2 / (l1 * l1 * l3 * l3);
    const double dxx_dl3 = -2.0 * l2 * l2 / (l1 * l1 * l3 * l3 * l3);
    const double dxy_dl1 = -a.xy / l1;
    const double dxy_dl2 = -1.0 / (l1 * l3 * l3);
    const double dxy_dl3 = -2.0 * a.xy / l3;
    const double dyy_dl3 = -2.0 / (l3 * l3 * l3);
    grads[i] = {s.mu_x,
                s.mu_y,
                s.g_xx * dxx_dl1 + s.g_xy * dxy_dl1,
                s.g_xx * dxx_dl2 + s.g_xy * dxy_dl2,
                s.g_xx * dxx_dl3 + s.g_xy * dxy_dl3 + s.g_yy * dyy_dl3,
                s.r,
                s.g,
                s.b};
  }
  return grads;
}

}  // namespace gsvc
