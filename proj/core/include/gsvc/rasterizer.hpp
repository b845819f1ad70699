// Copyright (C) 2026 The gsvc Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "gsvc/gaussian.hpp"
#include "gsvc/image.hpp"
#include "gsvc/parallel.hpp"

namespace gsvc {

/// Half-open pixel rectangle [x0, x1) x [y0, y1). Pixel (x, y) has its
/// center at (x + 0.5, y + 0.5).
struct PixelRect {
  int x0 = 0;
  int y0 = 0;
  int x1 = 0;
  int y1 = 0;

  bool empty() const { return x0 >= x1 || y0 >= y1; }
  bool contains(int x, int y) const { return x >= x0 && x < x1 && y >= y0 && y < y1; }
  PixelRect intersect(const PixelRect& o) const;
  bool operator==(const PixelRect&) const = default;
};

inline constexpr double kDefaultCutoff = 3.0;

/// Per-axis half widths cutoff * sqrt(Sigma_xx), cutoff * sqrt(Sigma_yy).
/// The ellipse at Mahalanobis radius `cutoff` lies inside this box.
Vec2 footprint_half_extent(const Gaussian2D& g, double cutoff);

/// Pixels whose centers lie inside mu +/- footprint_half_extent, clipped to
/// the frame. Empty when the box misses the frame.
PixelRect footprint(const Gaussian2D& g, double cutoff, FrameDims dims);

/// Square tiles with the IDs of every Gaussian whose footprint touches the
/// tile, stored in ascending ID order.
class TileGrid {
 public:
  TileGrid() = default;
  TileGrid(FrameDims dims, int tile_size, std::span<const PixelRect> footprints);

  int tile_size() const { return tile_size_; }
  int tiles_x() const { return tiles_x_; }
  int tiles_y() const { return tiles_y_; }
  std::size_t tile_count() const { return static_cast<std::size_t>(tiles_x_) * tiles_y_; }

  PixelRect tile_rect(std::size_t tile) const;
  std::span<const std::uint32_t> gaussians_in(std::size_t tile) const {
    return {ids_.data() + offsets_[tile], offsets_[tile + 1] - offsets_[tile]};
  }
  /// Offset of the tile's first entry in the flattened (tile, id) list.
  std::size_t entry_offset(std::size_t tile) const { return offsets_[tile]; }
  std::size_t entry_count() const { return ids_.size(); }

 private:
  FrameDims dims_;
  int tile_size_ = 16;
  int tiles_x_ = 0;
  int tiles_y_ = 0;
  std::vector<std::size_t> offsets_;
  std::vector<std::uint32_t> ids_;
};

struct PreparedGaussian {
  Vec2 mu;
  Cholesky chol;
  Mat2Sym inv_cov;
  Rgb color;
  PixelRect rect;
};

/// Per-pass precomputation: inverse covariances, footprints, tile binning.
struct PreparedScene {
  FrameDims dims;
  std::vector<PreparedGaussian> gaussians;
  TileGrid grid;
};

/// Exponent 0.5 * d^T A d for d = (dx, dy) and A = inv_cov.
inline double mahalanobis_half(const Mat2Sym& a, double dx, double dy) {
  return 0.5 * (a.xx * dx * dx + 2.0 * a.xy * dx * dy + a.yy * dy * dy);
}

struct RasterOptions {
  int tile_size = 16;
  double cutoff = kDefaultCutoff;
  /// Worker threads including the caller; 0 means hardware concurrency.
  unsigned threads = 0;
};

/// Process-wide pass counters, used to check that decoding never runs a
/// gradient pass.
struct RasterCounters {
  std::atomic<std::uint64_t> forward{0};
  std::atomic<std::uint64_t> backward{0};
};
RasterCounters& raster_counters();

/// Accumulated-summation renderer: C(p) = sum_n c_n * exp(-sigma_n(p)),
/// summed per pixel in ascending Gaussian ID, so output bits do not depend
/// on tile size or worker count.
class Rasterizer {
 public:
  explicit Rasterizer(RasterOptions options = {});

  const RasterOptions& options() const { return options_; }
  WorkerPool& pool() const { return *pool_; }

  /// `cutoff` <= 0 uses options().cutoff.
  PreparedScene prepare(const GaussianSet& set, double cutoff = 0.0) const;

  Image render_unclamped(const PreparedScene& scene) const;
  Image render_unclamped(const GaussianSet& set) const { return render_unclamped(prepare(set)); }
  /// Output image, clamped to [0,1].
  Image render(const GaussianSet& set) const { return render_unclamped(set).clamped(); }

  /// dLoss/dparams for every Gaussian given dLoss/dC per pixel and channel
  /// (of the unclamped render). Layout follows ParamVec.
  std::vector<ParamVec> backward(const PreparedScene& scene, const Image& loss_grad) const;
  std::vector<ParamVec> backward(const GaussianSet& set, const Image& loss_grad) const {
    return backward(prepare(set), loss_grad);
  }

 private:
  RasterOptions options_;
  std::shared_ptr<WorkerPool> pool_;
};

}  // namespace gsvc
