// Copyright (C) 2026 The gsvc Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "gsvc/gaussian.hpp"
#include "gsvc/image.hpp"
#include "gsvc/parallel.hpp"

namespace gsvc {

struct Segment {
  std::size_t pixel_count = 0;
  Vec2 centroid;        // mean pixel-center position
  Mat2Sym covariance;   // population covariance of pixel-center positions
  Rgb mean_color;
};

struct SuperpixelSegmentation {
  static constexpr std::int32_t kNoSegment = -1;

  FrameDims dims;
  /// Row-major; kNoSegment outside the ROI.
  std::vector<std::int32_t> labels;
  std::vector<Segment> segments;

  std::int32_t label_at(int x, int y) const {
    return labels[static_cast<std::size_t>(y) * static_cast<std::size_t>(dims.width) +
                  static_cast<std::size_t>(x)];
  }
};

struct SuperpixelOptions {
  int n_segments = 500;
  /// Weight m of the spatial term: D^2 = d_rgb^2 + (d_xy / S)^2 * m^2 with
  /// colors on a 0..255 scale and S the seed grid step.
  double compactness = 10.0;
  int kmeans_iters = 10;
};

/// K-means superpixels in (x, y, r, g, b) over the ROI pixels only. Seeds
/// sit on a uniform grid over the ROI bounding box (off-ROI seeds snap to
/// the nearest ROI pixel of their cell). Each pixel compares against the
/// centers within one grid step on both axes; empty clusters are re-seeded
/// at the pixel farthest from its center. Throws InvalidParameter on an
/// empty mask or when n_segments exceeds the ROI pixel count.
SuperpixelSegmentation segment_superpixels(const Image& frame, const RoiMask& mask,
                                           const SuperpixelOptions& options,
                                           WorkerPool* pool = nullptr);

enum class SegmentScale : std::uint8_t {
  /// Covariance of the segment's pixel centers as is.
  kCovariance = 0,
  /// Covariance scaled so the Gaussian integrates to the segment's pixel
  /// count. A tiling of such Gaussians renders its mean colors at roughly
  /// unit exposure; the raw covariance reaches about half.
  kArea = 1,
};

/// One Gaussian per segment: mean at the centroid, Cholesky factor of the
/// spatial covariance (regularized when degenerate, then scaled per `scale`)
/// and the mean color.
GaussianSet gaussians_from_segments(const SuperpixelSegmentation& seg,
                                    SegmentScale scale = SegmentScale::kArea);

/// Baseline: uniform positions and colors, isotropic-ish covariances with
/// variance on the order of frame_area / n. Deterministic per seed.
GaussianSet random_init(FrameDims dims, int n, std::uint64_t seed);

}  // namespace gsvc
