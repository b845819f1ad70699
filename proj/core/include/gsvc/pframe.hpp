// Copyright (C) 2026 The gsvc Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "gsvc/gaussian.hpp"
#include "gsvc/image.hpp"
#include "gsvc/optimizer.hpp"
#include "gsvc/rasterizer.hpp"

namespace gsvc {

inline constexpr double kDefaultInfluenceEps = 0.01;
inline constexpr double kDefaultChangeThreshold = 10.0 / 255.0;

/// Pixel -> Gaussian IDs with exp(-sigma) >= influence_eps, in ascending ID
/// order. Lists are grouped per tile; `at` resolves a pixel in O(1).
class PixelGaussianIndex {
 public:
  PixelGaussianIndex() = default;

  FrameDims dims() const { return dims_; }
  double influence_eps() const { return eps_; }
  /// Fingerprint of the GaussianSet the index was built from.
  std::uint64_t source_fingerprint() const { return fingerprint_; }
  std::span<const std::uint32_t> at(int x, int y) const {
    const std::size_t p = static_cast<std::size_t>(y) * static_cast<std::size_t>(dims_.width) +
                          static_cast<std::size_t>(x);
    return {ids_.data() + start_[p], count_[p]};
  }
  std::size_t entry_count() const { return ids_.size(); }

 private:
  friend struct IndexBuilder;
  FrameDims dims_;
  double eps_ = kDefaultInfluenceEps;
  std::uint64_t fingerprint_ = 0;
  std::vector<std::uint32_t> ids_;
  std::vector<std::size_t> start_;
  std::vector<std::uint32_t> count_;
};

/// A render and the index produced by the same pass.
struct IndexedRender {
  Image image;  // clamped to [0,1]
  PixelGaussianIndex index;
};

/// Renders `set` (identical to Rasterizer::render) and records the index on
/// the way. Throws InvalidParameter unless 0 < influence_eps < 1.
IndexedRender render_indexed(const Rasterizer& raster, const GaussianSet& set,
                             double influence_eps = kDefaultInfluenceEps);

PixelGaussianIndex build_index(const Rasterizer& raster, const GaussianSet& set,
                               double influence_eps = kDefaultInfluenceEps);

struct ChangeMap {
  FrameDims dims;
  std::vector<std::uint8_t> changed;
  std::size_t count = 0;

  bool at(int x, int y) const {
    return changed[static_cast<std::size_t>(y) * static_cast<std::size_t>(dims.width) +
                   static_cast<std::size_t>(x)] != 0;
  }
};

/// Pixel is changed when it is in the ROI and the largest per-channel
/// absolute difference exceeds tau.
ChangeMap change_map(const Image& current, const Image& reference_render, const RoiMask& mask,
                     double tau);

/// Grows the changed region by one pixel (3x3), staying inside the ROI.
ChangeMap dilate(const ChangeMap& cm, const RoiMask& mask);

/// Sorted union of the index lists over changed pixels. Throws StaleIndex
/// when `idx` was not built from `reference`.
std::vector<std::uint32_t> select_gaussians(const ChangeMap& cm, const PixelGaussianIndex& idx,
                                            const GaussianSet& reference);

struct PFrameOptions {
  double tau = kDefaultChangeThreshold;
  bool dilate = true;
  /// When set, a pixel must also differ from this image by more than tau
  /// (before dilation). Encoders pass the source each pixel was last coded
  /// from, so residual fit error on static content is not re-fitted.
  const Image* last_coded = nullptr;
};

struct PFrameResult {
  GaussianSet set;
  std::vector<std::uint32_t> changed_ids;
  FitReport report;
  std::size_t changed_pixels = 0;
  ChangeMap changes;  // after gating and dilation
};

/// Re-fits only the Gaussians that influence pixels whose value moved away
/// from the reference render. All other Gaussians are copied bit-exactly.
PFrameResult encode_pframe(const Rasterizer& raster, const GaussianSet& reference,
                           const IndexedRender& reference_render, const Image& current,
                           const RoiMask& mask, const PFrameOptions& options, FitConfig cfg);

}  // namespace gsvc
