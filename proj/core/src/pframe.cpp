// Copyright (C) 2026 The gsvc Authors
// SPDX-License-Identifier: Apache-2.0

#include "gsvc/pframe.hpp"

#include <algorithm>
#include <cmath>

#include "gsvc/error.hpp"

namespace gsvc {

struct IndexBuilder {
  static IndexedRender run(const Rasterizer& raster, const GaussianSet& set, double eps) {
    if (!(eps > 0.0 && eps < 1.0)) {
      throw InvalidParameter("influence_eps must lie in (0, 1)");
    }
    const FrameDims dims = set.dims();
    const double render_cutoff = raster.options().cutoff;
    // exp(-sigma) >= eps  <=>  Mahalanobis radius <= sqrt(2 ln(1/eps)).
    const double index_cutoff = std::max(render_cutoff, std::sqrt(2.0 * std::log(1.0 / eps)));
    const double sigma_max = std::log(1.0 / eps);
    const PreparedScene scene = raster.prepare(set, index_cutoff);
    std::vector<PixelRect> render_rects(set.size());
    for (std::size_t i = 0; i < set.size(); ++i) {
      render_rects[i] = footprint(set[i], render_cutoff, dims);
    }

    raster_counters().forward.fetch_add(1, std::memory_order_relaxed);
    const std::size_t tiles = scene.grid.tile_count();
    std::vector<std::vector<std::uint32_t>> tile_ids(tiles);
    std::vector<std::vector<std::uint32_t>> tile_counts(tiles);
    Image out(dims, 0.0);
    const int width = dims.width;

    raster.pool().parallel_for(tiles, [&](std::size_t t) {
      const PixelRect tile = scene.grid.tile_rect(t);
      const int tw = tile.x1 - tile.x0;
      const std::size_t npx = static_cast<std::size_t>(tw) * static_cast<std::size_t>(tile.y1 - tile.y0);
      std::vector<double> acc(npx * 3, 0.0);
      std::vector<std::vector<std::uint32_t>> lists(npx);
      for (std::uint32_t id : scene.grid.gaussians_in(t)) {
        const PreparedGaussian& g = scene.gaussians[id];
        const PixelRect& rr = render_rects[id];
        const PixelRect r = g.rect.intersect(tile);
        for (int y = r.y0; y < r.y1; ++y) {
          const double dy = y + 0.5 - g.mu.y;
          for (int x = r.x0; x < r.x1; ++x) {
            const double dx = x + 0.5 - g.mu.x;
            const double sigma = mahalanobis_half(g.inv_cov, dx, dy);
            const double w = std::exp(-sigma);
            const std::size_t local =
                static_cast<std::size_t>(y - tile.y0) * static_cast<std::size_t>(tw) +
                static_cast<std::size_t>(x - tile.x0);
            if (rr.contains(x, y)) {
              acc[local * 3 + 0] += g.color.r * w;
              acc[local * 3 + 1] += g.color.g * w;
              acc[local * 3 + 2] += g.color.b * w;
            }
            if (sigma <= sigma_max && w >= eps) lists[local].push_back(id);
          }
        }
      }
      auto& data = out.data();
      for (int y = tile.y0; y < tile.y1; ++y) {
        for (int x = tile.x0; x < tile.x1; ++x) {
          const std::size_t local =
              static_cast<std::size_t>(y - tile.y0) * static_cast<std::size_t>(tw) +
              static_cast<std::size_t>(x - tile.x0);
          double* dst = data.data() + (static_cast<std::size_t>(y) * width + x) * 3;
          for (int c = 0; c < 3; ++c) dst[c] = std::clamp(acc[local * 3 + c], 0.0, 1.0);
        }
      }
      auto& ids = tile_ids[t];
      auto& counts = tile_counts[t];
      counts.resize(npx);
      for (std::size_t p = 0; p < npx; ++p) {
        counts[p] = static_cast<std::uint32_t>(lists[p].size());
        ids.insert(ids.end(), lists[p].begin(), lists[p].end());
      }
    });

    IndexedRender result{std::move(out), {}};
    PixelGaussianIndex& idx = result.index;
    idx.dims_ = dims;
    idx.eps_ = eps;
    idx.fingerprint_ = set.fingerprint();
    idx.start_.assign(dims.pixel_count(), 0);
    idx.count_.assign(dims.pixel_count(), 0);
    std::size_t total = 0;
    for (const auto& v : tile_ids) total += v.size();
    idx.ids_.reserve(total);
    for (std::size_t t = 0; t < tiles; ++t) {
      const PixelRect tile = scene.grid.tile_rect(t);
      std::size_t offset = idx.ids_.size();
      std::size_t local = 0;
      for (int y = tile.y0; y < tile.y1; ++y) {
        for (int x = tile.x0; x < tile.x1; ++x, ++local) {
          const std::size_t p = static_cast<std::size_t>(y) * static_cast<std::size_t>(width) +
                                static_cast<std::size_t>(x);
          idx.start_[p] = offset;
          idx.count_[p] = tile_counts[t][local];
          offset += tile_counts[t][local];
        }
      }
      idx.ids_.insert(idx.ids_.end(), tile_ids[t].begin(), tile_ids[t].end());
    }
    return result;
  }
};

IndexedRender render_indexed(const Rasterizer& raster, const GaussianSet& set,
                             double influence_eps) {
  return IndexBuilder::run(raster, set, influence_eps);
}

PixelGaussianIndex build_index(const Rasterizer& raster, const GaussianSet& set,
                               double influence_eps) {
  return IndexBuilder::run(raster, set, influence_eps).index;
}

ChangeMap change_map(const Image& current, const Image& reference_render, const RoiMask& mask,
                     double tau) {
  if (current.dims() != reference_render.dims() || mask.dims() != current.dims()) {
    throw InvalidParameter("change_map: dimension mismatch");
  }
  if (!(tau >= 0.0 && tau <= 1.0)) throw InvalidParameter("change_map: tau must lie in [0, 1]");
  ChangeMap cm{current.dims(), std::vector<std::uint8_t>(current.dims().pixel_count(), 0), 0};
  const auto& a = current.data();
  const auto& b = reference_render.data();
  for (std::size_t p = 0; p < cm.changed.size(); ++p) {
    if (!mask.bits()[p]) continue;
    double diff = 0.0;
    for (std::size_t c = 0; c < 3; ++c) diff = std::max(diff, std::abs(a[p * 3 + c] - b[p * 3 + c]));
    if (diff > tau) {
      cm.changed[p] = 1;
      ++cm.count;
    }
  }
  return cm;
}

ChangeMap dilate(const ChangeMap& cm, const RoiMask& mask) {
  if (mask.dims() != cm.dims) throw InvalidParameter("dilate: dimension mismatch");
  ChangeMap out{cm.dims, std::vector<std::uint8_t>(cm.changed.size(), 0), 0};
  const int w = cm.dims.width, h = cm.dims.height;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!mask.at(x, y)) continue;
      bool hit = false;
      for (int yy = std::max(0, y - 1); yy <= std::min(h - 1, y + 1) && !hit; ++yy) {
        for (int xx = std::max(0, x - 1); xx <= std::min(w - 1, x + 1); ++xx) {
          if (cm.at(xx, yy)) {
            hit = true;
            break;
          }
        }
      }
      if (hit) {
        out.changed[static_cast<std::size_t>(y) * w + x] = 1;
        ++out.count;
      }
    }
  }
  return out;
}

std::vector<std::uint32_t> select_gaussians(const ChangeMap& cm, const PixelGaussianIndex& idx,
                                            const GaussianSet& reference) {
  if (idx.source_fingerprint() != reference.fingerprint() || idx.dims() != reference.dims()) {
    throw StaleIndex("select_gaussians: index was built from a different Gaussian set");
  }
  if (cm.dims != idx.dims()) throw InvalidParameter("select_gaussians: dimension mismatch");
  std::vector<std::uint8_t> hit(reference.size(), 0);
  for (int y = 0; y < cm.dims.height; ++y) {
    for (int x = 0; x < cm.dims.width; ++x) {
      if (!cm.at(x, y)) continue;
      for (std::uint32_t id : idx.at(x, y)) hit[id] = 1;
    }
  }
  std::vector<std::uint32_t> ids;
  for (std::uint32_t i = 0; i < hit.size(); ++i) {
    if (hit[i]) ids.push_back(i);
  }
  return ids;
}

PFrameResult encode_pframe(const Rasterizer& raster, const GaussianSet& reference,
                           const IndexedRender& reference_render, const Image& current,
                           const RoiMask& mask, const PFrameOptions& options, FitConfig cfg) {
  ChangeMap cm = change_map(current, reference_render.image, mask, options.tau);
  if (options.last_coded) {
    const ChangeMap moved = change_map(current, *options.last_coded, mask, options.tau);
    cm.count = 0;
    for (std::size_t p = 0; p < cm.changed.size(); ++p) {
      cm.changed[p] = cm.changed[p] && moved.changed[p];
      cm.count += cm.changed[p];
    }
  }
  if (options.dilate) cm = dilate(cm, mask);
  PFrameResult result{reference, select_gaussians(cm, reference_render.index, reference), {},
                      cm.count, cm};
  cfg.active_set = result.changed_ids;
  FitResult fitted = fit(raster, reference, current, mask, cfg);
  result.set = std::move(fitted.set);
  result.report = std::move(fitted.report);
  return result;
}

}  // namespace gsvc
