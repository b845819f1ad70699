// Copyright (C) 2026 The gsvc Authors
// SPDX-License-Identifier: Apache-2.0

#include "gsvc/initializer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <string>

#include "gsvc/error.hpp"

namespace gsvc {

namespace {

constexpr double kColorScale = 255.0;

struct Feature {
  double x, y, r, g, b;
};

struct Center {
  Feature f;
};

struct Bounds {
  int x0, y0, x1, y1;  // half-open
};

Bounds roi_bounds(const RoiMask& mask) {
  const FrameDims d = mask.dims();
  Bounds b{d.width, d.height, 0, 0};
  for (int y = 0; y < d.height; ++y) {
    for (int x = 0; x < d.width; ++x) {
      if (!mask.at(x, y)) continue;
      b.x0 = std::min(b.x0, x);
      b.y0 = std::min(b.y0, y);
      b.x1 = std::max(b.x1, x + 1);
      b.y1 = std::max(b.y1, y + 1);
    }
  }
  return b;
}

// One seed per grid cell of size `step` over the bounding box that contains
// at least one ROI pixel: the cell-center pixel if it is in the ROI,
// otherwise the ROI pixel of the cell nearest to that center.
std::vector<std::size_t> grid_seeds(const RoiMask& mask, const Bounds& b, double step) {
  const int width = mask.dims().width;
  const int nx = static_cast<int>(std::ceil((b.x1 - b.x0) / step));
  const int ny = static_cast<int>(std::ceil((b.y1 - b.y0) / step));
  std::vector<std::size_t> seeds;
  for (int cy = 0; cy < ny; ++cy) {
    const int py0 = b.y0 + static_cast<int>(std::ceil(cy * step - 1e-9));
    const int py1 = std::min(b.y1, b.y0 + static_cast<int>(std::ceil((cy + 1) * step - 1e-9)));
    for (int cx = 0; cx < nx; ++cx) {
      const int px0 = b.x0 + static_cast<int>(std::ceil(cx * step - 1e-9));
      const int px1 =
          std::min(b.x1, b.x0 + static_cast<int>(std::ceil((cx + 1) * step - 1e-9)));
      if (px0 >= px1 || py0 >= py1) continue;
      const double mx = b.x0 + (cx + 0.5) * step;
      const double my = b.y0 + (cy + 0.5) * step;
      double best = std::numeric_limits<double>::infinity();
      std::size_t best_idx = 0;
      for (int y = py0; y < py1; ++y) {
        for (int x = px0; x < px1; ++x) {
          if (!mask.at(x, y)) continue;
          const double dx = x + 0.5 - mx, dy = y + 0.5 - my;
          const double d = dx * dx + dy * dy;
          if (d < best) {
            best = d;
            best_idx = static_cast<std::size_t>(y) * width + static_cast<std::size_t>(x);
          }
        }
      }
      if (std::isfinite(best)) seeds.push_back(best_idx);
    }
  }
  return seeds;
}

std::uint64_t splitmix(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

SuperpixelSegmentation segment_superpixels(const Image& frame, const RoiMask& mask,
                                           const SuperpixelOptions& options, WorkerPool* pool) {
  const FrameDims dims = frame.dims();
  if (mask.dims() != dims) throw InvalidParameter("segment_superpixels: mask dimensions differ");
  if (options.n_segments < 1) throw InvalidParameter("segment_superpixels: n_segments must be >= 1");
  if (options.kmeans_iters < 0) throw InvalidParameter("segment_superpixels: negative kmeans_iters");
  if (!(options.compactness > 0.0)) {
    throw InvalidParameter("segment_superpixels: compactness must be positive");
  }

  std::vector<std::size_t> roi;
  for (std::size_t p = 0; p < dims.pixel_count(); ++p) {
    if (mask.bits()[p]) roi.push_back(p);
  }
  if (roi.empty()) throw InvalidParameter("segment_superpixels: ROI mask is empty");
  if (static_cast<std::size_t>(options.n_segments) > roi.size()) {
    throw InvalidParameter("segment_superpixels: n_segments (" +
                           std::to_string(options.n_segments) + ") exceeds ROI pixel count (" +
                           std::to_string(roi.size()) + ")");
  }

  const int width = dims.width;
  auto feature_of = [&](std::size_t p) {
    const int x = static_cast<int>(p % static_cast<std::size_t>(width));
    const int y = static_cast<int>(p / static_cast<std::size_t>(width));
    return Feature{x + 0.5, y + 0.5, frame.at(x, y, 0) * kColorScale,
                   frame.at(x, y, 1) * kColorScale, frame.at(x, y, 2) * kColorScale};
  };

  // Grow the grid step from slightly below sqrt(area / n) until the seed
  // count fits the budget.
  const Bounds bounds = roi_bounds(mask);
  double step = 0.9 * std::sqrt(static_cast<double>(roi.size()) / options.n_segments);
  std::vector<std::size_t> seeds = grid_seeds(mask, bounds, step);
  while (seeds.size() > static_cast<std::size_t>(options.n_segments)) {
    step *= 1.01;
    seeds = grid_seeds(mask, bounds, step);
  }
  const double search = std::max(step, 1.0);
  const double spatial_weight = options.compactness / step;
  const double spatial_weight_sq = spatial_weight * spatial_weight;

  std::vector<Center> centers;
  for (std::size_t s : seeds) centers.push_back({feature_of(s)});

  auto distance_sq = [&](const Feature& a, const Feature& c) {
    const double dr = a.r - c.r, dg = a.g - c.g, db = a.b - c.b;
    const double dx = a.x - c.x, dy = a.y - c.y;
    return dr * dr + dg * dg + db * db + (dx * dx + dy * dy) * spatial_weight_sq;
  };

  std::vector<Feature> features(roi.size());
  for (std::size_t i = 0; i < roi.size(); ++i) features[i] = feature_of(roi[i]);

  std::vector<std::int32_t> assign(roi.size(), -1);
  std::vector<double> assign_dist(roi.size(), 0.0);

  auto assign_all = [&] {
    // Bucket centers on a grid of cell size `search`; a center within
    // `search` of a pixel on both axes is at most one bucket away.
    const int bx = std::max(1, static_cast<int>(std::ceil(dims.width / search)));
    const int by = std::max(1, static_cast<int>(std::ceil(dims.height / search)));
    std::vector<std::vector<std::int32_t>> buckets(static_cast<std::size_t>(bx) * by);
    auto bucket_of = [&](double v, int n) {
      return std::clamp(static_cast<int>(std::floor(v / search)), 0, n - 1);
    };
    for (std::size_t c = 0; c < centers.size(); ++c) {
      const int cx = bucket_of(centers[c].f.x, bx), cy = bucket_of(centers[c].f.y, by);
      buckets[static_cast<std::size_t>(cy) * bx + cx].push_back(static_cast<std::int32_t>(c));
    }
    constexpr std::size_t kChunk = 1024;
    const std::size_t chunks = (roi.size() + kChunk - 1) / kChunk;
    auto work = [&](std::size_t chunk) {
      const std::size_t end = std::min(roi.size(), (chunk + 1) * kChunk);
      for (std::size_t i = chunk * kChunk; i < end; ++i) {
        const Feature& f = features[i];
        const int cx = bucket_of(f.x, bx), cy = bucket_of(f.y, by);
        double best = std::numeric_limits<double>::infinity();
        std::int32_t best_c = -1;
        for (int yy = std::max(0, cy - 1); yy <= std::min(by - 1, cy + 1); ++yy) {
          for (int xx = std::max(0, cx - 1); xx <= std::min(bx - 1, cx + 1); ++xx) {
            for (std::int32_t c : buckets[static_cast<std::size_t>(yy) * bx + xx]) {
              const Feature& cf = centers[static_cast<std::size_t>(c)].f;
              if (std::abs(cf.x - f.x) > search || std::abs(cf.y - f.y) > search) continue;
              const double d = distance_sq(f, cf);
              if (d < best || (d == best && c < best_c)) {
                best = d;
                best_c = c;
              }
            }
          }
        }
        if (best_c < 0) {
          // Centers drifted away: fall back to the global nearest center.
          for (std::size_t c = 0; c < centers.size(); ++c) {
            const double d = distance_sq(f, centers[c].f);
            if (d < best) {
              best = d;
              best_c = static_cast<std::int32_t>(c);
            }
          }
        }
        assign[i] = best_c;
        assign_dist[i] = best;
      }
    };
    if (pool) {
      pool->parallel_for(chunks, work);
    } else {
      for (std::size_t c = 0; c < chunks; ++c) work(c);
    }
  };

  for (int iter = 0; iter < options.kmeans_iters; ++iter) {
    assign_all();
    std::vector<Feature> sums(centers.size(), Feature{0, 0, 0, 0, 0});
    std::vector<std::size_t> counts(centers.size(), 0);
    for (std::size_t i = 0; i < roi.size(); ++i) {
      const auto c = static_cast<std::size_t>(assign[i]);
      sums[c].x += features[i].x;
      sums[c].y += features[i].y;
      sums[c].r += features[i].r;
      sums[c].g += features[i].g;
      sums[c].b += features[i].b;
      ++counts[c];
    }
    std::vector<std::size_t> empties;
    for (std::size_t c = 0; c < centers.size(); ++c) {
      if (counts[c] == 0) {
        empties.push_back(c);
        continue;
      }
      const double inv = 1.0 / static_cast<double>(counts[c]);
      centers[c].f = {sums[c].x * inv, sums[c].y * inv, sums[c].r * inv, sums[c].g * inv,
                      sums[c].b * inv};
    }
    if (!empties.empty()) {
      // Farthest pixels first; ties by pixel order.
      std::vector<std::size_t> order(roi.size());
      for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
      std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return assign_dist[a] > assign_dist[b];
      });
      for (std::size_t e = 0; e < empties.size() && e < order.size(); ++e) {
        centers[empties[e]].f = features[order[e]];
      }
    }
  }
  assign_all();

  // Compact labels so that every segment is non-empty.
  std::vector<std::int32_t> remap(centers.size(), -1);
  std::int32_t next = 0;
  for (std::size_t i = 0; i < roi.size(); ++i) {
    auto& r = remap[static_cast<std::size_t>(assign[i])];
    if (r < 0) r = next++;
  }

  SuperpixelSegmentation seg;
  seg.dims = dims;
  seg.labels.assign(dims.pixel_count(), SuperpixelSegmentation::kNoSegment);
  seg.segments.resize(static_cast<std::size_t>(next));
  std::vector<Feature> sums(seg.segments.size(), Feature{0, 0, 0, 0, 0});
  for (std::size_t i = 0; i < roi.size(); ++i) {
    const std::int32_t label = remap[static_cast<std::size_t>(assign[i])];
    seg.labels[roi[i]] = label;
    auto& s = sums[static_cast<std::size_t>(label)];
    const Feature& f = features[i];
    s.x += f.x;
    s.y += f.y;
    s.r += f.r;
    s.g += f.g;
    s.b += f.b;
    ++seg.segments[static_cast<std::size_t>(label)].pixel_count;
  }
  for (std::size_t k = 0; k < seg.segments.size(); ++k) {
    auto& s = seg.segments[k];
    const double inv = 1.0 / static_cast<double>(s.pixel_count);
    s.centroid = {sums[k].x * inv, sums[k].y * inv};
    s.mean_color = {sums[k].r * inv / kColorScale, sums[k].g * inv / kColorScale,
                    sums[k].b * inv / kColorScale};
  }
  for (std::size_t i = 0; i < roi.size(); ++i) {
    auto& s = seg.segments[static_cast<std::size_t>(seg.labels[roi[i]])];
    const double dx = features[i].x - s.centroid.x;
    const double dy = features[i].y - s.centroid.y;
    s.covariance.xx += dx * dx;
    s.covariance.xy += dx * dy;
    s.covariance.yy += dy * dy;
  }
  for (auto& s : seg.segments) {
    const double inv = 1.0 / static_cast<double>(s.pixel_count);
    s.covariance = {s.covariance.xx * inv, s.covariance.xy * inv, s.covariance.yy * inv};
  }
  return seg;
}

GaussianSet gaussians_from_segments(const SuperpixelSegmentation& seg, SegmentScale scale) {
  if (seg.segments.empty()) throw InvalidParameter("gaussians_from_segments: no segments");
  const double eps = degenerate_cov_epsilon(seg.dims);
  std::vector<Gaussian2D> gs;
  gs.reserve(seg.segments.size());
  for (const auto& s : seg.segments) {
    Cholesky l = chol_from_cov(s.covariance, eps).chol;
    if (scale == SegmentScale::kArea) {
      // Integral of exp(-sigma) is 2 pi sqrt(det Sigma) = 2 pi l1 l3.
      const double gain = std::sqrt(static_cast<double>(s.pixel_count) /
                                    (2.0 * std::numbers::pi * l.l1 * l.l3));
      l = {l.l1 * gain, l.l2 * gain, l.l3 * gain};
    }
    gs.push_back(Gaussian2D{s.centroid, l, s.mean_color});
  }
  return GaussianSet(seg.dims, std::move(gs));
}

GaussianSet random_init(FrameDims dims, int n, std::uint64_t seed) {
  if (n < 1) throw InvalidParameter("random_init: n must be >= 1");
  std::uint64_t state = seed;
  auto unit = [&] { return static_cast<double>(splitmix(state) >> 11) * 0x1.0p-53; };
  auto between = [&](double lo, double hi) { return lo + (hi - lo) * unit(); };
  const double area = static_cast<double>(dims.pixel_count());
  const double sigma = std::sqrt(area / (std::numbers::pi * n));
  std::vector<Gaussian2D> gs(static_cast<std::size_t>(n));
  for (auto& g : gs) {
    g.mu = {between(0.0, dims.width), between(0.0, dims.height)};
    g.chol = {sigma * between(0.5, 1.5), sigma * between(-0.3, 0.3), sigma * between(0.5, 1.5)};
    g.color = {unit(), unit(), unit()};
  }
  return GaussianSet(dims, std::move(gs));
}

}  // namespace gsvc
