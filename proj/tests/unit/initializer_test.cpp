// Copyright (C) 2026 The gsvc Authors
// SPDX-License-Identifier: Apache-2.0

#include "gsvc/initializer.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <set>

#include "gsvc/error.hpp"
#include "gsvc/optimizer.hpp"
#include "gsvc/rasterizer.hpp"
#include "reference.hpp"

namespace gsvc {
namespace {

void fill_rect(Image& img, int x0, int y0, int x1, int y1, Rgb c) {
  for (int y = y0; y < y1; ++y)
    for (int x = x0; x < x1; ++x)
      for (int k = 0; k < 3; ++k) img.at(x, y, k) = c[static_cast<std::size_t>(k)];
}

void check_partition(const SuperpixelSegmentation& seg, const RoiMask& mask) {
  std::vector<std::size_t> counts(seg.segments.size(), 0);
  for (int y = 0; y < seg.dims.height; ++y) {
    for (int x = 0; x < seg.dims.width; ++x) {
      const auto label = seg.label_at(x, y);
      if (!mask.at(x, y)) {
        EXPECT_EQ(label, SuperpixelSegmentation::kNoSegment);
        continue;
      }
      ASSERT_GE(label, 0);
      ASSERT_LT(static_cast<std::size_t>(label), seg.segments.size());
      ++counts[static_cast<std::size_t>(label)];
    }
  }
  for (std::size_t k = 0; k < counts.size(); ++k) {
    EXPECT_GT(counts[k], 0u);
    EXPECT_EQ(counts[k], seg.segments[k].pixel_count);
  }
}

TEST(Superpixels, UniformRoiSingleSegment) {
  const FrameDims dims{20, 12};
  const Image img(dims, 0.3);
  const RoiMask mask = RoiMask::full(dims);
  const auto seg = segment_superpixels(img, mask, {1, 10.0, 10});
  ASSERT_EQ(seg.segments.size(), 1u);
  EXPECT_EQ(seg.segments[0].pixel_count, dims.pixel_count());
  check_partition(seg, mask);
}

TEST(Superpixels, TwoSeparatedBlobsSplitPerBlob) {
  const FrameDims dims{40, 20};
  Image img(dims, 0.0);
  fill_rect(img, 2, 4, 12, 14, {0.9, 0.2, 0.2});
  fill_rect(img, 28, 4, 38, 14, {0.1, 0.3, 0.8});
  RoiMask mask(dims, false);
  for (int y = 4; y < 14; ++y) {
    for (int x = 2; x < 12; ++x) mask.set(x, y, true);
    for (int x = 28; x < 38; ++x) mask.set(x, y, true);
  }
  const auto seg = segment_superpixels(img, mask, {2, 40.0, 10});
  ASSERT_EQ(seg.segments.size(), 2u);
  check_partition(seg, mask);
  // Exhaustive check: every pixel of a blob shares the blob's label and the
  // two blobs differ.
  const auto left = seg.label_at(2, 4), right = seg.label_at(28, 4);
  EXPECT_NE(left, right);
  for (int y = 4; y < 14; ++y) {
    for (int x = 2; x < 12; ++x) EXPECT_EQ(seg.label_at(x, y), left);
    for (int x = 28; x < 38; ++x) EXPECT_EQ(seg.label_at(x, y), right);
  }
}

TEST(Superpixels, OnePixelPerSegmentAtLimit) {
  const FrameDims dims{9, 7};
  std::mt19937_64 rng(5);
  const Image img = testing::random_image(rng, dims, 0.0, 1.0);
  RoiMask mask(dims, false);
  int roi = 0;
  for (int y = 1; y < 6; ++y)
    for (int x = 2; x < 8; ++x)
      if ((x + y) % 3 != 0) {
        mask.set(x, y, true);
        ++roi;
      }
  const auto seg = segment_superpixels(img, mask, {roi, 10.0, 10});
  EXPECT_EQ(seg.segments.size(), static_cast<std::size_t>(roi));
  for (const auto& s : seg.segments) EXPECT_EQ(s.pixel_count, 1u);
  check_partition(seg, mask);
}

TEST(Superpixels, PartitionAndBudgetOnIrregularRoi) {
  const FrameDims dims{64, 48};
  std::mt19937_64 rng(6);
  const Image img = testing::random_image(rng, dims, 0.0, 1.0);
  RoiMask mask(dims, false);
  for (int y = 0; y < 48; ++y)
    for (int x = 0; x < 64; ++x)
      if (std::hypot(x - 30.0, y - 22.0) < 18.0 || (x > 50 && y < 10)) mask.set(x, y, true);
  for (int n : {1, 7, 50, 200}) {
    const auto seg = segment_superpixels(img, mask, {n, 10.0, 10});
    EXPECT_LE(seg.segments.size(), static_cast<std::size_t>(n));
    EXPECT_GE(seg.segments.size(), static_cast<std::size_t>(n) / 2);
    check_partition(seg, mask);
  }
}

TEST(Superpixels, ThreadCountDoesNotChangeLabels) {
  const FrameDims dims{48, 40};
  std::mt19937_64 rng(7);
  const Image img = testing::random_image(rng, dims, 0.0, 1.0);
  const RoiMask mask = RoiMask::full(dims);
  WorkerPool pool(3);
  const auto a = segment_superpixels(img, mask, {60, 10.0, 10});
  const auto b = segment_superpixels(img, mask, {60, 10.0, 10}, &pool);
  EXPECT_EQ(a.labels, b.labels);
}

TEST(Superpixels, Errors) {
  const FrameDims dims{8, 8};
  const Image img(dims, 0.5);
  EXPECT_THROW(segment_superpixels(img, RoiMask(dims, false), {1, 10, 10}), InvalidParameter);
  RoiMask small(dims, false);
  small.set(1, 1, true);
  small.set(2, 1, true);
  EXPECT_THROW(segment_superpixels(img, small, {3, 10, 10}), InvalidParameter);
  EXPECT_THROW(segment_superpixels(img, small, {0, 10, 10}), InvalidParameter);
}

SuperpixelSegmentation single_segment(FrameDims dims, const std::vector<std::pair<int, int>>& px,
                                      Rgb color) {
  Image img(dims, 0.0);
  RoiMask mask(dims, false);
  for (auto [x, y] : px) {
    mask.set(x, y, true);
    for (int k = 0; k < 3; ++k) img.at(x, y, k) = color[static_cast<std::size_t>(k)];
  }
  return segment_superpixels(img, mask, {1, 10.0, 10});
}

TEST(GaussiansFromSegments, UniformSquare) {
  std::vector<std::pair<int, int>> px;
  for (int y = 5; y < 15; ++y)
    for (int x = 3; x < 13; ++x) px.emplace_back(x, y);
  const auto seg = single_segment({32, 32}, px, {0.5, 0.5, 0.5});
  const GaussianSet s = gaussians_from_segments(seg, SegmentScale::kCovariance);
  ASSERT_EQ(s.size(), 1u);
  EXPECT_NEAR(s[0].mu.x, 8.0, 1e-12);
  EXPECT_NEAR(s[0].mu.y, 10.0, 1e-12);
  const Mat2Sym cov = cov_from_chol(s[0].chol);
  EXPECT_NEAR(cov.xx, 99.0 / 12.0, 1e-9);
  EXPECT_NEAR(cov.yy, 99.0 / 12.0, 1e-9);
  EXPECT_NEAR(cov.xy, 0.0, 1e-9);
  EXPECT_NEAR(s[0].color.r, 0.5, 1e-12);
}

TEST(GaussiansFromSegments, SinglePixelIsRegularized) {
  const auto seg = single_segment({16, 16}, {{4, 9}}, {0.2, 0.4, 0.6});
  const GaussianSet s = gaussians_from_segments(seg, SegmentScale::kCovariance);
  ASSERT_EQ(s.size(), 1u);
  EXPECT_EQ(s[0].mu, (Vec2{4.5, 9.5}));
  EXPECT_GT(s[0].chol.l1, 0.0);
  EXPECT_GT(s[0].chol.l3, 0.0);
  const Mat2Sym cov = cov_from_chol(s[0].chol);
  EXPECT_LT(cov.xx, 1e-2);
  EXPECT_NEAR(s[0].color.b, 0.6, 1e-12);
}

TEST(GaussiansFromSegments, HorizontalLineGetsEpsilonMinorAxis) {
  const FrameDims dims{32, 16};
  std::vector<std::pair<int, int>> px;
  for (int x = 4; x < 20; ++x) px.emplace_back(x, 7);
  const auto seg = single_segment(dims, px, {1, 1, 1});
  const GaussianSet s = gaussians_from_segments(seg, SegmentScale::kCovariance);
  const Mat2Sym cov = cov_from_chol(s[0].chol);
  const double eps = degenerate_cov_epsilon(dims);
  EXPECT_NEAR(cov.xx, (16.0 * 16.0 - 1.0) / 12.0 + eps, 1e-9);
  EXPECT_NEAR(cov.yy, eps, eps * 1e-3);
}

TEST(GaussiansFromSegments, AreaScaleIntegratesToPixelCount) {
  std::vector<std::pair<int, int>> px;
  for (int y = 5; y < 15; ++y)
    for (int x = 3; x < 13; ++x) px.emplace_back(x, y);
  const auto seg = single_segment({32, 32}, px, {0.5, 0.5, 0.5});
  const Gaussian2D raw = gaussians_from_segments(seg, SegmentScale::kCovariance)[0];
  const Gaussian2D g = gaussians_from_segments(seg, SegmentScale::kArea)[0];
  EXPECT_EQ(g.mu, raw.mu);
  EXPECT_EQ(g.color, raw.color);
  const Mat2Sym cov = cov_from_chol(g.chol);
  EXPECT_NEAR(2.0 * std::numbers::pi * std::sqrt(cov.det()), 100.0, 1e-9);
  // Isotropic square: the scale is 12 / (2 pi) on the variance.
  EXPECT_NEAR(cov.xx / cov_from_chol(raw.chol).xx, 100.0 / 99.0 * 12.0 / (2.0 * std::numbers::pi),
              1e-9);
}

TEST(RandomInit, Deterministic) {
  const auto a = random_init({100, 80}, 50, 42);
  const auto b = random_init({100, 80}, 50, 42);
  const auto c = random_init({100, 80}, 50, 43);
  EXPECT_EQ(a.gaussians(), b.gaussians());
  EXPECT_NE(a.gaussians(), c.gaussians());
}

TEST(RandomInit, SingleGaussianInsideFrame) {
  const auto s = random_init({100, 100}, 1, 7);
  ASSERT_EQ(s.size(), 1u);
  EXPECT_GE(s[0].mu.x, 0.0);
  EXPECT_LT(s[0].mu.x, 100.0);
  EXPECT_GE(s[0].mu.y, 0.0);
  EXPECT_LT(s[0].mu.y, 100.0);
  for (std::size_t c = 0; c < 3; ++c) {
    EXPECT_GE(s[0].color[c], 0.0);
    EXPECT_LE(s[0].color[c], 1.0);
  }
  EXPECT_THROW(random_init({10, 10}, 0, 1), InvalidParameter);
}

// Piecewise-constant fixture: a grid of colored blocks.
Image block_image(FrameDims dims, int block, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Image img(dims, 0.0);
  for (int by = 0; by < dims.height; by += block)
    for (int bx = 0; bx < dims.width; bx += block)
      fill_rect(img, bx, by, std::min(bx + block, dims.width), std::min(by + block, dims.height),
                {testing::uniform(rng, 0.1, 0.9), testing::uniform(rng, 0.1, 0.9),
                 testing::uniform(rng, 0.1, 0.9)});
  return img;
}

TEST(Initialization, SuperpixelBeatsRandomAtInit) {
  const FrameDims dims{64, 64};
  const Rasterizer r({16, kDefaultCutoff, 1});
  for (std::uint64_t seed : {1, 2, 3}) {
    const Image img = block_image(dims, 8, seed);
    const RoiMask mask = RoiMask::full(dims);
    const auto seg = segment_superpixels(img, mask, {64, 10.0, 10});
    const GaussianSet sp = gaussians_from_segments(seg);
    const GaussianSet rnd = random_init(dims, static_cast<int>(sp.size()), seed);
    const double p_sp = psnr(r.render(sp), img);
    const double p_rnd = psnr(r.render(rnd), img);
    EXPECT_GE(p_sp, p_rnd + 3.0) << "seed " << seed;
  }
}

}  // namespace
}  // namespace gsvc
