// Copyright (C) 2026 The gsvc Authors
// SPDX-License-Identifier: Apache-2.0

// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// non-zero if any criterion fails. Pass criterion names (AC1 ... AC10) to
// run a subset.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "gsvc/bitsback.hpp"
#include "gsvc/bitstream.hpp"
#include "gsvc/error.hpp"
#include "gsvc/initializer.hpp"
#include "gsvc/io.hpp"
#include "gsvc/optimizer.hpp"
#include "gsvc/pframe.hpp"
#include "gsvc/pipeline.hpp"
#include "gsvc/quant.hpp"
#include "gsvc/rasterizer.hpp"
#include "reference.hpp"
#include "synthetic.hpp"

namespace {

using namespace gsvc;
using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string format(const char* fmt, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), fmt, args...);
  return buf;
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

void paint_disc(Image& img, double cx, double cy, double r, const std::array<double, 3>& color) {
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      const double dx = x + 0.5 - cx, dy = y + 0.5 - cy;
      if (dx * dx + dy * dy > r * r) continue;
      for (int c = 0; c < 3; ++c) img.at(x, y, c) = color[static_cast<std::size_t>(c)];
    }
  }
}

struct Fixture {
  std::string name;
  Image image;
};

// Three synthetic 128x128 frames of different character.
std::vector<Fixture> synthetic_fixtures() {
  const FrameDims dims{128, 128};
  std::vector<Fixture> out;
  out.push_back({"blocks", testing::block_image(dims, 16, 101)});

  Image shapes = testing::smooth_texture(dims, 202);
  testing::paint_square(shapes, 20, 24, 30, {0.9, 0.8, 0.1});
  testing::paint_square(shapes, 80, 70, 24, {0.1, 0.2, 0.8});
  paint_disc(shapes, 88, 32, 14, {0.85, 0.1, 0.3});
  paint_disc(shapes, 40, 96, 18, {0.2, 0.7, 0.3});
  out.push_back({"texture+shapes", std::move(shapes)});

  Image discs(dims, 0.0);
  for (int y = 0; y < 128; ++y) {
    for (int x = 0; x < 128; ++x) {
      discs.at(x, y, 0) = 0.15 + 0.6 * x / 127.0;
      discs.at(x, y, 1) = 0.2 + 0.5 * y / 127.0;
      discs.at(x, y, 2) = 0.6 - 0.4 * (x + y) / 254.0;
    }
  }
  std::mt19937_64 rng(303);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < 12; ++k) {
    paint_disc(discs, 10 + 108 * u(rng), 10 + 108 * u(rng), 5 + 12 * u(rng), {u(rng), u(rng), u(rng)});
  }
  out.push_back({"gradient+discs", std::move(discs)});
  return out;
}

std::vector<Fixture> natural_fixtures() {
  const std::string dir = GSVC_TEST_DATA_DIR;
  return {{"astronaut_face", read_image(dir + "/astronaut_face_128.ppm")},
          {"coffee_crop", read_image(dir + "/coffee_crop_128.ppm")}};
}

// ---------------------------------------------------------------------------

Outcome ac1_gradients() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(1);
  const FrameDims dims{16, 16};
  const Rasterizer raster({.cutoff = 9.0, .threads = 1});
  const RoiMask full = RoiMask::full(dims);
  int checked = 0, bad = 0;
  double worst = 0.0;
  for (int scene = 0; scene < 20; ++scene) {
    const GaussianSet set = testing::random_scene(rng, dims, 5);
    const Image target = testing::random_image(rng, dims, 0.0, 1.0);
    const LossAndGrad lg = loss_and_grad(raster, set, target, full);
    // Oracle: central differences of the MSE of the brute-force render.
    const auto numeric = testing::finite_difference_grad(set, 1e-3, [&](const GaussianSet& s) {
      const Image r = testing::reference_render(s);
      double sum = 0.0;
      for (std::size_t i = 0; i < r.data().size(); ++i) {
        const double d = r.data()[i] - target.data()[i];
        sum += d * d;
      }
      return sum / static_cast<double>(r.data().size());
    });
    for (std::size_t n = 0; n < set.size(); ++n) {
      for (std::size_t k = 0; k < kParamsPerGaussian; ++k) {
        ++checked;
        const double a = lg.grads[n][k], b = numeric[n][k];
        if (!testing::grad_close(a, b, 1e-3, 1e-6)) ++bad;
        worst = std::max(worst, std::abs(a - b));
      }
    }
  }
  const double secs = seconds_since(t0);
  return {bad == 0 && secs < 30.0,
          format("%d/%d partials within 1e-3 rel (1e-6 abs floor), max abs diff %.2e, %.1fs",
                 checked - bad, checked, worst, secs)};
}

Outcome ac2_rendering() {
  const Rasterizer raster({.threads = 1});
  const Rgb c{0.8, 0.4, 0.2};
  Gaussian2D g;
  g.mu = {10.5, 10.5};
  g.chol = {1.3, 0.4, 0.9};
  g.color = c;
  const Image at_mean = raster.render_unclamped(GaussianSet({21, 21}, {g}));
  double err = 0.0;
  for (int ch = 0; ch < 3; ++ch) err = std::max(err, std::abs(at_mean.at(10, 10, ch) - c[static_cast<std::size_t>(ch)]));

  // Move the mean so that pixel (10, 10) sits at sigma = ln 2 along x for an
  // axis-aligned Gaussian with l1 = 1.7.
  Gaussian2D h = g;
  h.chol = {1.7, 0.0, 1.1};
  h.mu = {10.5 - 1.7 * std::sqrt(2.0 * std::log(2.0)), 10.5};
  const Image half = raster.render_unclamped(GaussianSet({21, 21}, {h}));
  for (int ch = 0; ch < 3; ++ch) {
    err = std::max(err, std::abs(half.at(10, 10, ch) - c[static_cast<std::size_t>(ch)] / 2.0));
  }

  std::mt19937_64 rng(2);
  double perm = 0.0, tiles = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    const GaussianSet set = testing::random_scene(rng, {72, 56}, 60);
    const Image base = raster.render_unclamped(set);
    std::vector<Gaussian2D> shuffled = set.gaussians();
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    const Image p = raster.render_unclamped(GaussianSet(set.dims(), shuffled));
    for (std::size_t i = 0; i < base.data().size(); ++i) {
      perm = std::max(perm, std::abs(base.data()[i] - p.data()[i]));
    }
    for (int tile : {4, 8, 32, 64}) {
      const Image t = Rasterizer({.tile_size = tile, .threads = 2}).render_unclamped(set);
      for (std::size_t i = 0; i < base.data().size(); ++i) {
        tiles = std::max(tiles, std::abs(base.data()[i] - t.data()[i]));
      }
    }
  }
  return {err <= 1e-6 && perm <= 1e-6 && tiles <= 1e-6,
          format("analytic error %.1e, permutation %.1e, tile size %.1e (limit 1e-6)", err, perm,
                 tiles)};
}

Outcome ac3_initialization() {
  const int n = 200, iters = 200;
  FitConfig cfg;
  cfg.max_iters = iters;
  const Rasterizer raster({.threads = 0});
  std::string detail;
  bool pass = true;
  double min_gap = 1e9;
  for (const auto& fx : synthetic_fixtures()) {
    const RoiMask full = RoiMask::full(fx.image.dims());
    SuperpixelOptions so;
    so.n_segments = n;
    const GaussianSet sp =
        gaussians_from_segments(segment_superpixels(fx.image, full, so, &raster.pool()));
    const GaussianSet rnd = random_init(fx.image.dims(), n, 7);
    const double p_sp = fit(raster, sp, fx.image, full, cfg).report.final_psnr;
    const double p_rnd = fit(raster, rnd, fx.image, full, cfg).report.final_psnr;
    const double gap = p_sp - p_rnd;
    min_gap = std::min(min_gap, gap);
    pass = pass && gap >= 2.0;
    detail += format("%s %.2f vs %.2f dB; ", fx.name.c_str(), p_sp, p_rnd);
  }
  return {pass, detail + format("min gap %.2f dB (need >= 2)", min_gap)};
}

Outcome ac4_fitting() {
  const auto t0 = Clock::now();
  const Image img = natural_fixtures()[0].image;
  const RoiMask full = RoiMask::full(img.dims());
  const Rasterizer raster({.threads = 0});
  SuperpixelOptions so;
  so.n_segments = 500;
  const GaussianSet init =
      gaussians_from_segments(segment_superpixels(img, full, so, &raster.pool()));
  FitConfig cfg = preset_config("slow");
  cfg.target_psnr = 30.0;
  const FitResult r = fit(raster, init, img, full, cfg);
  return {r.report.final_psnr >= 30.0,
          format("astronaut_face 128x128, N=500 (%zu segments): %.2f dB after %d of %d iterations, %.1fs",
                 init.size(), r.report.final_psnr, r.report.iterations, cfg.max_iters,
                 seconds_since(t0))};
}

Outcome ac5_pframe() {
  const FrameDims dims{128, 128};
  const int n = 300, budget = 1000;
  const Image background = testing::smooth_texture(dims, 55, 3, 2.0);
  const auto frames = testing::moving_square(background, 2, 16, 40, 50, 4, 2);
  const RoiMask full = RoiMask::full(dims);
  const Rasterizer raster({.threads = 0});
  FitConfig cfg;
  cfg.max_iters = budget;

  auto intra = [&](const Image& frame) {
    SuperpixelOptions so;
    so.n_segments = n;
    const GaussianSet init =
        gaussians_from_segments(segment_superpixels(frame, full, so, &raster.pool()));
    const GaussianSet fitted = fit(raster, init, frame, full, cfg).set;
    const QuantSpec spec = calibrate_ptq(std::span<const GaussianSet>(&fitted, 1));
    return std::pair{fake_quantize(fitted, spec), spec};
  };

  const auto [reference, spec] = intra(frames[0]);
  const IndexedRender ref_render = render_indexed(raster, reference);
  PFrameOptions opts;
  opts.last_coded = &frames[0];
  const PFrameResult pr = encode_pframe(raster, reference, ref_render, frames[1], full, opts, cfg);

  // Brute-force oracle: every (changed pixel, Gaussian) pair.
  std::set<std::uint32_t> oracle;
  for (int y = 0; y < dims.height; ++y) {
    for (int x = 0; x < dims.width; ++x) {
      if (!pr.changes.at(x, y)) continue;
      for (std::uint32_t id = 0; id < reference.size(); ++id) {
        if (testing::reference_weight(reference[id], x, y) >= kDefaultInfluenceEps) oracle.insert(id);
      }
    }
  }
  const bool oracle_ok =
      std::vector<std::uint32_t>(oracle.begin(), oracle.end()) == pr.changed_ids;

  std::vector<std::uint8_t> selected(reference.size(), 0);
  for (auto id : pr.changed_ids) selected[id] = 1;
  bool untouched_ok = true;
  for (std::size_t i = 0; i < reference.size(); ++i) {
    if (!selected[i] && !(pr.set[i] == reference[i])) untouched_ok = false;
  }

  // Decoded P-frame: selected Gaussians quantized with the stream's spec.
  std::vector<Gaussian2D> decoded = reference.gaussians();
  for (auto id : pr.changed_ids) decoded[id] = dequantize_one(quantize_one(pr.set[id], spec, dims), spec, dims);
  const double p_psnr = psnr(raster.render(GaussianSet(dims, decoded)), frames[1]);
  const double full_psnr = psnr(raster.render(intra(frames[1]).first), frames[1]);

  const double fraction = static_cast<double>(pr.changed_ids.size()) / reference.size();
  const bool pass = fraction <= 0.25 && untouched_ok && oracle_ok && p_psnr >= full_psnr - 0.5;
  return {pass, format("selected %zu/%zu (%.1f%%), untouched identical: %s, oracle match: %s, "
                       "P-frame %.2f dB vs full refit %.2f dB",
                       pr.changed_ids.size(), reference.size(), 100.0 * fraction,
                       untouched_ok ? "yes" : "no", oracle_ok ? "yes" : "no", p_psnr, full_psnr)};
}

Outcome ac6_bitsback() {
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) sum += std::log2(static_cast<double>(k));
  const double expected = sum - std::log2(100.0);
  const SavingsReport r = bitsback_savings(100, 100, 4);
  const bool pass = std::abs(r.per_pframe_bits - expected) <= 1e-6 && r.pframes == 75 &&
                    std::abs(r.total_bits - 38859.0) < 1.0 && bitsback_per_pframe(1) == 0.0;
  return {pass, format("S_P=%.6f (oracle %.6f), %llu P-frames, S_total=%.2f, S_P(1)=%g",
                       r.per_pframe_bits, expected, static_cast<unsigned long long>(r.pframes),
                       r.total_bits, bitsback_per_pframe(1))};
}

Outcome ac7_transport() {
  std::mt19937_64 rng(7);
  int exact = 0;
  const int trials = 1000;
  for (int t = 0; t < trials; ++t) {
    const FrameDims dims{8 + static_cast<int>(rng() % 120), 8 + static_cast<int>(rng() % 120)};
    const int n = 1 + static_cast<int>(rng() % 64);
    const GaussianSet set = testing::random_scene(rng, dims, n);
    QuantSpec base;
    base.bits_mu = 2 + static_cast<int>(rng() % 15);
    base.bits_chol = 2 + static_cast<int>(rng() % 15);
    base.bits_color = 2 + static_cast<int>(rng() % 15);
    const QuantSpec spec = calibrate_ptq(std::span<const GaussianSet>(&set, 1), base);
    const QuantizedSet q = quantize(set, spec);

    Bitstream s;
    s.header.dims = dims;
    s.header.gop = 2;
    s.header.n_gaussians = static_cast<std::uint32_t>(n);
    s.header.quant_spec = spec;
    s.header.frame_count = 2;
    FrameContent intra;
    intra.symbols = q.symbols;
    FrameContent pred;
    for (int id = 0; id < n; ++id) {
      if (rng() % 4 == 0) {
        pred.ids.push_back(static_cast<std::uint32_t>(id));
        pred.symbols.push_back(q.symbols[static_cast<std::size_t>(id)]);
      }
    }
    s.frames = {{FrameType::kIntra, encode_frame(intra, FrameType::kIntra, s.header)},
                {FrameType::kPredicted, encode_frame(pred, FrameType::kPredicted, s.header)}};
    const Bitstream back = deserialize(serialize(s));
    const FrameContent i2 = decode_frame(back.frames[0].payload, FrameType::kIntra, back.header, 0, 0);
    const FrameContent p2 = decode_frame(back.frames[1].payload, FrameType::kPredicted, back.header,
                                         static_cast<std::size_t>(n), 1);
    const GaussianSet deq = dequantize({dims, i2.symbols}, back.header.quant_spec);
    if (i2 == intra && p2 == pred && quantize(deq, back.header.quant_spec) == q) ++exact;
  }

  // Truncations of a real encoded stream.
  VideoInput v;
  v.frames = testing::moving_square(testing::smooth_texture({40, 32}, 9), 4, 8, 4, 4, 3, 1);
  EncodeOptions o;
  o.fit.max_iters = 30;
  o.n_gaussians = 30;
  o.gop = 2;
  o.threads = 1;
  const auto bytes = encode_video(v, o).bytes;
  int typed = 0, cuts = 0;
  for (std::size_t cut = 0; cut < bytes.size(); ++cut, ++cuts) {
    try {
      decode_video(std::span(bytes).first(cut), 1);
    } catch (const StreamError&) {
      ++typed;
    } catch (...) {
    }
  }
  return {exact == trials && typed == cuts,
          format("%d/%d round trips bit-exact, %d/%d truncations raised StreamError", exact, trials,
                 typed, cuts)};
}

Outcome ac8_quantization() {
  std::vector<Fixture> fixtures = synthetic_fixtures();
  for (auto& f : natural_fixtures()) fixtures.push_back(std::move(f));
  EncodeOptions o;
  o.n_gaussians = 300;
  o.threads = 0;
  bool pass = true;
  std::string detail;
  for (const auto& fx : fixtures) {
    VideoInput v;
    v.frames = {fx.image};
    double p[3];
    const QuantMode modes[3] = {QuantMode::kNone, QuantMode::kPtq, QuantMode::kQat};
    for (int m = 0; m < 3; ++m) {
      o.quant = modes[m];
      p[m] = encode_video(v, o).metrics.frames[0].psnr_full;
    }
    const bool ok = p[0] - p[1] <= 1.5 && p[2] >= p[1];
    pass = pass && ok;
    detail += format("%s float %.3f / ptq %.3f / qat %.3f%s; ", fx.name.c_str(), p[0], p[1], p[2],
                     ok ? "" : " (!)");
  }
  detail.resize(detail.size() - 2);
  return {pass, detail};
}

Outcome ac9_bpp() {
  const FrameDims dims{96, 96};
  VideoInput v;
  v.frames = testing::moving_square(testing::smooth_texture(dims, 909, 3, 2.0), 16, 10, 20, 30, 1, 1);
  EncodeOptions o;
  o.n_gaussians = 200;
  o.fit.max_iters = 300;
  o.gop = 4;
  o.threads = 0;
  const EncodeResult gop = encode_video(v, o);
  o.gop = 1;
  const EncodeResult all_i = encode_video(v, o);

  double i_bits = 0.0, p_bits = 0.0;
  int i_count = 0, p_count = 0;
  for (const auto& f : gop.metrics.frames) {
    // Frame 0 also carries the header; count only its record here.
    const double bits = static_cast<double>(f.bits) -
                        (f.frame == 0 ? header_size(gop.stream.header) * 8.0 : 0.0);
    (f.type == FrameType::kIntra ? i_bits : p_bits) += bits;
    (f.type == FrameType::kIntra ? i_count : p_count)++;
  }
  const double mean_i = i_bits / i_count, mean_p = p_bits / p_count;
  const bool pass = mean_p < 0.5 * mean_i && gop.metrics.bpp() < all_i.metrics.bpp();
  return {pass, format("mean P %.0f bits vs mean I %.0f bits (ratio %.3f); bpp K=4 %.4f vs all-I "
                       "%.4f; PSNR %.2f vs %.2f dB",
                       mean_p, mean_i, mean_p / mean_i, gop.metrics.bpp(), all_i.metrics.bpp(),
                       gop.metrics.mean_psnr_full(), all_i.metrics.mean_psnr_full())};
}

Outcome ac10_determinism() {
  const FrameDims dims{64, 64};
  VideoInput v;
  v.frames = testing::moving_square(testing::smooth_texture(dims, 1010), 5, 12, 10, 10, 3, 2);
  RoiMask m(dims, false);
  for (int y = 4; y < 60; ++y)
    for (int x = 8; x < 56; ++x) m.set(x, y, true);
  v.masks = {m};
  EncodeOptions o;
  o.n_gaussians = 120;
  o.fit.max_iters = 200;
  o.gop = 3;
  o.seed = 42;
  std::vector<std::vector<std::uint8_t>> streams;
  for (unsigned threads : {1u, 1u, 2u, 4u}) {
    o.threads = threads;
    streams.push_back(encode_video(v, o).bytes);
  }
  o.init = InitKind::kRandom;
  o.threads = 1;
  const auto r1 = encode_video(v, o).bytes;
  o.threads = 3;
  const auto r3 = encode_video(v, o).bytes;
  bool same = r1 == r3;
  for (const auto& s : streams) same = same && s == streams[0];
  return {same, format("%zu-byte stream identical across 2 runs and 1/2/4 threads; random-init "
                       "stream identical across 1/3 threads: %s",
                       streams[0].size(), r1 == r3 ? "yes" : "no")};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"AC1", ac1_gradients},   {"AC2", ac2_rendering},     {"AC3", ac3_initialization},
      {"AC4", ac4_fitting},     {"AC5", ac5_pframe},        {"AC6", ac6_bitsback},
      {"AC7", ac7_transport},   {"AC8", ac8_quantization},  {"AC9", ac9_bpp},
      {"AC10", ac10_determinism}};
  std::set<std::string> only(argv + 1, argv + argc);
  int failures = 0;
  for (const auto& [name, run] : criteria) {
    if (!only.empty() && !only.count(name)) continue;
    const auto t0 = Clock::now();
    Outcome out;
    try {
      out = run();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    std::printf("%s %s %s [%.1fs]\n", name.c_str(), out.pass ? "PASS" : "FAIL", out.detail.c_str(),
                seconds_since(t0));
    std::fflush(stdout);
    if (!out.pass) ++failures;
  }
  return failures == 0 ? 0 : 1;
}
