// Copyright (C) 2026 The gsvc Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gsvc/bitstream.hpp"
#include "gsvc/image.hpp"
#include "gsvc/optimizer.hpp"
#include "gsvc/pframe.hpp"
#include "gsvc/quant.hpp"

namespace gsvc {

enum class InitKind : std::uint8_t { kSuperpixel = 0, kRandom = 1 };

InitKind parse_init_kind(std::string_view text);
std::string_view to_string(InitKind kind);

struct EncodeOptions {
  FitConfig fit = preset_config("fast");
  /// P-frame iteration budget; 0 reuses fit.max_iters.
  int pframe_iters = 0;
  int n_gaussians = 500;
  double compactness = 10.0;
  InitKind init = InitKind::kSuperpixel;
  std::uint32_t gop = 4;
  double tau = kDefaultChangeThreshold;
  bool dilate = true;
  double influence_eps = kDefaultInfluenceEps;
  QuantMode quant = QuantMode::kPtq;
  int bits_mu = 16;
  int bits_chol = 6;
  int bits_color = 8;
  /// QAT: fraction of each fit run in float before quantization enters.
  /// The default matches the second learning-rate milestone, so the
  /// quantized phase is the final low-rate stretch.
  double qat_warmup = 0.85;
  std::uint64_t seed = 0;
  /// Non-ROI fill; defaults to the mean non-ROI color of the first frame.
  std::optional<std::array<std::uint8_t, 3>> background;
  /// Worker threads including the caller; 0 means hardware concurrency.
  unsigned threads = 0;

  /// Throws InvalidParameter on out-of-range values.
  void validate() const;
  /// Stable text form of every option that affects the bitstream.
  std::string canonical() const;
};

struct VideoInput {
  std::vector<Image> frames;
  /// Empty (full frame), one mask for every frame, or one per frame.
  std::vector<RoiMask> masks;
  std::uint32_t fps_num = 30;
  std::uint32_t fps_den = 1;

  const RoiMask* mask_for(std::size_t frame) const;
};

/// Loads a directory of images (lexicographic order), a .y4m file or a
/// single image, plus optional masks from `mask_dir`. Throws IoError or
/// InvalidParameter on unreadable inputs or dimension mismatches.
VideoInput load_video(const std::filesystem::path& input,
                      const std::optional<std::filesystem::path>& mask_dir = std::nullopt);

struct FrameMetrics {
  std::uint32_t frame = 0;
  FrameType type = FrameType::kIntra;
  std::size_t gaussians = 0;        // size of the decoded set
  std::size_t coded_gaussians = 0;  // Gaussians carried by this record
  std::size_t changed_pixels = 0;   // P-frames, encoder side only
  std::uint64_t bits = 0;           // record bits; frame 0 also carries the header
  double psnr_roi = 0.0;
  double psnr_full = 0.0;
  std::optional<double> encode_seconds;
};

struct MetricsReport {
  std::string stream;
  FrameDims dims;
  std::vector<FrameMetrics> frames;
  std::optional<double> decode_fps;

  std::uint64_t total_bits() const;
  /// total_bits / (W * H * F).
  double bpp() const;
  double mean_psnr_roi() const;
  double mean_psnr_full() const;
};

/// CSV columns: stream,frame,type,gaussians,coded_gaussians,bits,bpp,
/// psnr_roi_db,psnr_full_db,encode_seconds,decode_fps. One row per
/// (stream, frame) followed by one "all" row per stream with totals and
/// means. Unknown values are left empty.
void write_csv(std::ostream& out, std::span<const MetricsReport> reports);

struct EncodeResult {
  std::vector<std::uint8_t> bytes;
  Bitstream stream;
  MetricsReport metrics;
  /// Reconstructions exactly as decode_video produces them.
  std::vector<Image> reconstructions;
};

using FrameCallback = std::function<void(const FrameMetrics&)>;

/// Frame f is intra iff f % gop == 0. Intra frames are initialized and
/// fitted from scratch; predicted frames re-fit only the Gaussians touched
/// by pixels that moved away from the previous decoded frame. Errors are
/// rethrown as FrameError carrying the frame index.
EncodeResult encode_video(const VideoInput& input, const EncodeOptions& options,
                          const FrameCallback& on_frame = {});

struct DecodedVideo {
  StreamHeader header;
  std::vector<Image> frames;
  std::vector<RoiMask> masks;
  std::vector<std::size_t> gaussian_counts;
  std::vector<std::size_t> coded_counts;
  std::vector<std::uint64_t> frame_bits;
  double seconds = 0.0;
};

/// Dequantize and render: one forward pass per frame, no optimization.
/// Throws StreamError (with the frame index where applicable).
DecodedVideo decode_video(std::span<const std::uint8_t> bytes, unsigned threads = 0);

/// Per-frame quality of `stream` against `reference`. Throws
/// InvalidParameter when the frame counts or sizes differ.
MetricsReport report(std::span<const std::uint8_t> stream, const std::vector<Image>& reference,
                     const std::string& name = "stream", unsigned threads = 0);

/// Human-readable header and per-frame record sizes.
std::string inspect(std::span<const std::uint8_t> stream);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace gsvc
