// Copyright (C) 2026 The gsvc Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <vector>

#include "gsvc/image.hpp"

namespace gsvc {

/// [0,1] -> 0..255 with rounding and clamping.
std::uint8_t to_u8(double v);

/// 8-bit RGB from .ppm/.pgm/.pnm (binary or ASCII, maxval up to 65535) or
/// .png. Grayscale inputs are replicated to three channels.
Image read_image(const std::filesystem::path& path);
/// Writes .ppm or .png depending on the extension.
void write_image(const Image& image, const std::filesystem::path& path);

/// Single-channel mask (.pgm/.pnm/.ppm/.png); a pixel is in the ROI when its
/// 8-bit intensity is >= 128. Color inputs use the first channel. Throws
/// IoError when dims differ from `expected`.
RoiMask read_mask(const std::filesystem::path& path, FrameDims expected);
void write_mask(const RoiMask& mask, const std::filesystem::path& path);

bool is_image_path(const std::filesystem::path& path);
/// Image files directly inside `dir`, in lexicographic order.
std::vector<std::filesystem::path> list_frames(const std::filesystem::path& dir);

struct VideoInfo {
  FrameDims dims;
  std::uint32_t fps_num = 30;
  std::uint32_t fps_den = 1;
};

/// YUV4MPEG2 4:2:0 8-bit reader. Frames are converted to RGB with BT.601
/// (limited range unless the stream declares XCOLORRANGE=FULL); chroma is
/// upsampled by sample replication.
class Y4mReader {
 public:
  explicit Y4mReader(const std::filesystem::path& path);
  const VideoInfo& info() const { return info_; }
  /// False at a clean end of stream; throws IoError on a truncated frame.
  bool next(Image& out);

 private:
  std::ifstream in_;
  VideoInfo info_;
  bool full_range_ = false;
  std::vector<std::uint8_t> plane_;
};

/// YUV4MPEG2 4:2:0 writer, BT.601 limited range; chroma from 2x2 box averages.
class Y4mWriter {
 public:
  Y4mWriter(const std::filesystem::path& path, const VideoInfo& info);
  void write(const Image& frame);

 private:
  std::ofstream out_;
  VideoInfo info_;
};

std::vector<Image> read_y4m(const std::filesystem::path& path, VideoInfo* info = nullptr);

}  // namespace gsvc
