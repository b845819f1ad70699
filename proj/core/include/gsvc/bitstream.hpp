// Copyright (C) 2026 The gsvc Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "gsvc/gaussian.hpp"
#include "gsvc/image.hpp"
#include "gsvc/quant.hpp"

namespace gsvc {

/// Stream layout (all integers little-endian):
///
///   "GSVC" u8 version
///   u16 width, u16 height, u32 fps_num, u32 fps_den, u32 gop,
///   u32 n_gaussians, u32 frame_count, u8[3] background, u8 quant_mode,
///   u8 flags, f64 tau, f64 influence_eps, u64 config_digest,
///   u16 tlv_bytes, TLVs { u8 tag, u16 len, value }
///   frame_count x { u8 type, u32 len, payload }
///
/// QuantSpec TLVs: 1 = bit widths (3 x u8), 2 = position range (2 x f64),
/// 3 = Cholesky ranges (6 x f64), 4 = color ranges (6 x f64). Unknown tags
/// are skipped.
inline constexpr std::uint8_t kBitstreamVersion = 1;

enum class FrameType : std::uint8_t { kIntra = 0, kPredicted = 1 };

/// Frame f of a stream with GoP length k is intra iff f % k == 0.
FrameType frame_type_for(std::uint64_t frame, std::uint32_t gop);

enum HeaderFlags : std::uint8_t {
  kFlagRoiMasks = 1u << 0,  // frames carry ROI masks
  kFlagDilate = 1u << 1,    // change maps were dilated before selection
};

struct StreamHeader {
  FrameDims dims;
  std::uint32_t fps_num = 30;
  std::uint32_t fps_den = 1;
  std::uint32_t gop = 1;
  std::uint32_t n_gaussians = 0;
  std::uint32_t frame_count = 0;
  std::array<std::uint8_t, 3> background{0, 0, 0};
  QuantMode quant_mode = QuantMode::kPtq;
  std::uint8_t flags = 0;
  double tau = 0.0;
  double influence_eps = 0.0;
  std::uint64_t config_digest = 0;
  QuantSpec quant_spec;

  bool operator==(const StreamHeader&) const = default;
};

struct FrameRecord {
  FrameType type = FrameType::kIntra;
  std::vector<std::uint8_t> payload;
  bool operator==(const FrameRecord&) const = default;
};

struct Bitstream {
  StreamHeader header;
  std::vector<FrameRecord> frames;
  bool operator==(const Bitstream&) const = default;
};

/// Size in bytes of the serialized header (including TLVs).
std::size_t header_size(const StreamHeader& header);

std::vector<std::uint8_t> serialize(const Bitstream& stream);
/// Throws StreamError (truncated, bad magic, version mismatch, corrupt).
/// Frame types are checked against the GoP rule.
Bitstream deserialize(std::span<const std::uint8_t> bytes);

enum class MaskCoding : std::uint8_t { kFull = 0, kSameAsPrevious = 1, kCoded = 2 };

/// Decoded content of one frame record. `symbols` are quantizer indices, or
/// float32 bit patterns when the stream is unquantized.
struct FrameContent {
  MaskCoding mask_coding = MaskCoding::kFull;
  RoiMask mask;                       // valid when mask_coding == kCoded
  std::vector<std::uint32_t> ids;     // P-frames: sorted changed IDs
  std::vector<QuantizedGaussian> symbols;
  bool operator==(const FrameContent&) const = default;
};

/// Bit widths of the eight attribute symbols under `header`.
std::array<int, kParamsPerGaussian> attribute_bits(const StreamHeader& header);

/// Payload layout: u8 mask coding, [u32 runs, u32 len, entropy-coded run
/// lengths alternating outside/inside, starting outside],
/// u32 count, entropy-coded { P: count ID gaps (id_i - id_{i-1} - 1),
/// then count x 8 attribute symbols }.
std::vector<std::uint8_t> encode_frame(const FrameContent& content, FrameType type,
                                       const StreamHeader& header);
/// `reference_count` bounds P-frame IDs. Errors carry `frame` and the byte
/// offset `base_offset + position`.
FrameContent decode_frame(std::span<const std::uint8_t> payload, FrameType type,
                          const StreamHeader& header, std::size_t reference_count, long frame,
                          std::size_t base_offset = 0);

/// Float32 transport for unquantized streams.
QuantizedGaussian float_bits(const Gaussian2D& g);
Gaussian2D from_float_bits(const QuantizedGaussian& bits);

/// FNV-1a over a byte string.
std::uint64_t fnv1a(std::span<const std::uint8_t> bytes);

}  // namespace gsvc
