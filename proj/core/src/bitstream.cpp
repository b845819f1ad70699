// Copyright (C) 2026 The gsvc Authors
// SPDX-License-Identifier: Apache-2.0

#include "gsvc/bitstream.hpp"

#include <bit>
#include <cstring>
#include <string>

#include "gsvc/entropy.hpp"
#include "gsvc/error.hpp"

namespace gsvc {

namespace {

constexpr std::array<std::uint8_t, 4> kMagic{'G', 'S', 'V', 'C'};

enum TlvTag : std::uint8_t {
  kTagBits = 1,
  kTagMuRange = 2,
  kTagCholRanges = 3,
  kTagColorRanges = 4,
};

class ByteWriter {
 public:
  explicit ByteWriter(std::vector<std::uint8_t>& out) : out_(out) {}
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u16(std::uint16_t v) { put(v, 2); }
  void u32(std::uint32_t v) { put(v, 4); }
  void u64(std::uint64_t v) { put(v, 8); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void bytes(std::span<const std::uint8_t> b) { out_.insert(out_.end(), b.begin(), b.end()); }

 private:
  void put(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  std::vector<std::uint8_t>& out_;
};

class ByteReader {
 public:
  ByteReader(std::span<const std::uint8_t> data, std::size_t base, long frame)
      : data_(data), base_(base), frame_(frame) {}

  std::uint8_t u8() { return static_cast<std::uint8_t>(get(1)); }
  std::uint16_t u16() { return static_cast<std::uint16_t>(get(2)); }
  std::uint32_t u32() { return static_cast<std::uint32_t>(get(4)); }
  std::uint64_t u64() { return get(8); }
  double f64() { return std::bit_cast<double>(u64()); }
  std::span<const std::uint8_t> bytes(std::size_t n, const char* what) {
    need(n, what);
    auto s = data_.subspan(pos_, n);
    pos_ += n;
    return s;
  }
  std::size_t pos() const { return pos_; }
  std::size_t abs_pos() const { return base_ + pos_; }
  std::size_t remaining() const { return data_.size() - pos_; }
  [[noreturn]] void fail(StreamErrorKind kind, const std::string& what) const {
    throw StreamError(kind, base_ + pos_, what, frame_);
  }

 private:
  void need(std::size_t n, const char* what) {
    if (remaining() < n) fail(StreamErrorKind::kTruncated, std::string("truncated ") + what);
  }
  std::uint64_t get(int n) {
    need(static_cast<std::size_t>(n), "field");
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(data_[pos_ + i]) << (8 * i);
    pos_ += static_cast<std::size_t>(n);
    return v;
  }

  std::span<const std::uint8_t> data_;
  std::size_t base_;
  long frame_;
  std::size_t pos_ = 0;
};

std::vector<std::uint8_t> quant_tlvs(const QuantSpec& spec) {
  std::vector<std::uint8_t> out;
  ByteWriter w(out);
  w.u8(kTagBits);
  w.u16(3);
  w.u8(static_cast<std::uint8_t>(spec.bits_mu));
  w.u8(static_cast<std::uint8_t>(spec.bits_chol));
  w.u8(static_cast<std::uint8_t>(spec.bits_color));
  w.u8(kTagMuRange);
  w.u16(16);
  w.f64(spec.mu_lo);
  w.f64(spec.mu_hi);
  if (spec.calibrated) {
    w.u8(kTagCholRanges);
    w.u16(48);
    for (const auto& r : spec.chol) {
      w.f64(r.lo);
      w.f64(r.hi);
    }
    w.u8(kTagColorRanges);
    w.u16(48);
    for (const auto& r : spec.color) {
      w.f64(r.lo);
      w.f64(r.hi);
    }
  }
  return out;
}

QuantSpec parse_tlvs(ByteReader& r, std::size_t len) {
  QuantSpec spec;
  bool have_chol = false, have_color = false;
  const std::size_t end = r.pos() + len;
  while (r.pos() < end) {
    const std::uint8_t tag = r.u8();
    const std::uint16_t n = r.u16();
    if (r.pos() + n > end) r.fail(StreamErrorKind::kCorrupt, "TLV overruns header");
    auto expect = [&](std::uint16_t want) {
      if (n != want) r.fail(StreamErrorKind::kCorrupt, "bad TLV length for tag " + std::to_string(tag));
    };
    switch (tag) {
      case kTagBits:
        expect(3);
        spec.bits_mu = r.u8();
        spec.bits_chol = r.u8();
        spec.bits_color = r.u8();
        break;
      case kTagMuRange:
        expect(16);
        spec.mu_lo = r.f64();
        spec.mu_hi = r.f64();
        break;
      case kTagCholRanges:
        expect(48);
        for (auto& c : spec.chol) {
          c.lo = r.f64();
          c.hi = r.f64();
        }
        have_chol = true;
        break;
      case kTagColorRanges:
        expect(48);
        for (auto& c : spec.color) {
          c.lo = r.f64();
          c.hi = r.f64();
        }
        have_color = true;
        break;
      default:
        r.bytes(n, "TLV");
    }
  }
  if (r.pos() != end) r.fail(StreamErrorKind::kCorrupt, "TLV section length mismatch");
  spec.calibrated = have_chol && have_color;
  try {
    spec.validate();
  } catch (const InvalidParameter& e) {
    r.fail(StreamErrorKind::kCorrupt, e.what());
  }
  return spec;
}

int id_gap_bits(const StreamHeader& h) {
  return std::max(1, static_cast<int>(std::bit_width(h.n_gaussians)));
}

int run_bits(FrameDims dims) {
  return std::max(1, static_cast<int>(std::bit_width(dims.pixel_count())));
}

}  // namespace

FrameType frame_type_for(std::uint64_t frame, std::uint32_t gop) {
  return gop == 0 || frame % gop == 0 ? FrameType::kIntra : FrameType::kPredicted;
}

std::uint64_t fnv1a(std::span<const std::uint8_t> bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (auto b : bytes) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::size_t header_size(const StreamHeader& header) {
  return 4 + 1 + 2 + 2 + 4 * 5 + 3 + 1 + 1 + 8 + 8 + 8 + 2 + quant_tlvs(header.quant_spec).size();
}

std::vector<std::uint8_t> serialize(const Bitstream& stream) {
  const StreamHeader& h = stream.header;
  if (h.dims.width < 1 || h.dims.height < 1 || h.dims.width > 65535 || h.dims.height > 65535) {
    throw InvalidParameter("serialize: frame dimensions must be in [1, 65535]");
  }
  if (h.gop < 1) throw InvalidParameter("serialize: GoP length must be >= 1");
  if (h.frame_count != stream.frames.size()) {
    throw InvalidParameter("serialize: header frame_count differs from frame list");
  }
  std::vector<std::uint8_t> out;
  ByteWriter w(out);
  w.bytes(kMagic);
  w.u8(kBitstreamVersion);
  w.u16(static_cast<std::uint16_t>(h.dims.width));
  w.u16(static_cast<std::uint16_t>(h.dims.height));
  w.u32(h.fps_num);
  w.u32(h.fps_den);
  w.u32(h.gop);
  w.u32(h.n_gaussians);
  w.u32(h.frame_count);
  for (auto c : h.background) w.u8(c);
  w.u8(static_cast<std::uint8_t>(h.quant_mode));
  w.u8(h.flags);
  w.f64(h.tau);
  w.f64(h.influence_eps);
  w.u64(h.config_digest);
  const auto tlvs = quant_tlvs(h.quant_spec);
  w.u16(static_cast<std::uint16_t>(tlvs.size()));
  w.bytes(tlvs);
  for (std::size_t f = 0; f < stream.frames.size(); ++f) {
    const FrameRecord& rec = stream.frames[f];
    if (rec.type != frame_type_for(f, h.gop)) {
      throw InvalidParameter("serialize: frame " + std::to_string(f) + " violates the GoP rule");
    }
    if (rec.payload.size() > 0xFFFFFFFFu) throw InvalidParameter("serialize: payload too large");
    w.u8(static_cast<std::uint8_t>(rec.type));
    w.u32(static_cast<std::uint32_t>(rec.payload.size()));
    w.bytes(rec.payload);
  }
  return out;
}

Bitstream deserialize(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes, 0, -1);
  const auto magic = r.bytes(4, "magic");
  if (!std::equal(magic.begin(), magic.end(), kMagic.begin())) {
    throw StreamError(StreamErrorKind::kBadMagic, 0, "not a GSVC stream");
  }
  const std::uint8_t version = r.u8();
  if (version != kBitstreamVersion) {
    throw StreamError(StreamErrorKind::kVersionMismatch, 4,
                      "unsupported stream version " + std::to_string(version) + " (expected " +
                          std::to_string(kBitstreamVersion) + ")");
  }
  Bitstream s;
  StreamHeader& h = s.header;
  h.dims.width = r.u16();
  h.dims.height = r.u16();
  h.fps_num = r.u32();
  h.fps_den = r.u32();
  h.gop = r.u32();
  h.n_gaussians = r.u32();
  h.frame_count = r.u32();
  for (auto& c : h.background) c = r.u8();
  const std::uint8_t qm = r.u8();
  h.flags = r.u8();
  h.tau = r.f64();
  h.influence_eps = r.f64();
  h.config_digest = r.u64();
  const std::uint16_t tlv_len = r.u16();
  if (r.remaining() < tlv_len) r.fail(StreamErrorKind::kTruncated, "truncated header TLVs");
  h.quant_spec = parse_tlvs(r, tlv_len);
  if (h.dims.width < 1 || h.dims.height < 1) r.fail(StreamErrorKind::kCorrupt, "zero frame size");
  if (h.gop < 1) r.fail(StreamErrorKind::kCorrupt, "GoP length is zero");
  if (qm > static_cast<std::uint8_t>(QuantMode::kQat)) {
    r.fail(StreamErrorKind::kCorrupt, "unknown quantization mode " + std::to_string(qm));
  }
  h.quant_mode = static_cast<QuantMode>(qm);
  if (h.quant_mode != QuantMode::kNone && !h.quant_spec.calibrated) {
    r.fail(StreamErrorKind::kCorrupt, "quantized stream without calibrated ranges");
  }

  s.frames.reserve(std::min<std::size_t>(h.frame_count, r.remaining() / 5 + 1));
  for (std::uint32_t f = 0; f < h.frame_count; ++f) {
    if (r.remaining() == 0) {
      r.fail(StreamErrorKind::kTruncated, "stream ends after " + std::to_string(f) + " of " +
                                              std::to_string(h.frame_count) + " frames");
    }
    const std::size_t at = r.abs_pos();
    const std::uint8_t type = r.u8();
    if (type > 1 || static_cast<FrameType>(type) != frame_type_for(f, h.gop)) {
      throw StreamError(StreamErrorKind::kCorrupt, at,
                        "frame type " + std::to_string(type) + " violates the GoP rule",
                        static_cast<long>(f));
    }
    const std::uint32_t len = r.u32();
    if (r.remaining() < len) {
      throw StreamError(StreamErrorKind::kTruncated, r.abs_pos(), "frame payload truncated",
                        static_cast<long>(f));
    }
    const auto payload = r.bytes(len, "payload");
    s.frames.push_back({static_cast<FrameType>(type), {payload.begin(), payload.end()}});
  }
  if (r.remaining() != 0) r.fail(StreamErrorKind::kCorrupt, "trailing bytes after last frame");
  return s;
}

std::array<int, kParamsPerGaussian> attribute_bits(const StreamHeader& header) {
  std::array<int, kParamsPerGaussian> bits{};
  for (std::size_t k = 0; k < kParamsPerGaussian; ++k) {
    bits[k] = header.quant_mode == QuantMode::kNone ? 32 : header.quant_spec.bits_for(k);
  }
  return bits;
}

QuantizedGaussian float_bits(const Gaussian2D& g) {
  const ParamVec p = g.params();
  QuantizedGaussian q{};
  for (std::size_t k = 0; k < kParamsPerGaussian; ++k) {
    q[k] = std::bit_cast<std::uint32_t>(static_cast<float>(p[k]));
  }
  return q;
}

Gaussian2D from_float_bits(const QuantizedGaussian& bits) {
  ParamVec p{};
  for (std::size_t k = 0; k < kParamsPerGaussian; ++k) {
    p[k] = static_cast<double>(std::bit_cast<float>(bits[k]));
  }
  return Gaussian2D::from_params(p);
}

std::vector<std::uint8_t> encode_frame(const FrameContent& content, FrameType type,
                                       const StreamHeader& header) {
  std::vector<std::uint8_t> out;
  ByteWriter w(out);
  w.u8(static_cast<std::uint8_t>(content.mask_coding));
  if (content.mask_coding == MaskCoding::kCoded) {
    if (content.mask.dims() != header.dims) {
      throw InvalidParameter("encode_frame: mask dimensions differ from stream");
    }
    EntropyWriter runs({run_bits(header.dims)});
    std::uint32_t run = 0;
    std::uint8_t current = 0;
    std::uint32_t n_runs = 0;
    for (auto b : content.mask.bits()) {
      if (b != current) {
        runs.put(0, run);
        ++n_runs;
        run = 0;
        current = b;
      }
      ++run;
    }
    runs.put(0, run);
    ++n_runs;
    const auto coded = runs.finish();
    w.u32(n_runs);
    w.u32(static_cast<std::uint32_t>(coded.size()));
    w.bytes(coded);
  }

  const std::size_t count = content.symbols.size();
  if (type == FrameType::kPredicted && content.ids.size() != count) {
    throw InvalidParameter("encode_frame: P-frame needs one ID per Gaussian");
  }
  if (type == FrameType::kIntra && !content.ids.empty()) {
    throw InvalidParameter("encode_frame: I-frames carry no IDs");
  }
  w.u32(static_cast<std::uint32_t>(count));
  const auto bits = attribute_bits(header);
  std::vector<int> models(bits.begin(), bits.end());
  models.push_back(id_gap_bits(header));
  EntropyWriter ew(models);
  if (type == FrameType::kPredicted) {
    std::int64_t prev = -1;
    for (std::uint32_t id : content.ids) {
      if (static_cast<std::int64_t>(id) <= prev || id >= header.n_gaussians) {
        throw InvalidParameter("encode_frame: P-frame IDs must be increasing and < N");
      }
      ew.put(kParamsPerGaussian, static_cast<std::uint32_t>(id - prev - 1));
      prev = id;
    }
  }
  for (const auto& g : content.symbols) {
    for (std::size_t k = 0; k < kParamsPerGaussian; ++k) ew.put(k, g[k]);
  }
  w.bytes(ew.finish());
  return out;
}

FrameContent decode_frame(std::span<const std::uint8_t> payload, FrameType type,
                          const StreamHeader& header, std::size_t reference_count, long frame,
                          std::size_t base_offset) {
  ByteReader r(payload, base_offset, frame);
  FrameContent c;
  const std::uint8_t mode = r.u8();
  if (mode > static_cast<std::uint8_t>(MaskCoding::kCoded)) {
    r.fail(StreamErrorKind::kCorrupt, "unknown mask coding " + std::to_string(mode));
  }
  c.mask_coding = static_cast<MaskCoding>(mode);
  if (c.mask_coding != MaskCoding::kFull && !(header.flags & kFlagRoiMasks)) {
    r.fail(StreamErrorKind::kCorrupt, "mask data in a stream without ROI masks");
  }
  if (c.mask_coding == MaskCoding::kCoded) {
    const std::uint32_t n_runs = r.u32();
    const std::uint32_t len = r.u32();
    const std::size_t px = header.dims.pixel_count();
    if (n_runs == 0 || n_runs > px + 1) r.fail(StreamErrorKind::kCorrupt, "bad mask run count");
    const std::size_t at = r.abs_pos();
    try {
      EntropyReader er(r.bytes(len, "mask"), {run_bits(header.dims)}, at);
      std::vector<std::uint8_t> bits;
      bits.reserve(px);
      std::uint8_t value = 0;
      for (std::uint32_t i = 0; i < n_runs; ++i) {
        const std::uint32_t run = er.get(0);
        if (run > px - bits.size()) r.fail(StreamErrorKind::kCorrupt, "mask runs overflow frame");
        if (run == 0 && i > 0) r.fail(StreamErrorKind::kCorrupt, "empty interior mask run");
        bits.insert(bits.end(), run, value);
        value ^= 1;
      }
      er.finish();
      if (bits.size() != px) r.fail(StreamErrorKind::kCorrupt, "mask runs do not cover frame");
      c.mask = RoiMask(header.dims, std::move(bits));
    } catch (const StreamError& e) {
      if (e.frame() >= 0) throw;
      throw StreamError(e.kind(), e.position(), e.detail(), frame);
    }
  }

  const std::uint32_t count = r.u32();
  if (type == FrameType::kIntra && (count == 0 || count > header.n_gaussians)) {
    r.fail(StreamErrorKind::kCorrupt, "I-frame Gaussian count " + std::to_string(count) +
                                          " outside [1, " + std::to_string(header.n_gaussians) +
                                          "]");
  }
  if (type == FrameType::kPredicted && count > reference_count) {
    r.fail(StreamErrorKind::kCorrupt, "P-frame updates more Gaussians than the reference holds");
  }
  const auto bits = attribute_bits(header);
  std::vector<int> models(bits.begin(), bits.end());
  models.push_back(id_gap_bits(header));
  // Every symbol costs at least one bit in raw mode and the range coder
  // needs >= 5 bytes; reject counts the payload cannot possibly hold.
  if (static_cast<std::uint64_t>(count) * kParamsPerGaussian > r.remaining() * 8ull * 64ull + 64) {
    r.fail(StreamErrorKind::kCorrupt, "Gaussian count exceeds payload capacity");
  }
  const std::size_t at = r.abs_pos();
  try {
    EntropyReader er(r.bytes(r.remaining(), "attributes"), models, at);
    if (type == FrameType::kPredicted) {
      c.ids.resize(count);
      std::int64_t prev = -1;
      for (auto& id : c.ids) {
        const std::int64_t next = prev + 1 + static_cast<std::int64_t>(er.get(kParamsPerGaussian));
        if (next >= static_cast<std::int64_t>(reference_count)) {
          throw StreamError(StreamErrorKind::kCorrupt, at, "P-frame ID out of range", frame);
        }
        id = static_cast<std::uint32_t>(next);
        prev = next;
      }
    }
    c.symbols.resize(count);
    for (auto& g : c.symbols) {
      for (std::size_t k = 0; k < kParamsPerGaussian; ++k) g[k] = er.get(k);
    }
    er.finish();
  } catch (const StreamError& e) {
    if (e.frame() >= 0) throw;
    throw StreamError(e.kind(), e.position(), e.detail(), frame);
  }
  return c;
}

}  // namespace gsvc
