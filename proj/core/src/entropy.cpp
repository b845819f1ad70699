// Copyright (C) 2026 The gsvc Authors
// SPDX-License-Identifier: Apache-2.0

#include "gsvc/entropy.hpp"

#include <string>

#include "gsvc/error.hpp"

namespace gsvc {

namespace {

constexpr std::uint32_t kTopValue = 1u << 24;
constexpr std::uint32_t kMaxTotal = 1u << 16;
constexpr std::uint32_t kIncrement = 24;

constexpr std::uint8_t kModeRange = 1;
constexpr std::uint8_t kModeRaw = 2;

// Lane widths, most significant first: 20 bits -> {4, 8, 8}.
std::vector<int> lane_widths(int bits) {
  std::vector<int> lanes;
  const int full = (bits - 1) / 8;
  lanes.push_back(bits - 8 * full);
  for (int i = 0; i < full; ++i) lanes.push_back(8);
  return lanes;
}

void check_model_bits(const std::vector<int>& bits) {
  for (int b : bits) {
    if (b < 1 || b > 32) throw InvalidParameter("entropy model width must be in [1, 32]");
  }
}

std::vector<std::vector<AdaptiveModel>> make_lanes(const std::vector<int>& bits) {
  std::vector<std::vector<AdaptiveModel>> lanes;
  lanes.reserve(bits.size());
  for (int b : bits) {
    std::vector<AdaptiveModel> models;
    for (int w : lane_widths(b)) models.emplace_back(w);
    lanes.push_back(std::move(models));
  }
  return lanes;
}

}  // namespace

void RangeEncoder::encode(std::uint32_t cum, std::uint32_t freq, std::uint32_t total) {
  const std::uint32_t r = range_ / total;
  low_ += static_cast<std::uint64_t>(r) * cum;
  range_ = r * freq;
  while (range_ < kTopValue) {
    range_ <<= 8;
    shift_low();
  }
}

void RangeEncoder::shift_low() {
  if (static_cast<std::uint32_t>(low_) < 0xFF000000u || (low_ >> 32) != 0) {
    const auto carry = static_cast<std::uint8_t>(low_ >> 32);
    std::uint8_t temp = cache_;
    do {
      out_.push_back(static_cast<std::uint8_t>(temp + carry));
      temp = 0xFF;
    } while (--cache_size_ != 0);
    cache_ = static_cast<std::uint8_t>(low_ >> 24);
  }
  ++cache_size_;
  low_ = (low_ & 0x00FFFFFFu) << 8;
}

std::vector<std::uint8_t> RangeEncoder::finish() {
  for (int i = 0; i < 5; ++i) shift_low();
  return std::move(out_);
}

RangeDecoder::RangeDecoder(std::span<const std::uint8_t> data, std::size_t base_offset)
    : data_(data), base_(base_offset) {
  if (next_byte() != 0) {
    throw StreamError(StreamErrorKind::kCorrupt, base_, "range coder: bad leading byte");
  }
  for (int i = 0; i < 4; ++i) code_ = (code_ << 8) | next_byte();
}

std::uint8_t RangeDecoder::next_byte() {
  if (pos_ >= data_.size()) {
    throw StreamError(StreamErrorKind::kTruncated, base_ + pos_, "range coder: payload truncated");
  }
  return data_[pos_++];
}

std::uint32_t RangeDecoder::decode_freq(std::uint32_t total) {
  step_ = range_ / total;
  const std::uint32_t v = code_ / step_;
  if (v >= total) {
    throw StreamError(StreamErrorKind::kCorrupt, base_ + pos_, "range coder: code out of range");
  }
  return v;
}

void RangeDecoder::consume(std::uint32_t cum, std::uint32_t freq) {
  code_ -= step_ * cum;
  range_ = step_ * freq;
  while (range_ < kTopValue) {
    code_ = (code_ << 8) | next_byte();
    range_ <<= 8;
  }
}

AdaptiveModel::AdaptiveModel(int bits) : bits_(bits) {
  if (bits < 1 || bits > 8) throw InvalidParameter("AdaptiveModel: bits must be in [1, 8]");
  freq_.assign(std::size_t{1} << bits, 1);
  total_ = static_cast<std::uint32_t>(freq_.size());
}

void AdaptiveModel::update(std::uint32_t symbol) {
  freq_[symbol] += kIncrement;
  total_ += kIncrement;
  if (total_ > kMaxTotal) {
    total_ = 0;
    for (auto& f : freq_) {
      f = (f + 1) / 2;
      total_ += f;
    }
  }
}

void AdaptiveModel::encode(RangeEncoder& enc, std::uint32_t symbol) {
  std::uint32_t cum = 0;
  for (std::uint32_t s = 0; s < symbol; ++s) cum += freq_[s];
  enc.encode(cum, freq_[symbol], total_);
  update(symbol);
}

std::uint32_t AdaptiveModel::decode(RangeDecoder& dec) {
  const std::uint32_t target = dec.decode_freq(total_);
  std::uint32_t cum = 0;
  std::uint32_t s = 0;
  while (cum + freq_[s] <= target) cum += freq_[s++];
  dec.consume(cum, freq_[s]);
  update(s);
  return s;
}

EntropyWriter::EntropyWriter(std::vector<int> model_bits) : bits_(std::move(model_bits)) {
  check_model_bits(bits_);
}

void EntropyWriter::put(std::size_t model, std::uint32_t value) {
  if (model >= bits_.size()) throw InvalidParameter("EntropyWriter: unknown model");
  const int b = bits_[model];
  if (b < 32 && (value >> b) != 0) {
    throw InvalidParameter("EntropyWriter: symbol " + std::to_string(value) +
                           " outside alphabet of " + std::to_string(b) + " bits");
  }
  symbols_.push_back({static_cast<std::uint32_t>(model), value});
}

std::vector<std::uint8_t> EntropyWriter::finish() const {
  if (symbols_.empty()) return {kModeRaw};

  std::uint64_t raw_bits = 0;
  for (const auto& s : symbols_) raw_bits += static_cast<std::uint64_t>(bits_[s.model]);
  const std::size_t raw_size = 1 + static_cast<std::size_t>((raw_bits + 7) / 8);

  RangeEncoder enc;
  auto lanes = make_lanes(bits_);
  for (const auto& s : symbols_) {
    auto& models = lanes[s.model];
    int shift = bits_[s.model];
    for (auto& m : models) {
      shift -= m.bits();
      m.encode(enc, (s.value >> shift) & ((1u << m.bits()) - 1u));
    }
  }
  std::vector<std::uint8_t> coded = enc.finish();
  if (coded.size() + 1 < raw_size) {
    coded.insert(coded.begin(), kModeRange);
    return coded;
  }

  std::vector<std::uint8_t> raw(raw_size, 0);
  raw[0] = kModeRaw;
  std::uint64_t pos = 8;
  for (const auto& s : symbols_) {
    for (int i = bits_[s.model] - 1; i >= 0; --i, ++pos) {
      if ((s.value >> i) & 1u) raw[pos / 8] |= static_cast<std::uint8_t>(0x80u >> (pos % 8));
    }
  }
  return raw;
}

EntropyReader::EntropyReader(std::span<const std::uint8_t> payload, std::vector<int> model_bits,
                             std::size_t base_offset)
    : payload_(payload), bits_(std::move(model_bits)), base_(base_offset) {
  check_model_bits(bits_);
  if (payload_.empty()) {
    throw StreamError(StreamErrorKind::kTruncated, base_, "entropy payload is empty");
  }
  const std::uint8_t mode = payload_[0];
  if (mode == kModeRaw) {
    raw_ = true;
    bit_pos_ = 8;
  } else if (mode == kModeRange) {
    dec_.emplace(payload_.subspan(1), base_ + 1);
    lanes_ = make_lanes(bits_);
  } else {
    throw StreamError(StreamErrorKind::kCorrupt, base_,
                      "unknown entropy mode " + std::to_string(mode));
  }
}

std::uint32_t EntropyReader::read_raw_bits(int n) {
  if (bit_pos_ + static_cast<std::size_t>(n) > payload_.size() * 8) {
    throw StreamError(StreamErrorKind::kTruncated, base_ + bit_pos_ / 8,
                      "raw entropy payload truncated");
  }
  std::uint32_t v = 0;
  for (int i = 0; i < n; ++i, ++bit_pos_) {
    v = (v << 1) | ((payload_[bit_pos_ / 8] >> (7 - bit_pos_ % 8)) & 1u);
  }
  return v;
}

std::uint32_t EntropyReader::get(std::size_t model) {
  if (model >= bits_.size()) throw InvalidParameter("EntropyReader: unknown model");
  if (raw_) return read_raw_bits(bits_[model]);
  std::uint32_t v = 0;
  for (auto& m : lanes_[model]) v = (v << m.bits()) | m.decode(*dec_);
  return v;
}

void EntropyReader::finish() {
  const std::size_t used = raw_ ? (bit_pos_ + 7) / 8 : 1 + dec_->position();
  if (used != payload_.size()) {
    throw StreamError(StreamErrorKind::kCorrupt, base_ + used,
                      "entropy payload has " + std::to_string(payload_.size() - used) +
                          " unread bytes");
  }
  if (raw_) {
    // Padding bits must be zero.
    const std::size_t pad = payload_.size() * 8 - bit_pos_;
    if (pad > 0 && (payload_.back() & ((1u << pad) - 1u)) != 0) {
      throw StreamError(StreamErrorKind::kCorrupt, base_ + used - 1, "nonzero padding bits");
    }
  }
}

std::vector<std::uint8_t> entropy_encode(std::span<const std::uint32_t> symbols, int bits) {
  EntropyWriter w({bits});
  for (std::uint32_t s : symbols) w.put(0, s);
  return w.finish();
}

std::vector<std::uint32_t> entropy_decode(std::span<const std::uint8_t> payload, int bits,
                                          std::size_t count) {
  EntropyReader r(payload, {bits});
  std::vector<std::uint32_t> out(count);
  for (auto& v : out) v = r.get(0);
  r.finish();
  return out;
}

}  // namespace gsvc
