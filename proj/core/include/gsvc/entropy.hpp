// Copyright (C) 2026 The gsvc Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace gsvc {

/// Byte-oriented range coder (32-bit range, carry propagation through a
/// cached byte). Frequencies must satisfy total <= 2^16.
class RangeEncoder {
 public:
  void encode(std::uint32_t cum, std::uint32_t freq, std::uint32_t total);
  /// Flushes the coder state; the encoder must not be used afterwards.
  std::vector<std::uint8_t> finish();

 private:
  void shift_low();

  std::uint64_t low_ = 0;
  std::uint32_t range_ = 0xFFFFFFFFu;
  std::uint8_t cache_ = 0;
  std::uint64_t cache_size_ = 1;
  std::vector<std::uint8_t> out_;
};

class RangeDecoder {
 public:
  /// `base_offset` is added to positions reported in errors.
  explicit RangeDecoder(std::span<const std::uint8_t> data, std::size_t base_offset = 0);
  /// Cumulative frequency of the next symbol; throws StreamError when the
  /// code value lies outside [0, total).
  std::uint32_t decode_freq(std::uint32_t total);
  void consume(std::uint32_t cum, std::uint32_t freq);
  /// Bytes read so far.
  std::size_t position() const { return pos_; }

 private:
  std::uint8_t next_byte();

  std::span<const std::uint8_t> data_;
  std::size_t base_;
  std::size_t pos_ = 0;
  std::uint32_t code_ = 0;
  std::uint32_t range_ = 0xFFFFFFFFu;
  std::uint32_t step_ = 0;
};

/// Adaptive frequency table over 2^bits symbols (bits in [1, 8]). Starts
/// uniform; both sides update identically after each symbol.
class AdaptiveModel {
 public:
  explicit AdaptiveModel(int bits);

  int bits() const { return bits_; }
  void encode(RangeEncoder& enc, std::uint32_t symbol);
  std::uint32_t decode(RangeDecoder& dec);

 private:
  void update(std::uint32_t symbol);

  int bits_;
  std::vector<std::uint32_t> freq_;
  std::uint32_t total_ = 0;
};

/// Writes symbols from several alphabets into one payload. Model k codes
/// values of model_bits[k] bits (1..32); values wider than 8 bits are split
/// into byte lanes with a model per lane.
///
/// finish() emits whichever is smaller: the adaptive range-coded form or
/// plain MSB-first bit packing, behind a one-byte mode tag. The payload is
/// therefore never larger than 1 + ceil(sum of symbol bits / 8).
class EntropyWriter {
 public:
  explicit EntropyWriter(std::vector<int> model_bits);

  /// Throws InvalidParameter when `value` does not fit the model's width.
  void put(std::size_t model, std::uint32_t value);
  std::size_t symbol_count() const { return symbols_.size(); }
  std::vector<std::uint8_t> finish() const;

 private:
  struct Pending {
    std::uint32_t model;
    std::uint32_t value;
  };
  std::vector<int> bits_;
  std::vector<Pending> symbols_;
};

/// Streaming counterpart of EntropyWriter. The caller must request exactly
/// the sequence of models the writer saw, then call finish() to verify that
/// the whole payload was consumed.
class EntropyReader {
 public:
  EntropyReader(std::span<const std::uint8_t> payload, std::vector<int> model_bits,
                std::size_t base_offset = 0);

  std::uint32_t get(std::size_t model);
  /// Throws StreamError if bytes remain unread.
  void finish();

 private:
  std::uint32_t read_raw_bits(int n);

  std::span<const std::uint8_t> payload_;
  std::vector<int> bits_;
  std::size_t base_;
  bool raw_ = false;
  std::size_t bit_pos_ = 0;  // raw mode
  std::optional<RangeDecoder> dec_;
  std::vector<std::vector<AdaptiveModel>> lanes_;
};

/// Single-alphabet convenience wrappers.
std::vector<std::uint8_t> entropy_encode(std::span<const std::uint32_t> symbols, int bits);
std::vector<std::uint32_t> entropy_decode(std::span<const std::uint8_t> payload, int bits,
                                          std::size_t count);

}  // namespace gsvc
