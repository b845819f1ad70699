// Copyright (C) 2026 The gsvc Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace gsvc {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A value violates an operation's precondition.
class InvalidParameter : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// Fitting produced a non-finite loss.
class FitDivergence : public Error {
 public:
  FitDivergence(int iteration, const std::string& what)
      : Error(what), iteration_(iteration) {}
  int iteration() const noexcept { return iteration_; }

 private:
  int iteration_;
};

/// A pixel->Gaussian index was used with a set it was not built from.
class StaleIndex : public Error {
 public:
  using Error::Error;
};

enum class StreamErrorKind {
  kTruncated,
  kBadMagic,
  kVersionMismatch,
  kCorrupt,
};

const char* to_string(StreamErrorKind kind) noexcept;

/// Bitstream or entropy payload could not be decoded. `position` is a byte
/// offset into the buffer being parsed; `frame` is -1 outside frame records.
class StreamError : public Error {
 public:
  StreamError(StreamErrorKind kind, std::size_t position, const std::string& what,
              long frame = -1);

  StreamErrorKind kind() const noexcept { return kind_; }
  std::size_t position() const noexcept { return position_; }
  long frame() const noexcept { return frame_; }
  /// Message without the kind/position prefix.
  const std::string& detail() const noexcept { return detail_; }

 private:
  StreamErrorKind kind_;
  std::size_t position_;
  long frame_;
  std::string detail_;
};

/// Encoding or decoding a video failed on a specific frame.
class FrameError : public Error {
 public:
  FrameError(long frame, const std::string& what) : Error(what), frame_(frame) {}
  long frame() const noexcept { return frame_; }

 private:
  long frame_;
};

}  // namespace gsvc
