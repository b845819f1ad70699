// Copyright (C) 2026 The gsvc Authors
// SPDX-License-Identifier: Apache-2.0

#include "gsvc/error.hpp"

namespace gsvc {

const char* to_string(StreamErrorKind kind) noexcept {
  switch (kind) {
    case StreamErrorKind::kTruncated: return "truncated";
    case StreamErrorKind::kBadMagic: return "bad magic";
    case StreamErrorKind::kVersionMismatch: return "version mismatch";
    case StreamErrorKind::kCorrupt: return "corrupt";
  }
  return "unknown";
}

StreamError::StreamError(StreamErrorKind kind, std::size_t position, const std::string& what,
                         long frame)
    : Error(std::string(to_string(kind)) + " stream at byte " + std::to_string(position) +
            (frame >= 0 ? " (frame " + std::to_string(frame) + ")" : std::string()) + ": " +
            what),
      kind_(kind),
      position_(position),
      frame_(frame),
      detail_(what) {}

}  // namespace gsvc
