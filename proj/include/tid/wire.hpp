#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tid/error.hpp"

namespace tid {

inline constexpr std::size_t kDefaultMaxFrameBytes = 65536;

/// Appends the LF terminator. Throws Error{ContainsNewline} if `serialized`
/// already contains one.
std::string encode_frame(std::string_view serialized);

// Splits a TCP byte stream into LF-terminated frames.
//
// Output is independent of how the stream is chunked. FrameTooLarge and
// InvalidUtf8 are fatal: once thrown, every later feed() rethrows.
class FrameDecoder {
 public:
  explicit FrameDecoder(std::size_t max_frame_bytes = kDefaultMaxFrameBytes);

  /// Returns every frame completed by `chunk`, LF stripped.
  std::vector<std::string> feed(std::string_view chunk);

  std::size_t buffered() const noexcept { return buffer_.size(); }
  std::size_t max_frame_bytes() const noexcept { return max_frame_bytes_; }

 private:
  std::string buffer_;
  std::size_t max_frame_bytes_;
  std::optional<Error> failure_;
};

}  // namespace tid
