#include "tid/wire.hpp"

#include "tid/error.hpp"
#include "utf8.hpp"

namespace tid {

std::string encode_frame(std::string_view serialized) {
  if (serialized.find('\n') != std::string_view::npos) throw Error(Errc::ContainsNewline);
  std::string frame;
  frame.reserve(serialized.size() + 1);
  frame.append(serialized);
  frame += '\n';
  return frame;
}

FrameDecoder::FrameDecoder(std::size_t max_frame_bytes) : max_frame_bytes_(max_frame_bytes) {}

std::vector<std::string> FrameDecoder::feed(std::string_view chunk) {
  if (failure_) throw *failure_;

  std::vector<std::string> frames;
  const std::size_t scanned = buffer_.size();
  buffer_.append(chunk);

  std::size_t start = 0;
  for (auto lf = buffer_.find('\n', scanned); lf != std::string::npos;
       lf = buffer_.find('\n', start)) {
    std::string frame = buffer_.substr(start, lf - start);
    start = lf + 1;
    if (frame.size() > max_frame_bytes_) {
      failure_ = Error(Errc::FrameTooLarge, std::to_string(frame.size()) + " bytes");
      throw *failure_;
    }
    if (!utf8::valid(frame)) {
      failure_ = Error(Errc::InvalidUtf8);
      throw *failure_;
    }
    frames.push_back(std::move(frame));
  }
  buffer_.erase(0, start);

  if (buffer_.size() > max_frame_bytes_) {
    failure_ = Error(Errc::FrameTooLarge, std::to_string(buffer_.size()) + " bytes without LF");
    throw *failure_;
  }
  return frames;
}

}  // namespace tid
