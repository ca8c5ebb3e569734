#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace tid {

enum class Errc {
  MalformedXml,
  MissingMandatory,
  BadNumber,
  BadVersionFormat,
  EmptyField,
  NegativeBlock,
  ContainsNewline,
  FrameTooLarge,
  InvalidUtf8,
  PortInUse,
  BindFailure,
  ConnectionRefused,
  Timeout,
  Disconnected,
  IoFailure,
  EmptySamples,
  ServerUnreachable,
  MessageLost,
  InvalidConfig,
};

std::string_view to_string(Errc code) noexcept;

// Every failure in the library is reported as a tid::Error carrying a code.
// `detail()` holds the offending attribute name, sequence number, etc.
class Error : public std::runtime_error {
 public:
  Error(Errc code, std::string detail = {});

  Errc code() const noexcept { return code_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  Errc code_;
  std::string detail_;
};

}  // namespace tid
