#include "tid/error.hpp"

namespace tid {

std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::MalformedXml: return "MalformedXml";
    case Errc::MissingMandatory: return "MissingMandatory";
    case Errc::BadNumber: return "BadNumber";
    case Errc::BadVersionFormat: return "BadVersionFormat";
    case Errc::EmptyField: return "EmptyField";
    case Errc::NegativeBlock: return "NegativeBlock";
    case Errc::ContainsNewline: return "ContainsNewline";
    case Errc::FrameTooLarge: return "FrameTooLarge";
    case Errc::InvalidUtf8: return "InvalidUtf8";
    case Errc::PortInUse: return "PortInUse";
    case Errc::BindFailure: return "BindFailure";
    case Errc::ConnectionRefused: return "ConnectionRefused";
    case Errc::Timeout: return "Timeout";
    case Errc::Disconnected: return "Disconnected";
    case Errc::IoFailure: return "IoFailure";
    case Errc::EmptySamples: return "EmptySamples";
    case Errc::ServerUnreachable: return "ServerUnreachable";
    case Errc::MessageLost: return "MessageLost";
    case Errc::InvalidConfig: return "InvalidConfig";
  }
  return "Unknown";
}

namespace {
std::string compose(Errc code, const std::string& detail) {
  std::string what(to_string(code));
  if (!detail.empty()) {
    what += ": ";
    what += detail;
  }
  return what;
}
}  // namespace

Error::Error(Errc code, std::string detail)
    : std::runtime_error(compose(code, detail)), code_(code), detail_(std::move(detail)) {}

}  // namespace tid
