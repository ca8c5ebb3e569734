#pragma once

#include <chrono>
#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace tid {

/// $CURRENT.$REVISION.$MINOR.$BUGFIX
struct ProtocolVersion {
  std::uint32_t current = 0;
  std::uint32_t revision = 0;
  std::uint32_t minor = 0;
  std::uint32_t bugfix = 0;

  friend auto operator<=>(const ProtocolVersion&, const ProtocolVersion&) = default;

  std::string to_string() const;
  /// Throws Error{BadVersionFormat} unless `text` is exactly four dot-separated integers.
  static ProtocolVersion parse(std::string_view text);
};

/// Version stamped into messages built by this library.
inline constexpr ProtocolVersion kLibraryVersion{0, 3, 0, 0};

/// Only a change of CURRENT breaks compatibility.
constexpr bool versions_compatible(const ProtocolVersion& a, const ProtocolVersion& b) noexcept {
  return a.current == b.current;
}

namespace detail {

// Shared storage for second+microsecond quantities. Micros is kept in
// [0, 999999]; construction from a raw microsecond count floors toward -inf.
template <class Tag>
class SecondsMicros {
 public:
  static constexpr std::int64_t kMicrosPerSecond = 1'000'000;

  constexpr SecondsMicros() = default;
  constexpr SecondsMicros(std::int64_t seconds, std::int64_t micros)
      : SecondsMicros(from_micros(seconds * kMicrosPerSecond + micros)) {}

  static constexpr SecondsMicros from_micros(std::int64_t total) {
    SecondsMicros out;
    out.seconds_ = total / kMicrosPerSecond;
    out.micros_ = total % kMicrosPerSecond;
    if (out.micros_ < 0) {
      out.micros_ += kMicrosPerSecond;
      --out.seconds_;
    }
    return out;
  }

  constexpr std::int64_t seconds() const noexcept { return seconds_; }
  constexpr std::int64_t micros() const noexcept { return micros_; }
  constexpr std::int64_t total_micros() const noexcept {
    return seconds_ * kMicrosPerSecond + micros_;
  }

  friend constexpr auto operator<=>(const SecondsMicros&, const SecondsMicros&) = default;

 private:
  std::int64_t seconds_ = 0;
  std::int64_t micros_ = 0;
};

struct AbsoluteTag {};
struct RelativeTag {};

}  // namespace detail

/// Wall-clock time since 1970-01-01 00:00:00 UTC.
using MicroTime = detail::SecondsMicros<detail::AbsoluteTag>;
/// Elapsed time since a reference point.
using MicroDuration = detail::SecondsMicros<detail::RelativeTag>;

MicroTime wall_clock_now();
MicroDuration to_micro_duration(std::chrono::steady_clock::duration elapsed);

/// Parses "<seconds><sep><fraction>" with sep ',' or '.'. The fraction is a
/// decimal fraction of a second: "5,5" is 5 s 500000 us.
MicroTime parse_microtime(std::string_view text);
MicroDuration parse_microduration(std::string_view text);

/// "<seconds>,<micros>" with micros zero-padded to six digits.
std::string format_micros(std::int64_t seconds, std::int64_t micros);

inline constexpr std::string_view kFamilyBiosig = "biosig";
inline constexpr std::string_view kFamilyCustom = "custom";

/// One event on the bus.
///
/// description and family are never empty and block is -1 (unknown) or a
/// block index. absolute/relative are std::nullopt when the sender left them
/// for the server to fill.
class TidMessage {
 public:
  static constexpr std::int64_t kUnknownBlock = -1;

  /// Throws Error{EmptyField} for an empty description or family.
  TidMessage(ProtocolVersion version, std::string description, std::string family,
             std::int64_t event);

  const ProtocolVersion& version() const noexcept { return version_; }
  const std::string& description() const noexcept { return description_; }
  std::int64_t block() const noexcept { return block_; }
  const std::string& family() const noexcept { return family_; }
  std::int64_t event() const noexcept { return event_; }
  const std::optional<MicroTime>& absolute() const noexcept { return absolute_; }
  const std::optional<MicroDuration>& relative() const noexcept { return relative_; }
  const std::optional<std::string>& source() const noexcept { return source_; }
  const std::optional<double>& value() const noexcept { return value_; }

  void set_version(ProtocolVersion v) noexcept { version_ = v; }
  void set_description(std::string description);
  void set_family(std::string family);
  void set_event(std::int64_t event) noexcept { event_ = event; }
  /// Throws Error{NegativeBlock} for block < -1.
  void set_block(std::int64_t block);
  void set_absolute(std::optional<MicroTime> t) noexcept { absolute_ = t; }
  void set_relative(std::optional<MicroDuration> t) noexcept { relative_ = t; }
  void set_source(std::optional<std::string> source) { source_ = std::move(source); }
  /// Throws Error{BadNumber} for NaN or infinity.
  void set_value(std::optional<double> value);

  friend bool operator==(const TidMessage&, const TidMessage&) = default;

 private:
  ProtocolVersion version_;
  std::string description_;
  std::int64_t block_ = kUnknownBlock;
  std::string family_;
  std::int64_t event_ = 0;
  std::optional<MicroTime> absolute_;
  std::optional<MicroDuration> relative_;
  std::optional<std::string> source_;
  std::optional<double> value_;
};

/// Decodes one `<tid .../>` element.
///
/// Errors: MalformedXml, MissingMandatory(name), BadNumber(name),
/// BadVersionFormat. Unknown attributes are skipped.
TidMessage parse_message(std::string_view raw);

/// Canonical single-line form; attribute order is version, description,
/// block, family, event, absolute, relative, source, value. Unset timestamps
/// and absent optionals are omitted.
std::string serialize_message(const TidMessage& msg);

/// Decimal text for `value`: at most six fractional digits, trailing zeros
/// trimmed to one, ',' as separator.
std::string format_value(double value);

}  // namespace tid
