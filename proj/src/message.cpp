#include "tid/message.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <map>

#include "tid/error.hpp"
#include "utf8.hpp"

namespace tid {

namespace {

template <class Int>
bool parse_int(std::string_view text, Int& out) {
  if (text.empty()) return false;
  if (text.front() == '+') return false;
  const auto* first = text.data();
  const auto* last = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc{} && ptr == last;
}

bool all_digits(std::string_view text) {
  if (text.empty()) return false;
  for (char c : text) {
    if (c < '0' || c > '9') return false;
  }
  return true;
}

template <class T>
T parse_seconds_micros(std::string_view text) {
  const auto sep = text.find_first_of(",.");
  if (sep == std::string_view::npos) throw Error(Errc::BadNumber, std::string(text));
  const auto whole = text.substr(0, sep);
  const auto frac = text.substr(sep + 1);
  if (!all_digits(whole) || !all_digits(frac) || frac.size() > 6) {
    throw Error(Errc::BadNumber, std::string(text));
  }
  std::int64_t seconds = 0;
  if (!parse_int(whole, seconds)) throw Error(Errc::BadNumber, std::string(text));
  std::int64_t micros = 0;
  parse_int(frac, micros);
  for (auto n = frac.size(); n < 6; ++n) micros *= 10;
  return T(seconds, micros);
}

double parse_decimal(std::string_view text, std::string_view name) {
  std::string normalized(text);
  std::size_t separators = 0;
  for (char& c : normalized) {
    if (c == ',') c = '.';
    if (c == '.') ++separators;
  }
  if (separators > 1 || normalized.empty() || normalized.front() == '+') {
    throw Error(Errc::BadNumber, std::string(name));
  }
  double out = 0.0;
  const auto* last = normalized.data() + normalized.size();
  auto [ptr, ec] = std::from_chars(normalized.data(), last, out);
  if (ec != std::errc{} || ptr != last || !std::isfinite(out)) {
    throw Error(Errc::BadNumber, std::string(name));
  }
  return out;
}

// --- Minimal reader for a single empty XML element. ---

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; }

bool is_name_start(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_' || c == ':' ||
         static_cast<unsigned char>(c) >= 0x80;
}

bool is_name_char(char c) {
  return is_name_start(c) || (c >= '0' && c <= '9') || c == '-' || c == '.';
}

[[noreturn]] void malformed(std::string what) { throw Error(Errc::MalformedXml, std::move(what)); }

void append_code_point(std::string& out, std::uint32_t cp) {
  if (cp == 0 || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) {
    malformed("invalid character reference");
  }
  utf8::append(out, cp);
}

std::string decode_entities(std::string_view raw) {
  std::string out;
  out.reserve(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const char c = raw[i];
    if (c == '<') malformed("'<' in attribute value");
    if (c != '&') {
      out += c;
      continue;
    }
    const auto end = raw.find(';', i);
    if (end == std::string_view::npos) malformed("unterminated entity");
    const auto name = raw.substr(i + 1, end - i - 1);
    if (name == "lt") {
      out += '<';
    } else if (name == "gt") {
      out += '>';
    } else if (name == "amp") {
      out += '&';
    } else if (name == "quot") {
      out += '"';
    } else if (name == "apos") {
      out += '\'';
    } else if (name.size() > 1 && name[0] == '#') {
      std::uint32_t cp = 0;
      std::string_view digits = name.substr(1);
      int base = 10;
      if (digits.front() == 'x') {
        digits.remove_prefix(1);
        base = 16;
      }
      const auto* last = digits.data() + digits.size();
      auto [ptr, ec] = std::from_chars(digits.data(), last, cp, base);
      if (digits.empty() || ec != std::errc{} || ptr != last) malformed("bad character reference");
      append_code_point(out, cp);
    } else {
      malformed("unknown entity");
    }
    i = end;
  }
  return out;
}

using AttributeMap = std::map<std::string, std::string, std::less<>>;

AttributeMap read_tid_element(std::string_view raw) {
  if (!utf8::valid(raw)) malformed("not valid UTF-8");
  std::size_t pos = 0;
  auto skip_space = [&] {
    while (pos < raw.size() && is_space(raw[pos])) ++pos;
  };

  skip_space();
  if (raw.substr(pos, 4) != "<tid") malformed("expected <tid");
  pos += 4;

  AttributeMap attributes;
  for (;;) {
    const std::size_t before = pos;
    skip_space();
    if (pos >= raw.size()) malformed("unterminated element");
    if (raw[pos] == '/') {
      if (raw.substr(pos, 2) != "/>") malformed("expected />");
      pos += 2;
      break;
    }
    if (pos == before) malformed("expected whitespace before attribute");
    if (!is_name_start(raw[pos])) malformed("bad attribute name");
    const std::size_t name_start = pos;
    while (pos < raw.size() && is_name_char(raw[pos])) ++pos;
    std::string name(raw.substr(name_start, pos - name_start));
    skip_space();
    if (pos >= raw.size() || raw[pos] != '=') malformed("expected '=' after " + name);
    ++pos;
    skip_space();
    if (pos >= raw.size() || (raw[pos] != '"' && raw[pos] != '\'')) malformed("expected quote");
    const char quote = raw[pos++];
    const auto close = raw.find(quote, pos);
    if (close == std::string_view::npos) malformed("unterminated attribute value");
    std::string value = decode_entities(raw.substr(pos, close - pos));
    pos = close + 1;
    if (!attributes.emplace(name, std::move(value)).second) malformed("duplicate attribute " + name);
  }
  skip_space();
  if (pos != raw.size()) malformed("trailing content after element");
  return attributes;
}

void escape_into(std::string& out, std::string_view text) {
  for (char c : text) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      case '\t': out += "&#9;"; break;
      case '\n': out += "&#10;"; break;
      case '\r': out += "&#13;"; break;
      default: out += c;
    }
  }
}

void append_attribute(std::string& out, std::string_view name, std::string_view value) {
  out += ' ';
  out += name;
  out += "=\"";
  escape_into(out, value);
  out += '"';
}

}  // namespace

std::string ProtocolVersion::to_string() const {
  return std::to_string(current) + '.' + std::to_string(revision) + '.' + std::to_string(minor) +
         '.' + std::to_string(bugfix);
}

ProtocolVersion ProtocolVersion::parse(std::string_view text) {
  std::array<std::uint32_t, 4> parts{};
  std::size_t index = 0;
  std::size_t start = 0;
  for (;;) {
    const auto dot = text.find('.', start);
    const auto piece = text.substr(start, dot == std::string_view::npos ? text.npos : dot - start);
    if (index >= parts.size() || !all_digits(piece) || !parse_int(piece, parts[index])) {
      throw Error(Errc::BadVersionFormat, std::string(text));
    }
    ++index;
    if (dot == std::string_view::npos) break;
    start = dot + 1;
  }
  if (index != parts.size()) throw Error(Errc::BadVersionFormat, std::string(text));
  return {parts[0], parts[1], parts[2], parts[3]};
}

MicroTime wall_clock_now() {
  using namespace std::chrono;
  const auto since_epoch = duration_cast<microseconds>(system_clock::now().time_since_epoch());
  return MicroTime::from_micros(since_epoch.count());
}

MicroDuration to_micro_duration(std::chrono::steady_clock::duration elapsed) {
  using namespace std::chrono;
  return MicroDuration::from_micros(duration_cast<microseconds>(elapsed).count());
}

MicroTime parse_microtime(std::string_view text) { return parse_seconds_micros<MicroTime>(text); }

MicroDuration parse_microduration(std::string_view text) {
  return parse_seconds_micros<MicroDuration>(text);
}

std::string format_micros(std::int64_t seconds, std::int64_t micros) {
  std::array<char, 48> buf{};
  const int n = std::snprintf(buf.data(), buf.size(), "%lld,%06lld", static_cast<long long>(seconds),
                              static_cast<long long>(micros));
  return std::string(buf.data(), static_cast<std::size_t>(n));
}

std::string format_value(double value) {
  const int size = std::snprintf(nullptr, 0, "%.6f", value);
  std::string text(static_cast<std::size_t>(size) + 1, '\0');
  std::snprintf(text.data(), text.size(), "%.6f", value);
  text.resize(static_cast<std::size_t>(size));
  const auto dot = text.find('.');
  while (text.size() > dot + 2 && text.back() == '0') text.pop_back();
  text[dot] = ',';
  return text;
}

TidMessage::TidMessage(ProtocolVersion version, std::string description, std::string family,
                       std::int64_t event)
    : version_(version), event_(event) {
  set_description(std::move(description));
  set_family(std::move(family));
}

void TidMessage::set_description(std::string description) {
  if (description.empty()) throw Error(Errc::EmptyField, "description");
  description_ = std::move(description);
}

void TidMessage::set_family(std::string family) {
  if (family.empty()) throw Error(Errc::EmptyField, "family");
  family_ = std::move(family);
}

void TidMessage::set_block(std::int64_t block) {
  if (block < kUnknownBlock) throw Error(Errc::NegativeBlock, std::to_string(block));
  block_ = block;
}

void TidMessage::set_value(std::optional<double> value) {
  if (value && !std::isfinite(*value)) throw Error(Errc::BadNumber, "value");
  value_ = value;
}

TidMessage parse_message(std::string_view raw) {
  const AttributeMap attributes = read_tid_element(raw);

  auto mandatory = [&](std::string_view name) -> const std::string& {
    const auto it = attributes.find(name);
    if (it == attributes.end() || it->second.empty()) {
      throw Error(Errc::MissingMandatory, std::string(name));
    }
    return it->second;
  };
  auto optional = [&](std::string_view name) -> const std::string* {
    const auto it = attributes.find(name);
    return it == attributes.end() ? nullptr : &it->second;
  };
  auto integer = [](const std::string& text, std::string_view name) {
    std::int64_t out = 0;
    if (!parse_int(text, out)) throw Error(Errc::BadNumber, std::string(name));
    return out;
  };

  const auto version = ProtocolVersion::parse(mandatory("version"));
  const auto& description = mandatory("description");
  const auto& family = mandatory("family");
  const auto event = integer(mandatory("event"), "event");

  TidMessage msg(version, description, family, event);

  if (const auto* block = optional("block")) {
    const auto value = integer(*block, "block");
    if (value < TidMessage::kUnknownBlock) throw Error(Errc::BadNumber, "block");
    msg.set_block(value);
  }
  if (const auto* absolute = optional("absolute")) {
    try {
      msg.set_absolute(parse_microtime(*absolute));
    } catch (const Error&) {
      throw Error(Errc::BadNumber, "absolute");
    }
  }
  if (const auto* relative = optional("relative")) {
    try {
      msg.set_relative(parse_microduration(*relative));
    } catch (const Error&) {
      throw Error(Errc::BadNumber, "relative");
    }
  }
  if (const auto* source = optional("source")) msg.set_source(*source);
  if (const auto* value = optional("value")) msg.set_value(parse_decimal(*value, "value"));
  return msg;
}

std::string serialize_message(const TidMessage& msg) {
  std::string out;
  out.reserve(160 + msg.description().size());
  out += "<tid";
  append_attribute(out, "version", msg.version().to_string());
  append_attribute(out, "description", msg.description());
  append_attribute(out, "block", std::to_string(msg.block()));
  append_attribute(out, "family", msg.family());
  append_attribute(out, "event", std::to_string(msg.event()));
  if (const auto& t = msg.absolute()) {
    append_attribute(out, "absolute", format_micros(t->seconds(), t->micros()));
  }
  if (const auto& t = msg.relative()) {
    append_attribute(out, "relative", format_micros(t->seconds(), t->micros()));
  }
  if (const auto& source = msg.source()) append_attribute(out, "source", *source);
  if (const auto& value = msg.value()) append_attribute(out, "value", format_value(*value));
  out += "/>";
  return out;
}

}  // namespace tid
