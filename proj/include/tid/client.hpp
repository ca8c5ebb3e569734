#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

#include "tid/message.hpp"
#include "tid/wire.hpp"

namespace tid {

struct ClientOptions {
  ProtocolVersion library_version = kLibraryVersion;
  std::size_t max_frame_bytes = kDefaultMaxFrameBytes;
  std::chrono::milliseconds connect_timeout{2000};
  /// Warnings for inbound messages with an incompatible version. Defaults
  /// to std::clog when empty.
  std::function<void(std::string_view)> log;
};

// Connection to a TiD server.
//
// Inbound messages are read on one dedicated thread and either queued for
// receive() or handed to the registered sink, always in arrival order.
// send() may be called from any thread; frames are never interleaved.
class TidClient {
 public:
  using Sink = std::function<void(const TidMessage&)>;

  /// Throws Error{ConnectionRefused} or Error{Timeout}.
  static TidClient connect(const std::string& host, std::uint16_t port, ClientOptions options = {});

  TidClient(TidClient&&) noexcept;
  TidClient& operator=(TidClient&&) noexcept;
  ~TidClient();

  /// Event with this client's version and last known block, absolute time
  /// now and relative left for the server. Throws Error{EmptyField}.
  TidMessage new_event(std::string description, std::string family, std::int64_t event_code) const;

  /// Throws Error{NegativeBlock} for block < 0.
  void set_current_block(std::int64_t block);
  std::int64_t last_known_block() const noexcept;

  /// Throws Error{Disconnected}.
  void send(const TidMessage& msg);

  /// Oldest undelivered message, or nullopt after `timeout`. Throws
  /// Error{Disconnected} once the connection is gone and the queue is empty.
  std::optional<TidMessage> receive(std::chrono::milliseconds timeout);

  /// Messages arriving after this call go to `sink` instead of the queue.
  /// The sink runs on the inbound thread. Pass nullptr to go back to queueing.
  void set_sink(Sink sink);

  void close();
  bool connected() const;
  bool nodelay_enabled() const;
  std::uint64_t version_warnings() const;

 private:
  struct State;
  explicit TidClient(std::shared_ptr<State> state);

  std::shared_ptr<State> state_;
};

}  // namespace tid
