#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "tid/acqsim.hpp"
#include "tid/message.hpp"
#include "tid/wire.hpp"

namespace tid {

using ClientId = std::uint64_t;

/// Sender id for messages injected by the hub's owner rather than a client.
inline constexpr ClientId kLocalSender = 0;

inline constexpr std::uint16_t kDefaultPort = 9001;

// Outbound side of one registered client.
class Peer {
 public:
  virtual ~Peer() = default;
  /// Must not block. Returns false if the frame cannot be queued; the hub
  /// then disconnects the peer.
  virtual bool deliver(const std::shared_ptr<const std::string>& frame) = 0;
  /// Must not call back into the hub.
  virtual void close() = 0;
};

struct ServerOptions {
  std::uint16_t port = kDefaultPort;
  std::string bind_address = "0.0.0.0";
  std::size_t max_frame_bytes = kDefaultMaxFrameBytes;
  std::size_t outbound_queue_limit = 1024;
  std::size_t event_store_cap = 1'000'000;
  ProtocolVersion server_version = kLibraryVersion;
  /// Receives warnings (incompatible versions, disconnect causes). Defaults
  /// to std::clog when empty.
  std::function<void(std::string_view)> log;
};

struct HubStats {
  std::uint64_t dispatched = 0;
  std::uint64_t deliveries = 0;
  std::uint64_t version_warnings = 0;
  std::uint64_t disconnects = 0;
};

class TcpConnection;
struct ListenState;

// The bus. Stamps incomplete messages, keeps every stamped event, and
// forwards each one to all registered clients except its sender.
//
// Ordering: frames from one sender reach every recipient in send order.
// Nothing is promised about interleaving between different senders.
class DispatchHub {
 public:
  explicit DispatchHub(std::shared_ptr<const BlockSource> block_source, ServerOptions options = {});
  ~DispatchHub();

  DispatchHub(const DispatchHub&) = delete;
  DispatchHub& operator=(const DispatchHub&) = delete;

  /// Binds and starts accepting. Every accepted socket gets TCP_NODELAY and
  /// its own reader and writer threads. Throws Error{PortInUse} or
  /// Error{BindFailure}.
  void start();
  /// Closes the listener and every connection, then joins all threads.
  void stop();
  bool running() const noexcept { return running_.load(); }
  /// Bound port; differs from options().port when that was 0.
  std::uint16_t port() const noexcept { return port_; }

  ClientId attach(std::shared_ptr<Peer> peer);

  /// Fills block (-1 only), absolute and relative (unset only), stores the
  /// result and fans it out. Returns nullopt when `sender` is no longer
  /// registered; such messages are dropped.
  std::optional<TidMessage> on_message(ClientId sender, TidMessage msg);

  void reset_relative_reference();
  std::chrono::steady_clock::time_point relative_reference() const;

  /// Idempotent.
  void disconnect(ClientId id, std::string_view cause);

  /// One canonical message per line. Throws Error{IoFailure}.
  std::size_t save_events(std::ostream& out) const;
  std::size_t save_events(const std::filesystem::path& path) const;

  std::vector<std::string> events() const;
  std::size_t client_count() const;
  std::vector<ClientId> client_ids() const;
  bool is_registered(ClientId id) const;
  HubStats stats() const;
  const ServerOptions& options() const noexcept { return options_; }

 private:
  friend class TcpConnection;

  void accept_loop();
  void reap_finished(bool wait_all);
  void disconnect_locked(ClientId id, std::string_view cause);
  void log(std::string_view line) const;

  std::shared_ptr<const BlockSource> block_source_;
  ServerOptions options_;

  mutable std::mutex mutex_;
  std::map<ClientId, std::shared_ptr<Peer>> peers_;
  ClientId next_id_ = 1;
  std::deque<std::string> event_store_;
  std::chrono::steady_clock::time_point relative_reference_;
  HubStats stats_;

  std::atomic<bool> running_{false};
  std::atomic<bool> stopping_{false};
  std::uint16_t port_ = 0;
  std::unique_ptr<ListenState> listen_;
  std::thread acceptor_;
  std::mutex connections_mutex_;
  std::vector<std::shared_ptr<TcpConnection>> connections_;
};

}  // namespace tid
