#include "tid/server.hpp"

#include <array>
#include <condition_variable>
#include <fstream>
#include <iostream>

#include "socket.hpp"
#include "tid/error.hpp"

namespace tid {

struct ListenState {
  net::Socket socket;
};

// One accepted client: a reader thread feeding the hub and a writer thread
// draining a bounded outbound queue.
class TcpConnection final : public Peer {
 public:
  TcpConnection(DispatchHub& hub, net::Socket socket)
      : hub_(hub), socket_(std::move(socket)), decoder_(hub.options().max_frame_bytes) {}

  ~TcpConnection() override { join(); }

  void start(ClientId id) {
    id_ = id;
    reader_ = std::thread([this] { read_loop(); });
    writer_ = std::thread([this] { write_loop(); });
  }

  bool deliver(const std::shared_ptr<const std::string>& frame) override {
    {
      std::lock_guard lock(queue_mutex_);
      if (closed_ || queue_.size() >= hub_.options().outbound_queue_limit) return false;
      queue_.push_back(frame);
    }
    queue_cv_.notify_one();
    return true;
  }

  void close() override {
    {
      std::lock_guard lock(queue_mutex_);
      closed_ = true;
      queue_.clear();
    }
    queue_cv_.notify_all();
    socket_.shutdown();
  }

  bool finished() const noexcept { return reader_done_.load() && writer_done_.load(); }

  void join() {
    if (reader_.joinable()) reader_.join();
    if (writer_.joinable()) writer_.join();
  }

 private:
  bool is_closed() {
    std::lock_guard lock(queue_mutex_);
    return closed_;
  }

  void read_loop() {
    std::array<char, 16384> buffer{};
    std::string cause = "peer closed connection";
    for (;;) {
      const long n = net::recv_some(socket_, buffer);
      if (n <= 0) break;
      try {
        auto frames = decoder_.feed(std::string_view(buffer.data(), static_cast<std::size_t>(n)));
        for (auto& frame : frames) {
          if (is_closed()) break;
          hub_.on_message(id_, parse_message(frame));
        }
      } catch (const Error& e) {
        cause = e.what();
        break;
      }
      if (is_closed()) break;
    }
    hub_.disconnect(id_, cause);
    reader_done_ = true;
  }

  void write_loop() {
    for (;;) {
      std::shared_ptr<const std::string> frame;
      {
        std::unique_lock lock(queue_mutex_);
        queue_cv_.wait(lock, [this] { return closed_ || !queue_.empty(); });
        if (closed_) break;
        frame = std::move(queue_.front());
        queue_.pop_front();
      }
      if (!net::send_all(socket_, *frame)) {
        hub_.disconnect(id_, "send failed");
        break;
      }
    }
    writer_done_ = true;
  }

  DispatchHub& hub_;
  net::Socket socket_;
  FrameDecoder decoder_;
  ClientId id_ = 0;

  std::mutex queue_mutex_;
  std::condition_variable queue_cv_;
  std::deque<std::shared_ptr<const std::string>> queue_;
  bool closed_ = false;

  std::thread reader_;
  std::thread writer_;
  std::atomic<bool> reader_done_{false};
  std::atomic<bool> writer_done_{false};
};

DispatchHub::DispatchHub(std::shared_ptr<const BlockSource> block_source, ServerOptions options)
    : block_source_(std::move(block_source)),
      options_(std::move(options)),
      relative_reference_(std::chrono::steady_clock::now()) {
  if (!block_source_) throw Error(Errc::InvalidConfig, "block source required");
}

DispatchHub::~DispatchHub() { stop(); }

void DispatchHub::start() {
  if (running_) return;
  auto listener = net::listen_tcp(options_.bind_address, options_.port);
  port_ = listener.port;
  listen_ = std::make_unique<ListenState>(ListenState{std::move(listener.socket)});
  stopping_ = false;
  running_ = true;
  acceptor_ = std::thread([this] { accept_loop(); });
}

void DispatchHub::stop() {
  if (!running_.exchange(false)) return;
  stopping_ = true;
  if (acceptor_.joinable()) acceptor_.join();
  listen_.reset();

  std::vector<std::shared_ptr<Peer>> peers;
  {
    std::lock_guard lock(mutex_);
    for (auto& [id, peer] : peers_) peers.push_back(peer);
    peers_.clear();
  }
  for (auto& peer : peers) peer->close();
  reap_finished(true);
}

void DispatchHub::accept_loop() {
  using namespace std::chrono_literals;
  while (!stopping_) {
    net::Socket socket = net::accept_tcp(listen_->socket, 50ms);
    reap_finished(false);
    if (!socket.valid()) continue;
    try {
      net::set_nodelay(socket);
    } catch (const Error& e) {
      log(e.what());
      continue;
    }
    auto connection = std::make_shared<TcpConnection>(*this, std::move(socket));
    const ClientId id = attach(connection);
    connection->start(id);
    std::lock_guard lock(connections_mutex_);
    connections_.push_back(std::move(connection));
  }
}

void DispatchHub::reap_finished(bool wait_all) {
  std::vector<std::shared_ptr<TcpConnection>> done;
  {
    std::lock_guard lock(connections_mutex_);
    auto keep = connections_.begin();
    for (auto& c : connections_) {
      if (wait_all || c->finished()) {
        done.push_back(std::move(c));
      } else {
        *keep++ = std::move(c);
      }
    }
    connections_.erase(keep, connections_.end());
  }
  for (auto& c : done) c->join();
}

ClientId DispatchHub::attach(std::shared_ptr<Peer> peer) {
  std::lock_guard lock(mutex_);
  const ClientId id = next_id_++;
  peers_.emplace(id, std::move(peer));
  return id;
}

std::optional<TidMessage> DispatchHub::on_message(ClientId sender, TidMessage msg) {
  std::lock_guard lock(mutex_);
  if (sender != kLocalSender && !peers_.contains(sender)) return std::nullopt;

  if (msg.block() == TidMessage::kUnknownBlock) msg.set_block(block_source_->current_block());
  if (!msg.absolute()) msg.set_absolute(wall_clock_now());
  if (!msg.relative()) {
    msg.set_relative(to_micro_duration(std::chrono::steady_clock::now() - relative_reference_));
  }

  if (!versions_compatible(msg.version(), options_.server_version)) {
    ++stats_.version_warnings;
    log("incompatible message version " + msg.version().to_string() + " from client " +
        std::to_string(sender) + " (server " + options_.server_version.to_string() + ")");
  }

  auto line = serialize_message(msg);
  auto frame = std::make_shared<const std::string>(encode_frame(line));
  event_store_.push_back(std::move(line));
  while (event_store_.size() > options_.event_store_cap) event_store_.pop_front();

  std::vector<ClientId> overflowed;
  for (auto& [id, peer] : peers_) {
    if (id == sender) continue;
    if (peer->deliver(frame)) {
      ++stats_.deliveries;
    } else {
      overflowed.push_back(id);
    }
  }
  for (ClientId id : overflowed) disconnect_locked(id, "outbound queue overflow");
  ++stats_.dispatched;
  return msg;
}

void DispatchHub::reset_relative_reference() {
  std::lock_guard lock(mutex_);
  relative_reference_ = std::chrono::steady_clock::now();
}

std::chrono::steady_clock::time_point DispatchHub::relative_reference() const {
  std::lock_guard lock(mutex_);
  return relative_reference_;
}

void DispatchHub::disconnect(ClientId id, std::string_view cause) {
  std::lock_guard lock(mutex_);
  disconnect_locked(id, cause);
}

void DispatchHub::disconnect_locked(ClientId id, std::string_view cause) {
  const auto it = peers_.find(id);
  if (it == peers_.end()) return;
  auto peer = std::move(it->second);
  peers_.erase(it);
  peer->close();
  ++stats_.disconnects;
  log("client " + std::to_string(id) + " disconnected: " + std::string(cause));
}

std::size_t DispatchHub::save_events(std::ostream& out) const {
  const auto lines = events();
  for (const auto& line : lines) out << line << '\n';
  out.flush();
  if (!out) throw Error(Errc::IoFailure, "writing event store");
  return lines.size();
}

std::size_t DispatchHub::save_events(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::IoFailure, "cannot open " + path.string());
  return save_events(out);
}

std::vector<std::string> DispatchHub::events() const {
  std::lock_guard lock(mutex_);
  return {event_store_.begin(), event_store_.end()};
}

std::size_t DispatchHub::client_count() const {
  std::lock_guard lock(mutex_);
  return peers_.size();
}

std::vector<ClientId> DispatchHub::client_ids() const {
  std::lock_guard lock(mutex_);
  std::vector<ClientId> ids;
  ids.reserve(peers_.size());
  for (const auto& [id, peer] : peers_) ids.push_back(id);
  return ids;
}

bool DispatchHub::is_registered(ClientId id) const {
  std::lock_guard lock(mutex_);
  return peers_.contains(id);
}

HubStats DispatchHub::stats() const {
  std::lock_guard lock(mutex_);
  return stats_;
}

void DispatchHub::log(std::string_view line) const {
  if (options_.log) {
    options_.log(line);
  } else {
    std::clog << "tid-server: " << line << '\n';
  }
}

}  // namespace tid
