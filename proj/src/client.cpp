#include "tid/client.hpp"

#include <array>
#include <atomic>
#include <condition_variable>
#include <deque>
#include <iostream>
#include <mutex>
#include <thread>

#include "socket.hpp"
#include "tid/error.hpp"

namespace tid {

struct TidClient::State {
  ClientOptions options;
  net::Socket socket;
  std::atomic<std::int64_t> last_known_block{TidMessage::kUnknownBlock};
  std::atomic<std::uint64_t> version_warnings{0};

  std::mutex send_mutex;

  mutable std::mutex inbound_mutex;
  std::condition_variable inbound_cv;
  std::deque<TidMessage> inbound;
  Sink sink;
  bool connected = true;
  bool closed = false;

  std::thread reader;

  void read_loop() {
    FrameDecoder decoder(options.max_frame_bytes);
    std::array<char, 16384> buffer{};
    for (;;) {
      const long n = net::recv_some(socket, buffer);
      if (n <= 0) break;
      try {
        for (auto& frame : decoder.feed(std::string_view(buffer.data(), static_cast<std::size_t>(n)))) {
          dispatch(parse_message(frame));
        }
      } catch (const Error& e) {
        warn(std::string("closing connection: ") + e.what());
        socket.shutdown();
        break;
      }
    }
    {
      std::lock_guard lock(inbound_mutex);
      connected = false;
    }
    inbound_cv.notify_all();
  }

  void dispatch(TidMessage msg) {
    if (!versions_compatible(msg.version(), options.library_version)) {
      ++version_warnings;
      warn("incompatible message version " + msg.version().to_string());
    }
    Sink current;
    {
      std::lock_guard lock(inbound_mutex);
      if (!sink) {
        inbound.push_back(std::move(msg));
        inbound_cv.notify_one();
        return;
      }
      current = sink;
    }
    current(msg);
  }

  void warn(std::string_view line) const {
    if (options.log) {
      options.log(line);
    } else {
      std::clog << "tid-client: " << line << '\n';
    }
  }

  void shutdown() {
    bool first = false;
    {
      std::lock_guard lock(inbound_mutex);
      first = !std::exchange(closed, true);
      connected = false;
    }
    if (first) {
      inbound_cv.notify_all();
      socket.shutdown();
    }
    // A sink that closes its own client runs on the reader thread.
    if (reader.joinable()) {
      if (reader.get_id() == std::this_thread::get_id()) {
        reader.detach();
      } else {
        reader.join();
      }
    }
  }
};

TidClient::TidClient(std::shared_ptr<State> state) : state_(std::move(state)) {}
TidClient::TidClient(TidClient&&) noexcept = default;

TidClient& TidClient::operator=(TidClient&& other) noexcept {
  if (this != &other) {
    close();
    state_ = std::move(other.state_);
  }
  return *this;
}

TidClient::~TidClient() { close(); }

TidClient TidClient::connect(const std::string& host, std::uint16_t port, ClientOptions options) {
  auto state = std::make_shared<State>();
  state->socket = net::connect_tcp(host, port, options.connect_timeout);
  net::set_nodelay(state->socket);
  state->options = std::move(options);
  state->reader = std::thread([state] { state->read_loop(); });
  return TidClient(std::move(state));
}

TidMessage TidClient::new_event(std::string description, std::string family,
                                std::int64_t event_code) const {
  TidMessage msg(state_ ? state_->options.library_version : kLibraryVersion, std::move(description),
                 std::move(family), event_code);
  msg.set_block(last_known_block());
  msg.set_absolute(wall_clock_now());
  return msg;
}

void TidClient::set_current_block(std::int64_t block) {
  if (block < 0) throw Error(Errc::NegativeBlock, std::to_string(block));
  if (!state_) throw Error(Errc::Disconnected);
  state_->last_known_block = block;
}

std::int64_t TidClient::last_known_block() const noexcept {
  return state_ ? state_->last_known_block.load() : TidMessage::kUnknownBlock;
}

void TidClient::send(const TidMessage& msg) {
  if (!connected()) throw Error(Errc::Disconnected);
  const auto frame = encode_frame(serialize_message(msg));
  std::lock_guard lock(state_->send_mutex);
  if (!net::send_all(state_->socket, frame)) throw Error(Errc::Disconnected, "send failed");
}

std::optional<TidMessage> TidClient::receive(std::chrono::milliseconds timeout) {
  if (!state_) throw Error(Errc::Disconnected);
  std::unique_lock lock(state_->inbound_mutex);
  state_->inbound_cv.wait_for(lock, timeout,
                              [this] { return !state_->inbound.empty() || !state_->connected; });
  if (!state_->inbound.empty()) {
    TidMessage msg = std::move(state_->inbound.front());
    state_->inbound.pop_front();
    return msg;
  }
  if (!state_->connected) throw Error(Errc::Disconnected);
  return std::nullopt;
}

void TidClient::set_sink(Sink sink) {
  if (!state_) throw Error(Errc::Disconnected);
  std::lock_guard lock(state_->inbound_mutex);
  state_->sink = std::move(sink);
}

void TidClient::close() {
  if (state_) state_->shutdown();
}

bool TidClient::connected() const {
  if (!state_) return false;
  std::lock_guard lock(state_->inbound_mutex);
  return state_->connected;
}

bool TidClient::nodelay_enabled() const { return state_ && net::nodelay_enabled(state_->socket); }

std::uint64_t TidClient::version_warnings() const {
  return state_ ? state_->version_warnings.load() : 0;
}

}  // namespace tid
