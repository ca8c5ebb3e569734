#include "tid/bench.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <complex>
#include <condition_variable>
#include <limits>
#include <mutex>
#include <numbers>
#include <optional>
#include <ostream>

#include "tid/client.hpp"

namespace tid::bench {

namespace {

using Clock = std::chrono::steady_clock;

constexpr std::int64_t kSyncSequence = -1;
// Room left in a frame for the attributes the server adds while stamping.
constexpr std::size_t kStampingHeadroom = 64;

double micros_between(Clock::time_point from, Clock::time_point to) {
  return std::chrono::duration<double, std::micro>(to - from).count();
}

void validate(const BenchConfig& config) {
  if (config.message_count == 0) throw Error(Errc::InvalidConfig, "message_count must be positive");
  if (config.payload_lengths.empty()) throw Error(Errc::InvalidConfig, "no payload lengths");
  for (auto length : config.payload_lengths) {
    if (length == 0) throw Error(Errc::InvalidConfig, "payload lengths must be positive");
    const auto probe = serialize_message(make_probe(length, -1'000'000'000));
    if (probe.size() + 1 + kStampingHeadroom > kDefaultMaxFrameBytes) {
      throw Error(Errc::InvalidConfig, "payload length " + std::to_string(length) + " exceeds frame limit");
    }
  }
}

TidClient connect_or_throw(const BenchConfig& config) {
  try {
    return TidClient::connect(config.host, config.port);
  } catch (const Error& e) {
    throw Error(Errc::ServerUnreachable, e.what());
  }
}

// Collects receive timestamps on the receiver's inbound thread.
class ArrivalLog {
 public:
  void record(const TidMessage& msg) {
    const auto now = Clock::now();
    {
      std::lock_guard lock(mutex_);
      if (msg.event() == kSyncSequence) {
        synced_ = true;
      } else if (msg.event() == expected_) {
        arrived_at_ = now;
        arrived_ = true;
      }
    }
    cv_.notify_all();
  }

  void expect(std::int64_t sequence) {
    std::lock_guard lock(mutex_);
    expected_ = sequence;
    arrived_ = false;
  }

  std::optional<Clock::time_point> wait(std::chrono::milliseconds timeout) {
    std::unique_lock lock(mutex_);
    if (!cv_.wait_for(lock, timeout, [this] { return arrived_; })) return std::nullopt;
    return arrived_at_;
  }

  bool wait_synced(std::chrono::milliseconds timeout) {
    std::unique_lock lock(mutex_);
    return cv_.wait_for(lock, timeout, [this] { return synced_; });
  }

 private:
  std::mutex mutex_;
  std::condition_variable cv_;
  std::int64_t expected_ = std::numeric_limits<std::int64_t>::min();
  bool arrived_ = false;
  bool synced_ = false;
  Clock::time_point arrived_at_;
};

// Both clients must be registered with the hub before the first measured
// message, so probe until one sync message makes it through.
void synchronize(TidClient& sender, ArrivalLog& log, std::chrono::milliseconds timeout) {
  using namespace std::chrono_literals;
  const auto deadline = Clock::now() + timeout;
  while (Clock::now() < deadline) {
    sender.send(make_probe(1, kSyncSequence));
    if (log.wait_synced(10ms)) return;
  }
  throw Error(Errc::ServerUnreachable, "bus did not forward synchronisation probes");
}

std::vector<LatencySample> run_dispatch(const BenchConfig& config) {
  TidClient sender = connect_or_throw(config);
  TidClient receiver = connect_or_throw(config);
  ArrivalLog log;
  receiver.set_sink([&log](const TidMessage& msg) { log.record(msg); });
  synchronize(sender, log, config.receive_timeout);

  std::vector<LatencySample> samples;
  samples.reserve(config.message_count * config.payload_lengths.size());
  std::int64_t warmup_sequence = -2;
  std::int64_t sequence = 0;

  auto round_trip = [&](std::int64_t seq, std::size_t length) {
    auto probe = make_probe(length, seq);
    log.expect(seq);
    const auto sent_at = Clock::now();
    sender.send(probe);
    const auto arrived_at = log.wait(config.receive_timeout);
    if (!arrived_at) throw Error(Errc::MessageLost, std::to_string(seq));
    return micros_between(sent_at, *arrived_at);
  };

  for (auto length : config.payload_lengths) {
    for (std::size_t i = 0; i < config.warmup_count; ++i) round_trip(warmup_sequence--, length);
    for (std::size_t i = 0; i < config.message_count; ++i, ++sequence) {
      samples.push_back({sequence, length, round_trip(sequence, length)});
    }
  }
  receiver.set_sink(nullptr);
  return samples;
}

std::vector<LatencySample> run_loopback(const BenchConfig& config) {
  TidClient sender = connect_or_throw(config);
  std::vector<LatencySample> samples;
  samples.reserve(config.message_count * config.payload_lengths.size());
  std::int64_t warmup_sequence = -2;
  std::int64_t sequence = 0;
  for (auto length : config.payload_lengths) {
    for (std::size_t i = 0; i < config.warmup_count; ++i) {
      sender.send(make_probe(length, warmup_sequence--));
    }
    for (std::size_t i = 0; i < config.message_count; ++i, ++sequence) {
      const auto probe = make_probe(length, sequence);
      const auto start = Clock::now();
      sender.send(probe);
      const auto stop = Clock::now();
      samples.push_back({sequence, length, micros_between(start, stop)});
    }
  }
  return samples;
}

std::string format_number(double value) {
  std::array<char, 64> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  return std::string(buf.data(), ptr);
}

void finish(std::ostream& out) {
  out.flush();
  if (!out) throw Error(Errc::IoFailure, "writing CSV");
}

}  // namespace

TidMessage make_probe(std::size_t payload_length, std::int64_t sequence) {
  TidMessage msg(kLibraryVersion, std::string(payload_length, 'x'), std::string(kFamilyCustom), sequence);
  msg.set_absolute(wall_clock_now());
  return msg;
}

std::vector<LatencySample> run_latency_test(const BenchConfig& config) {
  validate(config);
  return config.mode == Mode::Dispatch ? run_dispatch(config) : run_loopback(config);
}

std::vector<HistogramBin> histogram(std::span<const double> values, double bin_width_micros) {
  if (!(bin_width_micros > 0.0)) throw Error(Errc::InvalidConfig, "bin width must be positive");
  if (values.empty()) return {};
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  const auto first = static_cast<std::int64_t>(std::floor(*lo / bin_width_micros));
  const auto last = static_cast<std::int64_t>(std::floor(*hi / bin_width_micros));

  std::vector<HistogramBin> bins(static_cast<std::size_t>(last - first + 1));
  for (std::size_t k = 0; k < bins.size(); ++k) {
    bins[k].bin_start_micros = static_cast<double>(first + static_cast<std::int64_t>(k)) * bin_width_micros;
  }
  for (double v : values) {
    const auto k = static_cast<std::int64_t>(std::floor(v / bin_width_micros)) - first;
    ++bins[static_cast<std::size_t>(k)].count;
  }
  return bins;
}

std::vector<HistogramBin> histogram(std::span<const LatencySample> samples, double bin_width_micros) {
  const auto values = latencies(samples);
  return histogram(std::span<const double>(values), bin_width_micros);
}

TransferCurve jitter_transfer_function(std::span<const double> jitter_micros,
                                       std::span<const double> frequencies_hz) {
  if (jitter_micros.empty()) throw Error(Errc::EmptySamples);

  // Centre on the mean, measured from the first sample so equal inputs give
  // exactly zero offsets.
  const double origin = jitter_micros.front();
  double mean_delta = 0.0;
  for (double t : jitter_micros) mean_delta += t - origin;
  mean_delta /= static_cast<double>(jitter_micros.size());

  std::vector<double> offsets_s;
  offsets_s.reserve(jitter_micros.size());
  for (double t : jitter_micros) offsets_s.push_back(((t - origin) - mean_delta) * 1e-6);

  TransferCurve curve;
  curve.frequencies_hz.assign(frequencies_hz.begin(), frequencies_hz.end());
  curve.attenuation.reserve(frequencies_hz.size());
  const double n = static_cast<double>(offsets_s.size());
  for (double f : frequencies_hz) {
    std::complex<double> sum{0.0, 0.0};
    for (double tau : offsets_s) sum += std::polar(1.0, -2.0 * std::numbers::pi * f * tau);
    curve.attenuation.push_back(std::min(1.0, std::abs(sum / n)));
  }
  return curve;
}

LatencySummary summarize(std::span<const double> values) {
  if (values.empty()) throw Error(Errc::EmptySamples);
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const auto n = sorted.size();
  LatencySummary s;
  s.count = n;
  s.min = sorted.front();
  s.max = sorted.back();
  s.median = n % 2 == 1 ? sorted[n / 2] : (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0;
  const auto rank = static_cast<std::size_t>(std::ceil(0.99 * static_cast<double>(n)));
  s.p99 = sorted[std::max<std::size_t>(rank, 1) - 1];
  return s;
}

std::vector<double> latencies(std::span<const LatencySample> samples) {
  std::vector<double> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back(s.latency_micros);
  return out;
}

std::vector<double> latencies_for_length(std::span<const LatencySample> samples, std::size_t length) {
  std::vector<double> out;
  for (const auto& s : samples) {
    if (s.payload_length == length) out.push_back(s.latency_micros);
  }
  return out;
}

std::size_t export_csv(std::span<const LatencySample> samples, std::ostream& out) {
  out << kLatencyCsvHeader << '\n';
  for (const auto& s : samples) {
    out << s.sequence << ',' << s.payload_length << ',' << format_number(s.latency_micros) << '\n';
  }
  finish(out);
  return samples.size();
}

std::size_t export_csv(std::span<const HistogramBin> bins, std::ostream& out) {
  out << kHistogramCsvHeader << '\n';
  for (const auto& b : bins) out << format_number(b.bin_start_micros) << ',' << b.count << '\n';
  finish(out);
  return bins.size();
}

std::size_t export_csv(const TransferCurve& curve, std::ostream& out) {
  out << kTransferCsvHeader << '\n';
  for (std::size_t i = 0; i < curve.frequencies_hz.size(); ++i) {
    out << format_number(curve.frequencies_hz[i]) << ',' << format_number(curve.attenuation[i]) << '\n';
  }
  finish(out);
  return curve.frequencies_hz.size();
}

}  // namespace tid::bench
