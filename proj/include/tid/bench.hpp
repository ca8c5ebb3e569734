#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tid/error.hpp"
#include "tid/server.hpp"

namespace tid::bench {

enum class Mode {
  /// One client; latency is the duration of the send call.
  Loopback,
  /// Sender and receiver clients in this process; latency is receive time
  /// minus send time on the steady clock, through the bus.
  Dispatch,
};

struct BenchConfig {
  std::size_t message_count = 1000;
  /// Description length in bytes; the description is 'x' repeated.
  std::vector<std::size_t> payload_lengths{32};
  Mode mode = Mode::Dispatch;
  std::string host = "127.0.0.1";
  std::uint16_t port = kDefaultPort;
  std::size_t warmup_count = 100;
  /// How long the receiver may stay silent before a message counts as lost.
  std::chrono::milliseconds receive_timeout{2000};
};

struct LatencySample {
  std::int64_t sequence = 0;
  std::size_t payload_length = 0;
  double latency_micros = 0.0;
};

struct HistogramBin {
  double bin_start_micros = 0.0;
  std::size_t count = 0;

  friend bool operator==(const HistogramBin&, const HistogramBin&) = default;
};

struct TransferCurve {
  std::vector<double> frequencies_hz;
  std::vector<double> attenuation;
};

struct LatencySummary {
  std::size_t count = 0;
  double min = 0.0;
  double median = 0.0;
  double p99 = 0.0;
  double max = 0.0;
};

/// The message sent for a given payload length and sequence number.
TidMessage make_probe(std::size_t payload_length, std::int64_t sequence);

/// Throws Error{InvalidConfig}, Error{ServerUnreachable} or
/// Error{MessageLost} (detail holds the sequence number).
std::vector<LatencySample> run_latency_test(const BenchConfig& config);

/// Bins [k*w, (k+1)*w) from the bin holding the minimum to the bin holding
/// the maximum, empty bins included.
std::vector<HistogramBin> histogram(std::span<const double> values, double bin_width_micros);
std::vector<HistogramBin> histogram(std::span<const LatencySample> samples, double bin_width_micros);

/// Attenuation of a sinusoid at each frequency when epochs aligned on events
/// with the given timing (in microseconds) are averaged:
///   H(f) = | mean_k exp(-i 2 pi f tau_k) |,  tau_k = t_k - mean(t).
/// Throws Error{EmptySamples}.
TransferCurve jitter_transfer_function(std::span<const double> jitter_micros,
                                       std::span<const double> frequencies_hz);

/// Median averages the two middle values for even counts; p99 is nearest-rank.
LatencySummary summarize(std::span<const double> values);

std::vector<double> latencies(std::span<const LatencySample> samples);
std::vector<double> latencies_for_length(std::span<const LatencySample> samples, std::size_t length);

/// Header row plus one row per record; returns the number of data rows.
/// Throws Error{IoFailure}.
std::size_t export_csv(std::span<const LatencySample> samples, std::ostream& out);
std::size_t export_csv(std::span<const HistogramBin> bins, std::ostream& out);
std::size_t export_csv(const TransferCurve& curve, std::ostream& out);

template <class Records>
std::size_t export_csv_file(const Records& records, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::IoFailure, "cannot open " + path.string());
  return export_csv(records, out);
}

inline constexpr const char* kLatencyCsvHeader = "sequence,payload_length,latency_micros";
inline constexpr const char* kHistogramCsvHeader = "bin_start_micros,count";
inline constexpr const char* kTransferCsvHeader = "frequency_hz,attenuation";

}  // namespace tid::bench
