#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <sstream>
#include <thread>

#include "socket.hpp"
#include "test_support.hpp"
#include "tid/bench.hpp"
#include "tid/error.hpp"

namespace tid::bench {
namespace {

using namespace std::chrono_literals;

Errc error_code(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected tid::Error";
  return Errc::IoFailure;
}

// Averages N unit sinusoids delayed by tau_k and reads the amplitude of the
// result as the peak over one densely sampled period.
double brute_force_attenuation(const std::vector<double>& jitter_us, double f) {
  if (f == 0.0) return 1.0;
  double mean = 0.0;
  for (double t : jitter_us) mean += t;
  mean /= static_cast<double>(jitter_us.size());
  constexpr int kSteps = 20000;
  const double period = 1.0 / f;
  double peak = 0.0;
  for (int s = 0; s < kSteps; ++s) {
    const double t = period * s / kSteps;
    double avg = 0.0;
    for (double j : jitter_us) {
      const double tau = (j - mean) * 1e-6;
      avg += std::sin(2.0 * std::numbers::pi * f * (t - tau));
    }
    peak = std::max(peak, std::abs(avg / static_cast<double>(jitter_us.size())));
  }
  return peak;
}

TEST(Histogram, Examples) {
  const std::vector<double> values{5, 15, 25};
  EXPECT_EQ(histogram(values, 10.0),
            (std::vector<HistogramBin>{{0, 1}, {10, 1}, {20, 1}}));
  EXPECT_TRUE(histogram(std::vector<double>{}, 10.0).empty());
}

TEST(Histogram, IncludesEmptyBinsBetween) {
  const std::vector<double> values{101, 104, 139.9};
  EXPECT_EQ(histogram(values, 10.0),
            (std::vector<HistogramBin>{{100, 2}, {110, 0}, {120, 0}, {130, 1}}));
}

TEST(Histogram, BoundaryGoesToUpperBin) {
  EXPECT_EQ(histogram(std::vector<double>{10.0, 20.0}, 10.0),
            (std::vector<HistogramBin>{{10, 1}, {20, 1}}));
}

TEST(Histogram, Conservation) {
  std::mt19937_64 rng(17);
  for (int round = 0; round < 50; ++round) {
    std::vector<double> values(1000);
    std::lognormal_distribution<double> dist(4.0, 1.0);
    for (auto& v : values) v = dist(rng);
    const double width = std::uniform_real_distribution<double>(0.5, 200.0)(rng);
    std::size_t total = 0;
    for (const auto& bin : histogram(values, width)) total += bin.count;
    ASSERT_EQ(total, 1000u);
  }
}

TEST(Histogram, RejectsNonPositiveWidth) {
  EXPECT_EQ(error_code([] { histogram(std::vector<double>{1.0}, 0.0); }), Errc::InvalidConfig);
}

TEST(Transfer, ZeroFrequencyIsExactlyOne) {
  const std::vector<double> jitter{100.0, 350.5, -20.0, 7.0};
  const std::vector<double> freqs{0.0};
  EXPECT_EQ(jitter_transfer_function(jitter, freqs).attenuation.front(), 1.0);
}

TEST(Transfer, EqualJitterIsExactlyOne) {
  const std::vector<double> jitter(37, 1234.5678);
  std::vector<double> freqs;
  for (int f = 0; f <= 1000; f += 7) freqs.push_back(f);
  for (double h : jitter_transfer_function(jitter, freqs).attenuation) EXPECT_EQ(h, 1.0);
}

TEST(Transfer, TwoPointJitterAt125Hz) {
  const std::vector<double> jitter{1000.0, -1000.0};
  const std::vector<double> freqs{125.0};
  // Two-term phasor sum written out.
  const std::complex<double> a = std::exp(std::complex<double>(0, -2 * std::numbers::pi * 125 * 0.001));
  const std::complex<double> b = std::exp(std::complex<double>(0, 2 * std::numbers::pi * 125 * 0.001));
  const double expected = std::abs((a + b) / 2.0);
  EXPECT_NEAR(expected, std::cos(std::numbers::pi / 4), 1e-12);
  EXPECT_NEAR(jitter_transfer_function(jitter, freqs).attenuation.front(), expected, 1e-12);
  EXPECT_NEAR(jitter_transfer_function(jitter, freqs).attenuation.front(), 0.7071, 1e-4);
}

TEST(Transfer, ConstantDelayDoesNotMatter) {
  const std::vector<double> jitter{10.0, 400.0, 900.0, 55.0};
  std::vector<double> shifted;
  for (double j : jitter) shifted.push_back(j + 123456.0);
  const std::vector<double> freqs{1.0, 50.0, 333.0};
  const auto a = jitter_transfer_function(jitter, freqs);
  const auto b = jitter_transfer_function(shifted, freqs);
  for (std::size_t i = 0; i < freqs.size(); ++i) EXPECT_NEAR(a.attenuation[i], b.attenuation[i], 1e-9);
}

TEST(Transfer, MatchesBruteForceAveraging) {
  std::mt19937_64 rng(2718);
  for (int round = 0; round < 10; ++round) {
    const int n = std::uniform_int_distribution<int>(2, 40)(rng);
    std::normal_distribution<double> jitter_dist(500.0, 400.0);
    std::vector<double> jitter(n);
    for (auto& j : jitter) j = jitter_dist(rng);
    const std::vector<double> freqs{std::uniform_real_distribution<double>(1.0, 150.0)(rng)};
    const double h = jitter_transfer_function(jitter, freqs).attenuation.front();
    const double oracle = brute_force_attenuation(jitter, freqs.front());
    if (oracle < 1e-6) continue;  // relative error meaningless at a null
    EXPECT_LE(std::abs(h - oracle) / oracle, 1e-3) << "f=" << freqs.front() << " n=" << n;
  }
}

TEST(Transfer, AlwaysWithinUnitInterval) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> jitter_dist(-5000.0, 5000.0);
  std::vector<double> freqs;
  for (int f = 0; f <= 2000; f += 13) freqs.push_back(f);
  for (int round = 0; round < 20; ++round) {
    std::vector<double> jitter(50);
    for (auto& j : jitter) j = jitter_dist(rng);
    for (double h : jitter_transfer_function(jitter, freqs).attenuation) {
      ASSERT_GE(h, 0.0);
      ASSERT_LE(h, 1.0);
    }
  }
}

TEST(Transfer, EmptySamplesRejected) {
  EXPECT_EQ(error_code([] { jitter_transfer_function({}, std::vector<double>{1.0}); }), Errc::EmptySamples);
}

TEST(Summary, Statistics) {
  const std::vector<double> odd{5, 1, 3};
  const auto s = summarize(odd);
  EXPECT_EQ(s.count, 3u);
  EXPECT_EQ(s.min, 1);
  EXPECT_EQ(s.median, 3);
  EXPECT_EQ(s.max, 5);
  EXPECT_EQ(s.p99, 5);
  EXPECT_EQ(summarize(std::vector<double>{1, 2, 3, 4}).median, 2.5);
  std::vector<double> hundred;
  for (int i = 1; i <= 100; ++i) hundred.push_back(i);
  EXPECT_EQ(summarize(hundred).p99, 99);
  EXPECT_EQ(error_code([] { summarize({}); }), Errc::EmptySamples);
}

TEST(Csv, LatencyRowsAndHeader) {
  std::vector<LatencySample> samples;
  for (int i = 0; i < 1000; ++i) samples.push_back({i, 32, 10.0 + i * 0.123456789});
  std::stringstream out;
  EXPECT_EQ(export_csv(samples, out), 1000u);
  std::string line;
  std::getline(out, line);
  EXPECT_EQ(line, "sequence,payload_length,latency_micros");
  int rows = 0;
  while (std::getline(out, line)) {
    const auto c1 = line.find(',');
    const auto c2 = line.find(',', c1 + 1);
    EXPECT_EQ(std::stoll(line.substr(0, c1)), samples[rows].sequence);
    EXPECT_EQ(std::stoul(line.substr(c1 + 1, c2 - c1 - 1)), 32u);
    const double v = std::stod(line.substr(c2 + 1));
    EXPECT_NEAR(v, samples[rows].latency_micros, std::abs(samples[rows].latency_micros) * 1e-6);
    ++rows;
  }
  EXPECT_EQ(rows, 1000);
}

TEST(Csv, EmptyInputsWriteHeaderOnly) {
  std::stringstream a, b, c;
  EXPECT_EQ(export_csv(std::vector<LatencySample>{}, a), 0u);
  EXPECT_EQ(a.str(), "sequence,payload_length,latency_micros\n");
  EXPECT_EQ(export_csv(std::vector<HistogramBin>{}, b), 0u);
  EXPECT_EQ(b.str(), "bin_start_micros,count\n");
  EXPECT_EQ(export_csv(TransferCurve{}, c), 0u);
  EXPECT_EQ(c.str(), "frequency_hz,attenuation\n");
}

TEST(Csv, HistogramAndCurveRows) {
  std::stringstream h, t;
  export_csv(std::vector<HistogramBin>{{0, 1}, {12.5, 3}}, h);
  EXPECT_EQ(h.str(), "bin_start_micros,count\n0,1\n12.5,3\n");
  TransferCurve curve{{0.0, 125.0}, {1.0, 0.7071067811865476}};
  export_csv(curve, t);
  EXPECT_EQ(t.str(), "frequency_hz,attenuation\n0,1\n125,0.7071067811865476\n");
}

TEST(Csv, IoFailure) {
  EXPECT_EQ(error_code([] {
              export_csv_file(std::vector<LatencySample>{}, "/nonexistent-dir/latency.csv");
            }),
            Errc::IoFailure);
}

TEST(Probe, DescriptionIsPadded) {
  const auto probe = make_probe(32, 5);
  EXPECT_EQ(probe.description(), std::string(32, 'x'));
  EXPECT_EQ(probe.event(), 5);
  EXPECT_EQ(probe.block(), -1);
  EXPECT_FALSE(probe.relative());
}

class BenchRun : public ::testing::Test {
 protected:
  void SetUp() override { hub.start(); }
  BenchConfig config(Mode mode, std::size_t count, std::vector<std::size_t> lengths) {
    BenchConfig c;
    c.mode = mode;
    c.message_count = count;
    c.payload_lengths = std::move(lengths);
    c.port = hub.port();
    c.warmup_count = 20;
    return c;
  }
  DispatchHub hub{std::make_shared<SimAcquisition>(500.0, 10), testing::quiet_ephemeral_options()};
};

TEST_F(BenchRun, LoopbackCardinalityAndPositivity) {
  const auto samples = run_latency_test(config(Mode::Loopback, 1000, {32}));
  ASSERT_EQ(samples.size(), 1000u);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    EXPECT_EQ(samples[i].sequence, static_cast<std::int64_t>(i));
    EXPECT_GT(samples[i].latency_micros, 0.0);
  }
}

TEST_F(BenchRun, DispatchThreeLengths) {
  const auto samples = run_latency_test(config(Mode::Dispatch, 100, {32, 512, 4096}));
  ASSERT_EQ(samples.size(), 300u);
  for (std::size_t k = 0; k < 3; ++k) {
    const std::size_t length = std::vector<std::size_t>{32, 512, 4096}[k];
    EXPECT_EQ(latencies_for_length(samples, length).size(), 100u);
    for (std::size_t i = 0; i < 100; ++i) EXPECT_EQ(samples[k * 100 + i].payload_length, length);
  }
  for (const auto& s : samples) EXPECT_GT(s.latency_micros, 0.0);
}

TEST_F(BenchRun, InvalidConfigs) {
  EXPECT_EQ(error_code([&] { run_latency_test(config(Mode::Dispatch, 0, {32})); }), Errc::InvalidConfig);
  EXPECT_EQ(error_code([&] { run_latency_test(config(Mode::Dispatch, 1, {0})); }), Errc::InvalidConfig);
  EXPECT_EQ(error_code([&] { run_latency_test(config(Mode::Dispatch, 1, {})); }), Errc::InvalidConfig);
  EXPECT_EQ(error_code([&] { run_latency_test(config(Mode::Dispatch, 1, {65536})); }), Errc::InvalidConfig);
}

TEST(BenchErrors, ServerUnreachable) {
  std::uint16_t port = 0;
  {
    auto listener = net::listen_tcp("127.0.0.1", 0);
    port = listener.port;
  }
  BenchConfig c;
  c.port = port;
  c.message_count = 10;
  EXPECT_EQ(error_code([&] { run_latency_test(c); }), Errc::ServerUnreachable);
}

// A bus that forwards only the synchronisation probes, so every measured
// message is lost.
TEST(BenchErrors, MessageLost) {
  auto listener = net::listen_tcp("127.0.0.1", 0);
  std::atomic<bool> stop{false};
  std::thread bus([&] {
    std::vector<net::Socket> conns;
    while (conns.size() < 2 && !stop) {
      auto s = net::accept_tcp(listener.socket, 50ms);
      if (s.valid()) conns.push_back(std::move(s));
    }
    if (conns.size() < 2) return;
    FrameDecoder decoder;
    std::array<char, 4096> buf{};
    for (;;) {
      const long n = net::recv_some(conns[0], buf);
      if (n <= 0) break;
      for (const auto& frame : decoder.feed(std::string_view(buf.data(), static_cast<std::size_t>(n)))) {
        auto msg = parse_message(frame);
        if (msg.event() != -1) continue;
        msg.set_block(0);
        net::send_all(conns[1], encode_frame(serialize_message(msg)));
      }
    }
  });

  BenchConfig c;
  c.port = listener.port;
  c.message_count = 5;
  c.warmup_count = 0;
  c.receive_timeout = 300ms;
  try {
    run_latency_test(c);
    ADD_FAILURE() << "expected MessageLost";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::MessageLost);
    EXPECT_EQ(e.detail(), "0");
  }
  stop = true;
  bus.join();
}

}  // namespace
}  // namespace tid::bench
