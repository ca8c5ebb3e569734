// tid: run a TiD bus server, send events, monitor the bus, or benchmark it.

#include <csignal>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "tid/acqsim.hpp"
#include "tid/bench.hpp"
#include "tid/client.hpp"
#include "tid/error.hpp"
#include "tid/server.hpp"

namespace {

volatile std::sig_atomic_t g_stop = 0;

void on_signal(int) { g_stop = 1; }

void install_signal_handlers() {
  struct sigaction action {};
  action.sa_handler = on_signal;
  sigemptyset(&action.sa_mask);
  sigaction(SIGINT, &action, nullptr);
  sigaction(SIGTERM, &action, nullptr);
}

struct Common {
  std::string host = "127.0.0.1";
  std::uint16_t port = tid::kDefaultPort;
};

struct ServeFlags {
  std::string bind = "0.0.0.0";
  double rate_hz = 500.0;
  std::int64_t block_size = 10;
  std::string save_path;
};

struct SendFlags {
  std::string description = "event";
  std::string family = std::string(tid::kFamilyCustom);
  std::int64_t event = 0;
  std::optional<double> value;
  std::optional<std::string> source;
};

struct BenchFlags {
  std::size_t count = 1000;
  std::vector<std::size_t> lengths{32};
  std::string mode = "dispatch";
  std::string out_dir = ".";
  std::size_t warmup = 100;
  bool self_host = false;
  double bin_width = 10.0;
  double max_frequency = 500.0;
  double frequency_step = 1.0;
};

int serve(const Common& common, const ServeFlags& flags) {
  auto acquisition = std::make_shared<tid::SimAcquisition>(flags.rate_hz, flags.block_size);
  tid::ServerOptions options;
  options.port = common.port;
  options.bind_address = flags.bind;
  tid::DispatchHub hub(acquisition, options);
  hub.start();
  std::cout << "listening on port " << hub.port() << " (" << acquisition->blocks_per_second()
            << " blocks/s)" << std::endl;

  while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(50));
  hub.stop();

  if (!flags.save_path.empty()) {
    const auto n = hub.save_events(std::filesystem::path(flags.save_path));
    std::cout << "saved " << n << " events to " << flags.save_path << std::endl;
  }
  return 0;
}

int send(const Common& common, const SendFlags& flags) {
  auto client = tid::TidClient::connect(common.host, common.port);
  auto msg = client.new_event(flags.description, flags.family, flags.event);
  msg.set_source(flags.source);
  msg.set_value(flags.value);
  client.send(msg);
  std::cout << tid::serialize_message(msg) << std::endl;
  client.close();
  return 0;
}

int monitor(const Common& common) {
  auto client = tid::TidClient::connect(common.host, common.port);
  while (!g_stop) {
    try {
      if (auto msg = client.receive(std::chrono::milliseconds(100))) {
        std::cout << tid::serialize_message(*msg) << std::endl;
      }
    } catch (const tid::Error& e) {
      if (e.code() != tid::Errc::Disconnected) throw;
      std::cerr << "tid monitor: server closed the connection\n";
      return 1;
    }
  }
  return 0;
}

int bench(const Common& common, const BenchFlags& flags) {
  tid::bench::BenchConfig config;
  config.message_count = flags.count;
  config.payload_lengths = flags.lengths;
  config.mode = flags.mode == "loopback" ? tid::bench::Mode::Loopback : tid::bench::Mode::Dispatch;
  config.host = common.host;
  config.port = common.port;
  config.warmup_count = flags.warmup;

  std::unique_ptr<tid::DispatchHub> internal;
  if (config.mode == tid::bench::Mode::Loopback || flags.self_host) {
    tid::ServerOptions options;
    options.port = 0;
    options.bind_address = "127.0.0.1";
    options.log = [](std::string_view) {};
    internal = std::make_unique<tid::DispatchHub>(std::make_shared<tid::SimAcquisition>(500.0, 10), options);
    internal->start();
    config.host = "127.0.0.1";
    config.port = internal->port();
  }

  const auto samples = tid::bench::run_latency_test(config);
  if (internal) internal->stop();

  const std::filesystem::path dir(flags.out_dir);
  std::filesystem::create_directories(dir);
  const auto values = tid::bench::latencies(samples);
  const auto bins = tid::bench::histogram(std::span<const double>(values), flags.bin_width);
  std::vector<double> frequencies;
  for (double f = 0.0; f <= flags.max_frequency + 1e-9; f += flags.frequency_step) frequencies.push_back(f);
  const auto curve = tid::bench::jitter_transfer_function(values, frequencies);

  tid::bench::export_csv_file(samples, dir / "latency.csv");
  tid::bench::export_csv_file(bins, dir / "histogram.csv");
  tid::bench::export_csv_file(curve, dir / "transfer.csv");

  std::printf("%-8s %8s %12s %12s %12s %12s  (microseconds, %s)\n", "length", "count", "min", "median",
              "p99", "max", flags.mode.c_str());
  for (auto length : flags.lengths) {
    const auto per_length = tid::bench::latencies_for_length(samples, length);
    const auto s = tid::bench::summarize(per_length);
    std::printf("%-8zu %8zu %12.3f %12.3f %12.3f %12.3f\n", length, s.count, s.min, s.median, s.p99,
                s.max);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"TiD event bus: server, client tools and latency benchmark"};
  app.require_subcommand(1);

  Common common;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--host", common.host, "Server host")->capture_default_str();
    sub->add_option("--port", common.port, "Server TCP port (env TID_PORT)")
        ->envname("TID_PORT")
        ->capture_default_str();
  };

  ServeFlags serve_flags;
  auto* serve_cmd = app.add_subcommand("serve", "Run the dispatch server with a simulated acquisition clock");
  add_common(serve_cmd);
  serve_cmd->add_option("--bind", serve_flags.bind, "Listen address")->capture_default_str();
  serve_cmd->add_option("--rate-hz", serve_flags.rate_hz, "Simulated sampling rate")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  serve_cmd->add_option("--block-size", serve_flags.block_size, "Samples per block")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  serve_cmd->add_option("--save-path", serve_flags.save_path, "Write stored events here on shutdown");

  SendFlags send_flags;
  auto* send_cmd = app.add_subcommand("send", "Send one event; the server fills block and relative time");
  add_common(send_cmd);
  send_cmd->add_option("--description", send_flags.description, "Event description")->capture_default_str();
  send_cmd->add_option("--family", send_flags.family, "Event family")->capture_default_str();
  send_cmd->add_option("--event", send_flags.event, "Integer event code")->capture_default_str();
  send_cmd->add_option("--value", send_flags.value, "Optional numeric value");
  send_cmd->add_option("--source", send_flags.source, "Optional event source");

  auto* monitor_cmd = app.add_subcommand("monitor", "Print every dispatched event, one per line");
  add_common(monitor_cmd);

  BenchFlags bench_flags;
  auto* bench_cmd = app.add_subcommand("bench", "Measure send or dispatch latency and write CSV files");
  add_common(bench_cmd);
  bench_cmd->add_option("--count", bench_flags.count, "Measured messages per payload length")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  bench_cmd->add_option("--lengths", bench_flags.lengths, "Description lengths, comma separated")
      ->delimiter(',')
      ->capture_default_str();
  bench_cmd->add_option("--mode", bench_flags.mode, "dispatch or loopback")
      ->check(CLI::IsMember({"dispatch", "loopback"}))
      ->capture_default_str();
  bench_cmd->add_option("--out-dir", bench_flags.out_dir, "Directory for the CSV files")->capture_default_str();
  bench_cmd->add_option("--warmup", bench_flags.warmup, "Unmeasured messages per length")->capture_default_str();
  bench_cmd->add_flag("--self-host", bench_flags.self_host, "Run an internal server for dispatch mode");
  bench_cmd->add_option("--bin-width", bench_flags.bin_width, "Histogram bin width in microseconds")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  bench_cmd->add_option("--max-frequency", bench_flags.max_frequency, "Upper transfer-function frequency (Hz)")
      ->capture_default_str();
  bench_cmd->add_option("--frequency-step", bench_flags.frequency_step, "Transfer-function frequency step (Hz)")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  install_signal_handlers();
  try {
    if (serve_cmd->parsed()) return serve(common, serve_flags);
    if (send_cmd->parsed()) return send(common, send_flags);
    if (monitor_cmd->parsed()) return monitor(common);
    if (bench_cmd->parsed()) return bench(common, bench_flags);
  } catch (const tid::Error& e) {
    std::cerr << "tid: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "tid: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
