#include "tid/acqsim.hpp"

#include <cmath>

#include "tid/error.hpp"

namespace tid {

SimAcquisition::SimAcquisition(double sampling_rate_hz, std::int64_t block_size_samples,
                               std::chrono::steady_clock::time_point start)
    : sampling_rate_hz_(sampling_rate_hz), block_size_samples_(block_size_samples), start_(start) {
  if (!(sampling_rate_hz > 0.0) || !std::isfinite(sampling_rate_hz)) {
    throw Error(Errc::InvalidConfig, "sampling rate must be positive");
  }
  if (block_size_samples <= 0) throw Error(Errc::InvalidConfig, "block size must be positive");
}

std::int64_t SimAcquisition::current_block() const {
  const auto elapsed = std::chrono::steady_clock::now() - start_;
  return current_block_at(to_micro_duration(elapsed));
}

std::int64_t SimAcquisition::current_block_at(MicroDuration elapsed) const {
  const auto micros = elapsed.total_micros();
  if (micros <= 0) return 0;
  // One rounding step only: the product is exact for rates with a short
  // binary fraction, and the quotient lies at least 1/(block_size * 1e6)
  // away from the next integer unless it is one.
  const long double samples_e6 = static_cast<long double>(micros) * sampling_rate_hz_;
  const long double denominator = static_cast<long double>(block_size_samples_) * 1e6L;
  return static_cast<std::int64_t>(std::floor(samples_e6 / denominator));
}

}  // namespace tid
