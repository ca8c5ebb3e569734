#pragma once

#include <chrono>
#include <cstdint>

#include "tid/message.hpp"

namespace tid {

// Authority for the block the acquisition is currently delivering.
// current_block() must be non-decreasing and safe to call concurrently.
class BlockSource {
 public:
  virtual ~BlockSource() = default;
  virtual std::int64_t current_block() const = 0;
};

class FixedBlockSource final : public BlockSource {
 public:
  explicit FixedBlockSource(std::int64_t block) : block_(block) {}
  std::int64_t current_block() const override { return block_; }

 private:
  std::int64_t block_;
};

/// Block counter driven by the monotonic clock: block k covers samples
/// [k * block_size, (k + 1) * block_size) at sampling_rate_hz, counting
/// from 0 at `start`.
class SimAcquisition final : public BlockSource {
 public:
  /// Throws Error{InvalidConfig} unless both rate and block size are positive.
  SimAcquisition(double sampling_rate_hz, std::int64_t block_size_samples,
                 std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now());

  std::int64_t current_block() const override;
  std::int64_t current_block_at(MicroDuration elapsed) const;

  double sampling_rate_hz() const noexcept { return sampling_rate_hz_; }
  std::int64_t block_size_samples() const noexcept { return block_size_samples_; }
  double blocks_per_second() const noexcept {
    return sampling_rate_hz_ / static_cast<double>(block_size_samples_);
  }

 private:
  double sampling_rate_hz_;
  std::int64_t block_size_samples_;
  std::chrono::steady_clock::time_point start_;
};

}  // namespace tid
