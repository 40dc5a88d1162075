#pragma once

#include <cstdint>
#include <random>

namespace ibplab {

/// Label separating independent random streams that belong to the same path.
enum class StreamPurpose : std::uint64_t {
  Increments = 1,
  BasePoint = 2,
  Auxiliary = 3,
};

/// Counter-based stream derivation: every (path, purpose) pair gets its own
/// generator, seeded by hashing the pair with the master seed. Results never
/// depend on which worker draws a path.
class RngPolicy {
 public:
  explicit RngPolicy(std::uint64_t master_seed) noexcept : master_(master_seed) {}

  std::uint64_t master_seed() const noexcept { return master_; }
  std::uint64_t stream_seed(std::uint64_t path, StreamPurpose purpose) const noexcept;
  std::mt19937_64 stream(std::uint64_t path, StreamPurpose purpose) const {
    return std::mt19937_64(stream_seed(path, purpose));
  }

 private:
  std::uint64_t master_;
};

}  // namespace ibplab
