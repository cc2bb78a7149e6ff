#pragma once

#include <cstdint>
#include <random>

namespace adamlab {

/// SplitMix64 finaliser; used to derive statistically independent seeds.
std::uint64_t splitmix64(std::uint64_t x) noexcept;

/// A reproducible random stream identified by (root_seed, index).
///
/// Replicas draw from `Stream(root, replica)`, so results never depend on
/// which thread ran which replica. Re-constructing a stream with the same
/// pair restarts it.
class Stream {
 public:
  Stream(std::uint64_t root_seed, std::uint64_t index);

  double gaussian() { return normal_(engine_); }

  /// Uniform integer on the closed range [lo, hi].
  std::uint64_t uniform_index(std::uint64_t lo, std::uint64_t hi);

  /// Uniform real on [lo, hi).
  double uniform(double lo, double hi);

  std::mt19937_64& engine() noexcept { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace adamlab
