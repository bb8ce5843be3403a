#pragma once

#include <cstdint>
#include <random>

namespace rsmalab {

/// Seeded random stream that can be split into independent children.
///
/// Children are derived by hashing the parent seed with caller-chosen keys
/// (for example a time-slot index and a user index), so a draw for slot i,
/// user k does not depend on how many numbers other consumers have taken.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed = 0);

  [[nodiscard]] RandomStream split(std::uint64_t key_a, std::uint64_t key_b = 0) const;

  double normal();
  double normal(double mean, double stddev);
  double uniform();  // [0, 1)
  double uniform(double lo, double hi);
  bool bernoulli(double p);
  std::uint64_t below(std::uint64_t n);  // uniform integer in [0, n)

  [[nodiscard]] std::uint64_t seed() const { return seed_; }
  std::mt19937_64& engine() { return engine_; }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

std::uint64_t mix64(std::uint64_t x);

}  // namespace rsmalab
