#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <utility>

namespace crgan {

/// Seeded 64-bit Mersenne Twister with platform-independent uniform and normal
/// transforms. The engine is fully specified by the C++ standard, and the
/// transforms below avoid std::*_distribution, whose output is implementation
/// defined, so a given seed yields the same stream everywhere.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0);

  /// Independent generator for a named purpose ("data", "latent", "init_d", ...).
  static Rng stream(std::uint64_t seed, std::string_view label);

  std::uint64_t next_u64() { return engine_(); }
  /// Uniform on [0, 1) with 53 bits of resolution.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Box-Muller pair of independent standard normals.
  std::pair<double, double> normal_pair();
  double normal() { return normal_pair().first; }

  /// Textual engine state; set_state(state()) restores the stream exactly.
  [[nodiscard]] std::string state() const;
  void set_state(const std::string& s);

  bool operator==(const Rng&) const = default;

 private:
  std::mt19937_64 engine_;
};

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace crgan
