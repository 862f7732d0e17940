#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace tripod {

/// PCG-XSH-RR 32-bit output generator (O'Neill). Distinct increments give
/// independent streams from the same seed.
class Pcg32 {
 public:
  using result_type = std::uint32_t;

  Pcg32() : Pcg32(0x853c49e6748fea9bULL, 0xda3e39cb94b95bdbULL) {}
  Pcg32(std::uint64_t seed, std::uint64_t stream);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()();

  std::uint64_t state() const { return state_; }
  std::uint64_t increment() const { return inc_; }
  void restore(std::uint64_t state, std::uint64_t increment) {
    state_ = state;
    inc_ = increment;
  }

  friend bool operator==(const Pcg32&, const Pcg32&) = default;

 private:
  std::uint64_t state_ = 0;
  std::uint64_t inc_ = 0;
};

/// Substreams used by the training and evaluation code.
enum class Stream : std::uint32_t { init = 0, data = 1, perturb = 2, eval = 3 };
inline constexpr std::size_t kStreamCount = 4;

/// Seeded collection of independent generators, one per Stream.
class RngState {
 public:
  explicit RngState(std::uint64_t seed = 0);

  std::uint64_t seed() const { return seed_; }
  Pcg32& stream(Stream s) { return streams_[static_cast<std::size_t>(s)]; }
  const std::array<Pcg32, kStreamCount>& streams() const { return streams_; }
  std::array<Pcg32, kStreamCount>& streams() { return streams_; }

  double uniform(Stream s);                             // [0, 1)
  double normal(Stream s);                              // N(0, 1)
  double rademacher(Stream s);                          // +-1
  std::size_t index(Stream s, std::size_t n);           // uniform over [0, n)

  friend bool operator==(const RngState&, const RngState&) = default;

 private:
  std::uint64_t seed_;
  std::array<Pcg32, kStreamCount> streams_;
};

}  // namespace tripod
