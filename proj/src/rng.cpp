#include "tripod/rng.hpp"

#include <random>

namespace tripod {

Pcg32::Pcg32(std::uint64_t seed, std::uint64_t stream) {
  inc_ = (stream << 1u) | 1u;
  state_ = 0;
  (*this)();
  state_ += seed;
  (*this)();
}

Pcg32::result_type Pcg32::operator()() {
  const std::uint64_t old = state_;
  state_ = old * 6364136223846793005ULL + inc_;
  const auto xorshifted = static_cast<std::uint32_t>(((old >> 18u) ^ old) >> 27u);
  const auto rot = static_cast<std::uint32_t>(old >> 59u);
  return (xorshifted >> rot) | (xorshifted << ((-rot) & 31u));
}

RngState::RngState(std::uint64_t seed) : seed_(seed) {
  for (std::size_t i = 0; i < kStreamCount; ++i) {
    streams_[i] = Pcg32(seed, 0x9e3779b97f4a7c15ULL * (i + 1));
  }
}

double RngState::uniform(Stream s) {
  return std::uniform_real_distribution<double>(0.0, 1.0)(stream(s));
}

double RngState::normal(Stream s) {
  // A fresh distribution per draw keeps the full state inside the generator.
  return std::normal_distribution<double>(0.0, 1.0)(stream(s));
}

double RngState::rademacher(Stream s) { return (stream(s)() & 1u) ? 1.0 : -1.0; }

std::size_t RngState::index(Stream s, std::size_t n) {
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(stream(s));
}

}  // namespace tripod
