#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "bonet/types.hpp"

namespace bonet {

// SplitMix64 step; the standard seed expander.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Deterministic substream seed so independent streams (data, particles, swap
// decisions, ...) can be derived from one master seed. Serial and parallel
// execution see the same streams.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream_id) {
  std::uint64_t s = master ^ (0x517cc1b727220a95ULL * (stream_id + 1));
  std::uint64_t a = splitmix64(s);
  std::uint64_t b = splitmix64(s);
  return a ^ (b << 1);
}

// Uniform doubles in [0,1) and bounded integers from a dedicated engine.
class UniformStream {
 public:
  explicit UniformStream(std::uint64_t seed) : engine_(seed) {}

  double next() {
    // 53-bit mantissa construction; exact and portable.
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  std::uint64_t next_below(std::uint64_t n) { return engine_() % n; }

 private:
  std::mt19937_64 engine_;
};

// Standard normal draws via Box-Muller with a cached spare, so the engine
// consumption per draw is fixed and the number of draws is observable.
class NormalStream {
 public:
  explicit NormalStream(std::uint64_t seed) : engine_(seed) {}

  double next() {
    ++draws_;
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = 1.0 - static_cast<double>(engine_() >> 11) * 0x1.0p-53;  // (0,1]
    const double u2 = static_cast<double>(engine_() >> 11) * 0x1.0p-53;        // [0,1)
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

  void fill(Eigen::Ref<Vector> out) {
    for (Index i = 0; i < out.size(); ++i) out[i] = next();
  }

  // Total number of normal variates handed out so far.
  std::uint64_t draws() const { return draws_; }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
  std::uint64_t draws_ = 0;
};

}  // namespace bonet
