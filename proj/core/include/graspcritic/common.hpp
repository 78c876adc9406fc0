/*
 * Copyright (c) 2026, the graspcritic authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>

namespace graspcritic {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;

// ---------------------------------------------------------------------------
// Errors. Each maps to one failure class named in the module contracts; the
// CLI translates them to exit codes.
// ---------------------------------------------------------------------------

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InvalidShapeError : Error {
  using Error::Error;
};
struct InvalidContactError : Error {
  using Error::Error;
};
struct InvalidGraspError : Error {
  using Error::Error;
};
struct EmptyCandidateSetError : Error {
  using Error::Error;
};
struct CheckpointFormatError : Error {
  using Error::Error;
};
struct ContractViolationError : Error {
  using Error::Error;
};
struct UndefinedStatisticError : Error {
  using Error::Error;
};
struct ConfigError : Error {
  using Error::Error;
};

// ---------------------------------------------------------------------------
// Angle and arclength wrapping.
// ---------------------------------------------------------------------------

/// Wraps an angle into [-pi, pi).
inline double wrap_angle(double a) {
  double w = a - kTwoPi * std::floor((a + kPi) / kTwoPi);
  if (w >= kPi) w -= kTwoPi;  // guards the floor rounding edge
  return w;
}

/// Absolute angular distance in [0, pi].
inline double angle_dist(double a, double b) { return std::fabs(wrap_angle(a - b)); }

/// Wraps an arclength into [0, period).
inline double wrap_pos(double s, double period) {
  double w = s - period * std::floor(s / period);
  if (w >= period) w -= period;
  if (w < 0.0) w += period;
  return w;
}

/// Signed shortest offset from b to a on a circle of the given period,
/// in [-period/2, period/2).
inline double wrap_signed(double d, double period) {
  double w = d - period * std::floor(d / period + 0.5);
  if (w >= 0.5 * period) w -= period;
  return w;
}

/// Circular distance between two arclengths, in [0, period/2].
inline double circ_dist(double a, double b, double period) {
  return std::fabs(wrap_signed(a - b, period));
}

// ---------------------------------------------------------------------------
// Deterministic random streams. std::mt19937_64 output is pinned by the
// standard; the distributions here are hand-rolled because the std
// distributions are implementation-defined and would break byte-level
// reproducibility across toolchains.
// ---------------------------------------------------------------------------

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  std::uint64_t next_u64() { return eng_(); }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n).
  int uniform_int(int n) { return static_cast<int>(uniform() * n); }

  /// Standard normal via the polar method. The spare value is discarded so
  /// the stream state is exactly the engine state.
  double normal() {
    for (;;) {
      double u = 2.0 * uniform() - 1.0;
      double v = 2.0 * uniform() - 1.0;
      double r2 = u * u + v * v;
      if (r2 > 0.0 && r2 < 1.0) return u * std::sqrt(-2.0 * std::log(r2) / r2);
    }
  }

 private:
  std::mt19937_64 eng_;
};

/// splitmix64 mix step; used to derive independent seeds from a base seed.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0,
                                 std::uint64_t c = 0) {
  std::uint64_t s = mix64(base ^ 0x6a09e667f3bcc909ULL);
  s = mix64(s ^ a);
  s = mix64(s ^ b);
  s = mix64(s ^ c);
  return s;
}

/// FNV-1a 64-bit, used for config hashes embedded in artifacts.
inline std::uint64_t fnv1a64(const std::string& data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : data) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v);

/// Runs fn(i) for i in [0, n) across `workers` threads in contiguous chunks.
/// Results are independent of the worker count as long as the iterations are
/// independent; workers <= 1 runs inline.
void parallel_for(int n, int workers, const std::function<void(int)>& fn);

}  // namespace graspcritic
