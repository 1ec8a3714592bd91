// include/selfecho/rng.h

// Copyright 2026  selfecho authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef SELFECHO_RNG_H_
#define SELFECHO_RNG_H_

#include <cstdint>
#include <random>
#include <string>

namespace selfecho {

// Seeded random stream. Uniform and normal draws are derived from the raw
// 64-bit engine output by fixed formulas, so streams do not depend on the
// standard library's distribution implementations.
class Rng {
 public:
  explicit Rng(uint64_t seed = 0);

  uint64_t NextU64() { return engine_(); }
  // Uniform in [0, 1) with 53 bits of resolution.
  double Uniform();
  double Uniform(double lo, double hi) { return lo + (hi - lo) * Uniform(); }
  // Standard normal (Box-Muller, second value cached).
  double Normal();
  double Normal(double mean, double stddev) { return mean + stddev * Normal(); }
  // Uniform integer in [0, n).
  uint64_t Below(uint64_t n);

  std::string SaveState() const;
  void LoadState(const std::string &state);

 private:
  std::mt19937_64 engine_;
  bool has_cached_normal_ = false;
  double cached_normal_ = 0.0;
};

// Stable 64-bit mix of a seed with a stream tag (splitmix64 finalizer).
uint64_t MixSeed(uint64_t seed, uint64_t tag);
uint64_t HashString(const std::string &s);

}  // namespace selfecho

#endif  // SELFECHO_RNG_H_
