// Copyright (c) 2026 valsched Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <random>

namespace valsched {

/// Seeded generator with a platform-independent stream.
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the
/// standard. Its seed is SplitMix64(seed). Floating point values use the top
/// 53 bits of one draw; no std distribution is involved. derive(id) gives an
/// independent generator keyed by (seed, id) without advancing this one, so
/// work split across threads draws the same numbers as a serial run.
class SearchRng {
 public:
  explicit SearchRng(uint64_t seed = 0) : seed_(seed), engine_(mix(seed)) {}

  uint64_t seed() const { return seed_; }
  uint64_t next() { return engine_(); }
  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer in [0, n) by rejection; n > 0.
  uint64_t below(uint64_t n);
  SearchRng derive(uint64_t stream) const { return SearchRng(mix(seed_ ^ mix(stream + 0x9E3779B97F4A7C15ULL))); }

  /// SplitMix64 finaliser.
  static uint64_t mix(uint64_t x);

 private:
  uint64_t seed_;
  std::mt19937_64 engine_;
};

}  // namespace valsched
