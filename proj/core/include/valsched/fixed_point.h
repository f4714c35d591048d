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

#include <compare>
#include <cstdint>
#include <string>
#include <string_view>

namespace valsched {

/// Non-negative decimal quantity with exactly three fractional digits,
/// stored as an integer count of thousandths. All cost arithmetic goes
/// through this type so sums are exact and platform independent.
class Fixed {
 public:
  static constexpr int64_t kScale = 1000;

  constexpr Fixed() = default;
  static constexpr Fixed from_milli(int64_t milli) { return Fixed(milli); }
  static constexpr Fixed from_int(int64_t units) { return Fixed(units * kScale); }
  /// Parses "12", "12.5", "0.125". More than three fractional digits is an error.
  static Fixed parse(std::string_view text);

  /// numerator / denominator in milli units, rounded half up. Both non-negative.
  static Fixed ratio_half_up(__int128 numerator_milli, __int128 denominator);

  constexpr int64_t milli() const { return milli_; }
  double to_double() const { return static_cast<double>(milli_) / kScale; }
  std::string to_string() const;

  constexpr Fixed operator+(Fixed o) const { return Fixed(milli_ + o.milli_); }
  constexpr Fixed& operator+=(Fixed o) {
    milli_ += o.milli_;
    return *this;
  }
  constexpr auto operator<=>(const Fixed&) const = default;

 private:
  explicit constexpr Fixed(int64_t milli) : milli_(milli) {}
  int64_t milli_ = 0;
};

}  // namespace valsched
