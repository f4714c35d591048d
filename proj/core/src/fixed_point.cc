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

#include "valsched/fixed_point.h"

#include <charconv>
#include <cstdio>
#include <limits>

#include "valsched/error.h"

namespace valsched {

Fixed Fixed::parse(std::string_view text) {
  auto bad = [&]() { return ParseError("bad decimal '" + std::string(text) + "'"); };
  if (text.empty()) throw bad();
  std::string_view whole = text;
  std::string_view frac;
  if (auto dot = text.find('.'); dot != std::string_view::npos) {
    whole = text.substr(0, dot);
    frac = text.substr(dot + 1);
    if (frac.empty() || frac.size() > 3) throw bad();
  }
  int64_t w = 0;
  auto [p, ec] = std::from_chars(whole.data(), whole.data() + whole.size(), w);
  if (whole.empty() || ec != std::errc() || p != whole.data() + whole.size() || w < 0) throw bad();
  int64_t f = 0;
  if (!frac.empty()) {
    auto [q, ec2] = std::from_chars(frac.data(), frac.data() + frac.size(), f);
    if (ec2 != std::errc() || q != frac.data() + frac.size() || f < 0) throw bad();
    for (size_t i = frac.size(); i < 3; ++i) f *= 10;
  }
  if (w > std::numeric_limits<int64_t>::max() / kScale - 1) throw bad();
  return Fixed(w * kScale + f);
}

Fixed Fixed::ratio_half_up(__int128 numerator_milli, __int128 denominator) {
  if (denominator <= 0 || numerator_milli < 0) throw Error("ratio_half_up: bad operands");
  __int128 q = (2 * numerator_milli + denominator) / (2 * denominator);
  if (q > static_cast<__int128>(std::numeric_limits<int64_t>::max())) throw Error("cost overflow");
  return Fixed(static_cast<int64_t>(q));
}

std::string Fixed::to_string() const {
  char buf[32];
  int64_t m = milli_;
  const char* sign = m < 0 ? "-" : "";
  if (m < 0) m = -m;
  std::snprintf(buf, sizeof(buf), "%s%lld.%03lld", sign, static_cast<long long>(m / kScale),
                static_cast<long long>(m % kScale));
  return buf;
}

std::string StateSpaceTooLargeError::format_count(double v) {
  char buf[64];
  if (v < 9007199254740992.0) {
    std::snprintf(buf, sizeof(buf), "%.0f", v);
  } else {
    std::snprintf(buf, sizeof(buf), "%.6g", v);
  }
  return buf;
}

}  // namespace valsched
