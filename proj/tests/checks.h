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


// Checks shared by the unit tests and the acceptance binary.
#pragma once

#include <cstdint>
#include <string>

#include "valsched/schedule.h"

namespace valsched::testing {

/// Asserts that inferred bounds equal the point-by-point execution of `s`:
/// same invocation count, and every invocation computes exactly the region
/// (its bounding box equals the region and it has region-size points).
void expect_bounds_match(const ScheduleState& s);

struct GradientCheck {
  int coordinates = 0;
  int groups = 0;
  double worst_relative_error = 0;
  std::string worst_coordinate;
};

/// Central differences (h = 1e-4) on a small model and a bootstrap batch
/// from the training set, sampling coordinates from every parameter group.
GradientCheck check_gradients(uint64_t seed);

}  // namespace valsched::testing
