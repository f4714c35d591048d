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


// Brute-force oracles used only by the tests. Nothing here calls the bounds
// or candidate code under test.
#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "valsched/schedule.h"

namespace valsched::testing {

using Point = std::vector<int64_t>;
using PointSet = std::set<Point>;

struct RefInvocation {
  PointSet points;  // pure-dim points computed by this invocation
};

struct RefStage {
  std::vector<RefInvocation> invocations;
  /// Points inside one store_at allocation (first allocation).
  PointSet first_allocation;
  int64_t computed_points = 0;  // including duplicates
  int64_t distinct_points = 0;
};

/// Executes the schedule point by point: every stage walks its own loop nest
/// over each of its invocations, and every host point pulls the producer
/// points named by the access maps.
std::vector<RefStage> reference_execute(const ScheduleState& state);

/// Bounding box of a point set as [lo, hi) per dim; empty input gives {}.
std::vector<std::pair<int64_t, int64_t>> bounding_box(const PointSet& points);

/// All candidate decisions for a single-stage pipeline, generated from the
/// raw option grid and filtered by legality rules written out longhand.
std::vector<std::string> reference_single_stage_candidates(const PipelineGraph& graph);

}  // namespace valsched::testing
