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

/*!
 * \file valsched/cost_model.h
 * \brief Deterministic analytical cost of a complete schedule.
 *
 * This stands in for compiling and timing a schedule on hardware. Costs are
 * abstract machine units derived from bounds inference (how often and over
 * which region every stage is computed), vector and parallel speedups, task
 * launch overhead and a single-level cache: a buffer whose allocation fits in
 * `cache_size` bytes is read and written at `cache_byte_cost`, anything else
 * at `mem_byte_cost`.
 */
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "valsched/fixed_point.h"
#include "valsched/schedule.h"

namespace valsched {

struct MachineModel {
  Fixed flop_cost = Fixed::from_int(1);
  Fixed mem_byte_cost = Fixed::from_int(8);
  Fixed cache_byte_cost = Fixed::from_int(1);
  int64_t cache_size = 32768;
  int64_t cores = 4;
  Fixed task_overhead = Fixed::from_int(1000);
  std::vector<int> vec_widths = {1, 4, 8, 16};

  /// Throws Error when a parameter is out of range.
  void check() const;
  /// Sets one parameter by its key-file name (flop_cost, mem_byte_cost,
  /// cache_byte_cost, cache_size, cores, task_overhead, vec_widths).
  void set(std::string_view key, std::string_view value);
  /// key=value lines, in a fixed order.
  std::string to_string() const;

  bool operator==(const MachineModel&) const = default;
};

/// Reads key=value lines ('#' comments) over the defaults. Throws ParseError.
MachineModel parse_machine(std::string_view text);
MachineModel load_machine(const std::filesystem::path& path);

struct StageBounds {
  bool scheduled = false;
  /// How many times the stage's compute site executes.
  int64_t invocations = 0;
  /// Pure-dim region computed by one invocation (the first one; every
  /// invocation has the same size).
  Region region;
  int64_t points_per_invocation = 0;
  /// invocations * points_per_invocation / iteration-domain points.
  double recompute_factor = 0;
  /// Trip count of each loop of the stage's own nest within `region`.
  std::vector<int64_t> trip_counts;
  /// Bytes of the buffer allocated at the store_at site.
  int64_t alloc_bytes = 0;
};

/// Indexed by stage.
struct BoundsTable {
  std::vector<StageBounds> stages;

  const StageBounds& operator[](int stage) const { return stages[stage]; }
};

/// Throws IncompleteScheduleError unless the state is complete.
BoundsTable infer_bounds(const ScheduleState& state);
/// Bounds of the scheduled stages only (consumers are always scheduled
/// before their producers, so these never depend on unscheduled stages).
BoundsTable infer_partial_bounds(const ScheduleState& state);

/// Region of the host's iteration space (pure then reduction dims) covered
/// while the host's loops 0..level hold their first values.
Region host_subregion(const Stage& host, const LayerSchedule& host_decision,
                      const StageBounds& host_bounds, int level);

struct StageCost {
  int stage = -1;
  Fixed compute;
  Fixed memory;
  Fixed overhead;

  Fixed total() const { return compute + memory + overhead; }
  bool operator==(const StageCost&) const = default;
};

struct Cost {
  Fixed total;
  std::vector<StageCost> per_stage;  // topological order

  bool operator==(const Cost&) const = default;
};

/// Throws IncompleteScheduleError or IllegalActionError.
Cost benchmark(const ScheduleState& state, const MachineModel& machine);

/// Re-checks every decision of `state` in order. Throws IllegalActionError.
void check_schedule(const ScheduleState& state);

/// Per-stage table, one row per stage in topological order, plus a total.
std::string format_breakdown(const PipelineGraph& graph, const Cost& cost);
std::string breakdown_csv(const PipelineGraph& graph, const Cost& cost);

}  // namespace valsched
