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
 * \file valsched/search.h
 * \brief Greedy and beam search guided by a value function, random schedules
 * and exhaustive enumeration.
 *
 * Ties are always broken by candidate enumeration order. Candidate
 * evaluations may run on several threads; the selection is an ordered
 * reduction so results do not depend on the job count.
 */
#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <unordered_map>
#include <vector>

#include "valsched/cost_model.h"
#include "valsched/rng.h"
#include "valsched/schedule.h"

namespace valsched {

/// Estimated best total cost reachable from a state. Must be thread safe.
using ValueFunction = std::function<double(const ScheduleState&)>;

/// Caches `fn` by canonical key. The returned function is thread safe.
ValueFunction memoize(ValueFunction fn);

/// Multiplicative noise: v' = v * (1 + eta), eta ~ U(-epsilon, epsilon).
struct NoiseConfig {
  double epsilon = 0.25;

  void check() const;
};

struct GreedyResult {
  ScheduleState state;
  /// Number of candidate states evaluated, the sum of |C_i| over layers.
  int64_t visited = 0;
  /// Guide value of the final state (noise free).
  double value = 0;
};

/// Schedules the remaining stages of `start` one at a time, keeping the
/// candidate with the lowest (optionally noisy) value. With noise, each layer
/// draws one seed from `rng` and candidate j uses the stream derive(j) of it.
GreedyResult greedy_schedule(const ScheduleState& start, const ValueFunction& value,
                             const NoiseConfig* noise = nullptr, SearchRng* rng = nullptr, int jobs = 1);

struct BeamResult {
  ScheduleState state;
  /// Decisions appended to the prefix, in scheduling order.
  std::vector<LayerSchedule> completion;
  double value = 0;
  int64_t visited = 0;
};

/// Keeps the `width` lowest-valued states per layer (stable by parent beam
/// position, then candidate order). width == 1 is noiseless greedy.
BeamResult beam_search(const ScheduleState& prefix, const ValueFunction& value, int width, int jobs = 1);

/// Uniform choice among the candidates at every layer.
ScheduleState random_schedule(const GraphPtr& graph, SearchRng& rng);

struct ExhaustiveResult {
  ScheduleState optimal;
  Fixed optimal_cost;
  /// Complete schedules benchmarked.
  int64_t states_visited = 0;
  /// Exact optimum over completions for every incomplete legal prefix,
  /// keyed by canonical key.
  std::unordered_map<std::string, Fixed> prefix_values;

  /// V*: prefix_values for incomplete states, the benchmark for complete
  /// ones. Throws Error on a state outside the enumerated space.
  ValueFunction value_function(const MachineModel& machine) const;
  Fixed value_of(const ScheduleState& state, const MachineModel& machine) const;
};

/// Benchmarks every complete schedule. Throws StateSpaceTooLargeError when
/// space_size(graph) exceeds `limit`.
ExhaustiveResult exhaustive(const GraphPtr& graph, const MachineModel& machine, double limit);

}  // namespace valsched
