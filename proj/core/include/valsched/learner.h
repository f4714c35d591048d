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
 * \file valsched/learner.h
 * \brief Value iteration: bootstrap targets from random schedules, then
 * refine them with noisy greedy rollouts and beam completions, retraining a
 * fresh value model after every round.
 */
#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "valsched/cost_model.h"
#include "valsched/search.h"
#include "valsched/value_model.h"

namespace valsched {

struct TargetEntry {
  Fixed r_min;
  int64_t count = 0;
  std::string pipeline;

  bool operator==(const TargetEntry&) const = default;
};

/// canonical key -> best cost observed through that state. Entries only
/// ever decrease.
class TargetTable {
 public:
  /// Records one observation. Throws Error when r is not positive.
  void update(const std::string& key, Fixed r);
  const TargetEntry* find(const std::string& key) const;
  size_t size() const { return entries_.size(); }
  const std::map<std::string, TargetEntry>& entries() const { return entries_; }

  /// Sorted `<key>\t<r_min>\t<count>` lines.
  std::string serialize() const;
  static TargetTable parse(std::string_view text);
  void save(const std::filesystem::path& path) const;
  static TargetTable load(const std::filesystem::path& path);

  bool operator==(const TargetTable&) const = default;

 private:
  std::map<std::string, TargetEntry> entries_;
};

struct RoundConfig {
  int schedules_per_pipeline = 100;
  int beam_width = 8;
  NoiseConfig noise;
  TrainConfig train;
  uint64_t seed = 0;
  int hidden = 32;
  double exhaustive_limit = 1e6;
  int jobs = 1;
  MachineModel machine;

  void check() const;
};

struct ReportRow {
  std::string pipeline;
  Fixed greedy_cost;
  Fixed beam_cost;
  std::optional<Fixed> exhaustive_cost;
  int round = 0;

  bool operator==(const ReportRow&) const = default;
};

struct RoundReport {
  std::vector<ReportRow> rows;

  static constexpr const char* kCsvHeader = "pipeline,greedy_cost,beam_cost,exhaustive_cost,round";
  /// Missing exhaustive costs are written as an empty field.
  std::string to_csv() const;
  static RoundReport parse_csv(std::string_view text);

  double mean_greedy() const;
  double mean_beam() const;
  /// Mean of greedy_cost / beam_cost.
  double mean_greedy_beam_ratio() const;
  /// Mean of greedy_cost / exhaustive_cost over rows that have one; NaN if
  /// none do.
  double mean_exhaustive_ratio() const;
};

/// Value function backed by a trained model; memoized.
ValueFunction model_value(const ValueModelParams& params, const MachineModel& machine);

/// `count` random schedules per pipeline; every prefix of each (including the
/// empty and the complete state) is updated with the schedule's cost.
TargetTable bootstrap(const std::vector<GraphPtr>& graphs, int count, const MachineModel& machine, uint64_t seed,
                      int jobs = 1);

/// Features and r_min of every table entry whose pipeline is in `graphs`, in
/// key order.
std::vector<Sample> make_dataset(const std::vector<GraphPtr>& graphs, const TargetTable& table,
                                 const MachineModel& machine);

/// Trains a freshly initialised model on the table.
TrainResult fit_value_model(const std::vector<GraphPtr>& graphs, const TargetTable& table, const RoundConfig& cfg,
                            int round);

/// Exhaustive optima, computed once per pipeline.
class OptimumCache {
 public:
  std::optional<Fixed> get(const GraphPtr& graph, const MachineModel& machine, double limit);

 private:
  std::map<std::string, std::optional<Fixed>> values_;
};

RoundReport evaluate_round(const std::vector<GraphPtr>& graphs, const ValueModelParams& params,
                           const MachineModel& machine, int beam_width, int round, double exhaustive_limit = 1e6,
                           int jobs = 1, OptimumCache* cache = nullptr);

struct RoundResult {
  TargetTable table;
  TrainResult model;
  RoundReport report;
  /// Distinct stitched schedules benchmarked.
  int64_t benchmarks = 0;
};

/// One round: K noisy rollouts per pipeline under V_prev, beam completion of
/// every rollout prefix under noiseless V_prev, min-update of the table,
/// retraining and evaluation. `round` >= 1 selects the rng streams.
RoundResult value_iteration_round(const std::vector<GraphPtr>& graphs, const ValueModelParams& prev,
                                  const TargetTable& table, const RoundConfig& cfg, int round,
                                  OptimumCache* cache = nullptr);

}  // namespace valsched
