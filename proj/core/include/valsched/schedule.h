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
 * \file valsched/schedule.h
 * \brief Partial schedules (states), per-stage scheduling actions and the
 * candidate grid.
 *
 * Stages are scheduled one at a time, consumers before producers (reverse
 * topological order), so that a producer's compute_at / store_at choices can
 * refer to its consumer's already fixed loop nest. One action is the whole
 * bundle of primitives for one stage: split, reorder, vectorize, parallel,
 * compute_at and store_at.
 */
#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "valsched/pipeline.h"

namespace valsched {

/// Analysed, validated, immutable pipeline shared by every state over it.
class PipelineGraph {
 public:
  struct Edge {
    const InputEdge* edge = nullptr;
    int producer_stage = -1;  // -1 when the producer is an external buffer
    int64_t producer_element_size = 0;
  };

  /// Throws ValidationError (with the full report) if `pipeline` is invalid.
  static std::shared_ptr<const PipelineGraph> make(Pipeline pipeline);

  const Pipeline& pipeline() const { return pipeline_; }
  const std::string& name() const { return pipeline_.name; }
  int num_stages() const { return static_cast<int>(pipeline_.stages.size()); }
  const Stage& stage(int i) const { return pipeline_.stages[i]; }
  int stage_index(std::string_view name) const;  // throws on unknown

  const std::vector<int>& topological_order() const { return topo_; }
  /// Order in which stages receive decisions: reverse topological order.
  const std::vector<int>& schedule_order() const { return schedule_order_; }
  int schedule_position(int stage) const { return schedule_position_[stage]; }

  /// Distinct consumer stages, in declaration order.
  const std::vector<int>& consumers(int stage) const { return consumers_[stage]; }
  /// The only stage allowed to host compute_at/store_at for `stage`: its
  /// unique consumer. -1 for the output and for multi-consumer stages.
  int anchor_host(int stage) const { return anchor_host_[stage]; }
  const std::vector<Edge>& inputs(int stage) const { return inputs_[stage]; }
  /// Edges along which anchor_host(stage) reads `stage`.
  const std::vector<const InputEdge*>& host_edges(int stage) const { return host_edges_[stage]; }

 private:
  explicit PipelineGraph(Pipeline pipeline);

  Pipeline pipeline_;
  std::vector<int> topo_;
  std::vector<int> schedule_order_;
  std::vector<int> schedule_position_;
  std::vector<std::vector<int>> consumers_;
  std::vector<int> anchor_host_;
  std::vector<std::vector<Edge>> inputs_;
  std::vector<std::vector<const InputEdge*>> host_edges_;
};

using GraphPtr = std::shared_ptr<const PipelineGraph>;

enum class LoopPart : uint8_t { kWhole, kOuter, kInner };

/// One loop of a stage's nest: an iteration dim, or one half of a split dim.
struct LoopRef {
  int dim = 0;  // iteration dim index (pure dims first, then reduction dims)
  LoopPart part = LoopPart::kWhole;

  auto operator<=>(const LoopRef&) const = default;
};

struct Split {
  int dim = 0;
  int64_t factor = 1;

  auto operator<=>(const Split&) const = default;
};

/// A compute or storage site: Root, or loop `level` (0 = outermost) of the
/// `consumer` stage's nest.
struct Anchor {
  int consumer = -1;
  int level = -1;

  static Anchor root() { return {}; }
  static Anchor at(int consumer, int level) { return {consumer, level}; }
  bool is_root() const { return consumer < 0; }
  auto operator<=>(const Anchor&) const = default;
};

/// The action of the scheduling MDP: every decision for one stage.
struct LayerSchedule {
  int stage = -1;
  std::vector<Split> splits;  // sorted by dim, at most one per dim
  std::vector<LoopRef> order;  // outermost first
  int vectorize_width = 1;     // applies to the innermost loop
  bool parallel = false;       // applies to the outermost loop
  Anchor compute_at;
  Anchor store_at;

  /// Split factor of `dim`, or 0 when the dim is not split.
  int64_t split_factor(int dim) const;
  auto operator<=>(const LayerSchedule&) const = default;
};

/// Loops of a stage after applying `splits`, in default order: pure loops
/// outermost first (split dims become outer, inner), then reduction loops.
std::vector<LoopRef> default_loop_order(const Stage& stage, const std::vector<Split>& splits);
int64_t nominal_extent(const Stage& stage, const LayerSchedule& decision, LoopRef loop);
std::string loop_name(const Stage& stage, LoopRef loop);

/// A partial schedule: decisions for the first scheduled_count() stages of
/// the schedule order. Immutable value.
class ScheduleState {
 public:
  ScheduleState() = default;
  explicit ScheduleState(GraphPtr graph) : graph_(std::move(graph)) {}

  const PipelineGraph& graph() const { return *graph_; }
  const GraphPtr& graph_ptr() const { return graph_; }
  const std::vector<LayerSchedule>& decisions() const { return decisions_; }
  int scheduled_count() const { return static_cast<int>(decisions_.size()); }
  bool is_complete() const { return scheduled_count() == graph_->num_stages(); }
  /// Stage that the next action schedules; -1 when complete.
  int next_stage() const;
  /// Decision for `stage`, or nullptr when it is not scheduled yet.
  const LayerSchedule* decision_for(int stage) const;
  /// The state truncated to its first `count` decisions.
  ScheduleState prefix(int count) const;

  bool operator==(const ScheduleState& o) const {
    return graph_ == o.graph_ && decisions_ == o.decisions_;
  }

 private:
  friend ScheduleState apply(const ScheduleState&, const LayerSchedule&);
  friend ScheduleState apply_unchecked(const ScheduleState&, const LayerSchedule&);
  GraphPtr graph_;
  std::vector<LayerSchedule> decisions_;
};

ScheduleState initial_state(GraphPtr graph);
/// Validates and analyses `pipeline`; throws ValidationError.
ScheduleState initial_state(const Pipeline& pipeline);

/// Legal actions for the next stage over the fixed option grid, in a stable
/// enumeration order. Never empty: the default action comes first.
/// Throws Error when the state is complete.
std::vector<LayerSchedule> candidate_actions(const ScheduleState& state);

/// The same grid for `stage` given only its anchor host's decision (or
/// nullptr when the stage has no host). candidate_actions is this with the
/// host decision taken from the state.
std::vector<LayerSchedule> enumerate_candidates(const PipelineGraph& graph, int stage,
                                                const LayerSchedule* host_decision);

/// The always-legal action: no split, default order, no vectorize/parallel,
/// computed and stored at Root.
LayerSchedule default_action(const PipelineGraph& graph, int stage);

/// Throws IllegalActionError naming the violated rule.
void check_action(const ScheduleState& state, const LayerSchedule& action);
ScheduleState apply(const ScheduleState& state, const LayerSchedule& action);
/// apply without legality checks, for actions produced by enumerate_candidates.
ScheduleState apply_unchecked(const ScheduleState& state, const LayerSchedule& action);

struct Loop {
  std::string name;
  int64_t extent = 1;
  bool vectorized = false;
  bool parallel = false;
  bool reduction = false;

  bool operator==(const Loop&) const = default;
};

struct StageNest {
  int stage = -1;
  std::vector<Loop> loops;  // outermost first, nominal extents
  Anchor compute_at;
  Anchor store_at;
};

/// Materialised loops of every scheduled stage, in schedule order.
struct LoopNest {
  std::vector<StageNest> stages;

  const StageNest* find(int stage) const;
  std::string to_string(const PipelineGraph& graph) const;
};

LoopNest loop_nest(const ScheduleState& state);

/// "<pipeline>/" followed by the rendered decisions joined by ';'.
std::string canonical_key(const ScheduleState& state);
std::string render_decision(const PipelineGraph& graph, const LayerSchedule& decision);
/// Inverse of render_decision. Throws ParseError.
LayerSchedule parse_decision(const PipelineGraph& graph, std::string_view text);
/// Rebuilds a state from its canonical key, checking every decision.
ScheduleState state_from_key(const GraphPtr& graph, std::string_view key);
/// Pipeline name of a canonical key (text before the first '/').
std::string_view key_pipeline(std::string_view key);

/// Schedule file: a `pipeline <name>` header line, then one rendered
/// decision per line in schedule order.
std::string serialize_schedule(const ScheduleState& state);
/// Throws ParseError on syntax, Error on a pipeline mismatch and
/// IllegalActionError on an illegal decision.
ScheduleState parse_schedule(const GraphPtr& graph, std::string_view text);

/// Number of complete schedules reachable from the initial state. Exact
/// below 2^53, approximate (floating point) above.
double space_size(const PipelineGraph& graph);

}  // namespace valsched
