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

#include "valsched/schedule.h"

#include <algorithm>
#include <map>
#include <set>
#include <sstream>

#include "valsched/error.h"

namespace valsched {

namespace {

// Option grid.
constexpr int64_t kSplitFactors[] = {8, 32};
constexpr int kVectorWidths[] = {1, 8};
constexpr int kMaxSplitDims = 2;
constexpr int kMaxAnchorLevel = 2;

bool is_reduction_loop(const Stage& st, LoopRef l) { return st.is_reduction_dim(l.dim); }

// A compute/store site at `level` of the host nest is usable when that loop
// is pure and the enclosing loops never fix a split's inner half without its
// outer half.
bool anchor_level_ok(const Stage& host, const LayerSchedule& host_decision, int level,
                     std::string* why = nullptr) {
  const auto& order = host_decision.order;
  if (level < 0 || level >= static_cast<int>(order.size())) {
    if (why) *why = "level " + std::to_string(level) + " outside the host's " +
                    std::to_string(order.size()) + " loops";
    return false;
  }
  if (is_reduction_loop(host, order[level])) {
    if (why) *why = "host loop " + loop_name(host, order[level]) + " is a reduction loop";
    return false;
  }
  for (int k = 0; k <= level; ++k) {
    if (order[k].part != LoopPart::kInner) continue;
    bool outer_fixed = false;
    for (int j = 0; j <= level; ++j) {
      if (order[j].dim == order[k].dim && order[j].part == LoopPart::kOuter) outer_fixed = true;
    }
    if (!outer_fixed) {
      if (why) *why = "loops up to level " + std::to_string(level) + " fix " +
                      loop_name(host, order[k]) + " without its outer loop";
      return false;
    }
  }
  return true;
}

}  // namespace

// --- PipelineGraph ---------------------------------------------------------

std::shared_ptr<const PipelineGraph> PipelineGraph::make(Pipeline pipeline) {
  ValidationReport report = validate(pipeline);
  if (!report.ok()) {
    throw ValidationError("invalid pipeline '" + pipeline.name + "':\n" + report.to_string());
  }
  return std::shared_ptr<const PipelineGraph>(new PipelineGraph(std::move(pipeline)));
}

PipelineGraph::PipelineGraph(Pipeline pipeline) : pipeline_(std::move(pipeline)) {
  const int n = num_stages();
  for (const auto& name : valsched::topological_order(pipeline_)) topo_.push_back(stage_index(name));
  schedule_order_.assign(topo_.rbegin(), topo_.rend());
  schedule_position_.assign(n, 0);
  for (int i = 0; i < n; ++i) schedule_position_[schedule_order_[i]] = i;

  consumers_.assign(n, {});
  inputs_.assign(n, {});
  host_edges_.assign(n, {});
  anchor_host_.assign(n, -1);
  for (int c = 0; c < n; ++c) {
    for (const auto& e : pipeline_.stages[c].inputs) {
      Edge edge;
      edge.edge = &e;
      if (auto p = pipeline_.stage_index(e.producer)) {
        edge.producer_stage = *p;
        edge.producer_element_size = pipeline_.stages[*p].element_size;
        auto& cs = consumers_[*p];
        if (std::find(cs.begin(), cs.end(), c) == cs.end()) cs.push_back(c);
      } else {
        edge.producer_element_size = pipeline_.find_buffer(e.producer)->element_size;
      }
      inputs_[c].push_back(edge);
    }
  }
  for (int s = 0; s < n; ++s) {
    if (pipeline_.stages[s].output || consumers_[s].size() != 1) continue;
    int host = consumers_[s].front();
    anchor_host_[s] = host;
    for (const auto& e : pipeline_.stages[host].inputs) {
      if (e.producer == pipeline_.stages[s].name) host_edges_[s].push_back(&e);
    }
  }
}

int PipelineGraph::stage_index(std::string_view name) const {
  auto i = pipeline_.stage_index(name);
  if (!i) throw Error("pipeline '" + pipeline_.name + "' has no stage '" + std::string(name) + "'");
  return *i;
}

// --- loops -----------------------------------------------------------------

int64_t LayerSchedule::split_factor(int dim) const {
  for (const auto& s : splits) {
    if (s.dim == dim) return s.factor;
  }
  return 0;
}

std::vector<LoopRef> default_loop_order(const Stage& stage, const std::vector<Split>& splits) {
  std::vector<LoopRef> loops;
  for (int d = 0; d < stage.num_pure_dims(); ++d) {
    bool split = std::any_of(splits.begin(), splits.end(), [&](const Split& s) { return s.dim == d; });
    if (split) {
      loops.push_back({d, LoopPart::kOuter});
      loops.push_back({d, LoopPart::kInner});
    } else {
      loops.push_back({d, LoopPart::kWhole});
    }
  }
  for (int d = stage.num_pure_dims(); d < stage.num_iteration_dims(); ++d) {
    loops.push_back({d, LoopPart::kWhole});
  }
  return loops;
}

int64_t nominal_extent(const Stage& stage, const LayerSchedule& decision, LoopRef loop) {
  int64_t e = stage.iteration_dim(loop.dim).extent;
  switch (loop.part) {
    case LoopPart::kWhole:
      return e;
    case LoopPart::kOuter:
      return e / decision.split_factor(loop.dim);
    case LoopPart::kInner:
      return decision.split_factor(loop.dim);
  }
  return e;
}

std::string loop_name(const Stage& stage, LoopRef loop) {
  const std::string& n = stage.iteration_dim(loop.dim).name;
  switch (loop.part) {
    case LoopPart::kWhole:
      return n;
    case LoopPart::kOuter:
      return n + ".o";
    case LoopPart::kInner:
      return n + ".i";
  }
  return n;
}

// --- states ----------------------------------------------------------------

int ScheduleState::next_stage() const {
  if (is_complete()) return -1;
  return graph_->schedule_order()[scheduled_count()];
}

const LayerSchedule* ScheduleState::decision_for(int stage) const {
  int pos = graph_->schedule_position(stage);
  return pos < scheduled_count() ? &decisions_[pos] : nullptr;
}

ScheduleState ScheduleState::prefix(int count) const {
  ScheduleState s(graph_);
  s.decisions_.assign(decisions_.begin(), decisions_.begin() + std::min(count, scheduled_count()));
  return s;
}

ScheduleState initial_state(GraphPtr graph) {
  if (!graph) throw Error("initial_state: null pipeline graph");
  return ScheduleState(std::move(graph));
}

ScheduleState initial_state(const Pipeline& pipeline) {
  return initial_state(PipelineGraph::make(pipeline));
}

LayerSchedule default_action(const PipelineGraph& graph, int stage) {
  LayerSchedule a;
  a.stage = stage;
  a.order = default_loop_order(graph.stage(stage), {});
  return a;
}

std::vector<LayerSchedule> enumerate_candidates(const PipelineGraph& graph, int stage,
                                                const LayerSchedule* host_decision) {
  const Stage& st = graph.stage(stage);
  const int np = st.num_pure_dims();
  const bool has_reduction = !st.reduction_dims.empty();

  std::vector<int> split_dims;
  for (int d = std::max(0, np - kMaxSplitDims); d < np; ++d) split_dims.push_back(d);
  std::vector<std::vector<int64_t>> split_options;
  for (int d : split_dims) {
    std::vector<int64_t> opts = {0};
    int64_t e = st.dims[d].extent;
    for (int64_t f : kSplitFactors) {
      if (f < e && e % f == 0) opts.push_back(f);
    }
    split_options.push_back(std::move(opts));
  }

  std::vector<std::pair<Anchor, Anchor>> locations = {{Anchor::root(), Anchor::root()}};
  const int host = graph.anchor_host(stage);
  if (host >= 0 && host_decision) {
    const int levels = std::min<int>(kMaxAnchorLevel + 1, host_decision->order.size());
    for (int l = 0; l < levels; ++l) {
      if (!anchor_level_ok(graph.stage(host), *host_decision, l)) continue;
      locations.push_back({Anchor::at(host, l), Anchor::root()});
      locations.push_back({Anchor::at(host, l), Anchor::at(host, l)});
    }
  }

  std::vector<LayerSchedule> out;
  std::vector<size_t> pick(split_dims.size(), 0);
  while (true) {
    std::vector<Split> splits;
    for (size_t k = 0; k < split_dims.size(); ++k) {
      if (split_options[k][pick[k]] != 0) splits.push_back({split_dims[k], split_options[k][pick[k]]});
    }
    std::vector<LoopRef> pure_loops;
    std::vector<LoopRef> red_loops;
    for (LoopRef l : default_loop_order(st, splits)) {
      (is_reduction_loop(st, l) ? red_loops : pure_loops).push_back(l);
    }
    LayerSchedule a;
    a.stage = stage;
    a.splits = splits;
    for (int swap = 0; swap < 2; ++swap) {
      if (swap && pure_loops.size() < 2) continue;
      for (int red_outer = 0; red_outer < 2; ++red_outer) {
        if (red_outer && !has_reduction) continue;
        std::vector<LoopRef> pure = pure_loops;
        if (swap) std::swap(pure[pure.size() - 1], pure[pure.size() - 2]);
        a.order.clear();
        if (red_outer) a.order.insert(a.order.end(), red_loops.begin(), red_loops.end());
        a.order.insert(a.order.end(), pure.begin(), pure.end());
        if (!red_outer) a.order.insert(a.order.end(), red_loops.begin(), red_loops.end());
        const LoopRef inner = a.order.back();
        const LoopRef outer = a.order.front();
        for (int vec : kVectorWidths) {
          if (vec > 1 && (is_reduction_loop(st, inner) || nominal_extent(st, a, inner) % vec != 0)) continue;
          for (int par = 0; par < 2; ++par) {
            if (par && is_reduction_loop(st, outer)) continue;
            if (par && vec > 1 && a.order.size() == 1) continue;
            a.vectorize_width = vec;
            a.parallel = par != 0;
            for (const auto& [c, s] : locations) {
              a.compute_at = c;
              a.store_at = s;
              out.push_back(a);
            }
          }
        }
      }
    }
    // Odometer over split choices, first split dim varying slowest.
    int k = static_cast<int>(pick.size()) - 1;
    while (k >= 0 && ++pick[k] == split_options[k].size()) pick[k--] = 0;
    if (k < 0) break;
  }
  return out;
}

std::vector<LayerSchedule> candidate_actions(const ScheduleState& state) {
  if (state.is_complete()) throw Error("candidate_actions: state is already complete");
  const int stage = state.next_stage();
  const int host = state.graph().anchor_host(stage);
  const LayerSchedule* host_decision = host >= 0 ? state.decision_for(host) : nullptr;
  return enumerate_candidates(state.graph(), stage, host_decision);
}

void check_action(const ScheduleState& state, const LayerSchedule& a) {
  if (state.is_complete()) throw IllegalActionError("complete", "state already schedules every stage");
  const PipelineGraph& g = state.graph();
  if (a.stage != state.next_stage()) {
    std::string got = a.stage >= 0 && a.stage < g.num_stages() ? g.stage(a.stage).name : std::to_string(a.stage);
    throw IllegalActionError("wrong-stage", "next stage is '" + g.stage(state.next_stage()).name +
                                                "', action schedules '" + got + "'");
  }
  const Stage& st = g.stage(a.stage);
  std::set<int> split_seen;
  for (size_t i = 0; i < a.splits.size(); ++i) {
    const Split& s = a.splits[i];
    if (s.dim < 0 || s.dim >= st.num_iteration_dims()) {
      throw IllegalActionError("split-dim", "no dim #" + std::to_string(s.dim));
    }
    const Dim& d = st.iteration_dim(s.dim);
    if (st.is_reduction_dim(s.dim)) throw IllegalActionError("split-reduction", "cannot split reduction dim " + d.name);
    if (!split_seen.insert(s.dim).second) throw IllegalActionError("duplicate-split", d.name + " split twice");
    if (i > 0 && a.splits[i - 1].dim > s.dim) throw IllegalActionError("split-order", "splits must be sorted by dim");
    if (s.factor < 2 || d.extent % s.factor != 0) {
      throw IllegalActionError("split-factor", "factor " + std::to_string(s.factor) +
                                                   " does not divide " + d.name + ":" + std::to_string(d.extent));
    }
  }
  std::vector<LoopRef> expected = default_loop_order(st, a.splits);
  std::vector<LoopRef> got = a.order;
  std::sort(expected.begin(), expected.end());
  std::sort(got.begin(), got.end());
  if (expected != got) throw IllegalActionError("order-permutation", "order is not a permutation of the stage's loops");

  const LoopRef inner = a.order.back();
  const LoopRef outer = a.order.front();
  if (a.vectorize_width != 1 && a.vectorize_width != 4 && a.vectorize_width != 8 && a.vectorize_width != 16) {
    throw IllegalActionError("vector-width", "width " + std::to_string(a.vectorize_width) + " not in {1,4,8,16}");
  }
  if (a.vectorize_width > 1) {
    if (is_reduction_loop(st, inner)) {
      throw IllegalActionError("vectorize-reduction", "innermost loop " + loop_name(st, inner) + " is a reduction");
    }
    if (nominal_extent(st, a, inner) % a.vectorize_width != 0) {
      throw IllegalActionError("vector-divisibility",
                               "width " + std::to_string(a.vectorize_width) + " does not divide " +
                                   loop_name(st, inner) + ":" + std::to_string(nominal_extent(st, a, inner)));
    }
  }
  if (a.parallel) {
    if (is_reduction_loop(st, outer)) {
      throw IllegalActionError("parallel-reduction", "outermost loop " + loop_name(st, outer) + " is a reduction");
    }
    if (a.vectorize_width > 1 && a.order.size() == 1) {
      throw IllegalActionError("parallel-vectorized", "the only loop cannot be both parallel and vectorized");
    }
  }

  const int host = g.anchor_host(a.stage);
  auto check_site = [&](const Anchor& site, const char* rule) {
    if (site.is_root()) return;
    if (site.consumer != host) {
      throw IllegalActionError(rule, "stage '" + st.name + "' can only be anchored in its unique consumer" +
                                         (host >= 0 ? " '" + g.stage(host).name + "'" : std::string(" (it has none)")));
    }
    const LayerSchedule* hd = state.decision_for(host);
    std::string why;
    if (!hd || !anchor_level_ok(g.stage(host), *hd, site.level, &why)) {
      throw IllegalActionError(rule, hd ? why : "host is not scheduled");
    }
  };
  check_site(a.compute_at, "compute-at");
  check_site(a.store_at, "store-at");
  if (a.compute_at.is_root() && !a.store_at.is_root()) {
    throw IllegalActionError("store-at-level", "store_at must be Root when compute_at is Root");
  }
  if (!a.store_at.is_root() && a.store_at.level > a.compute_at.level) {
    throw IllegalActionError("store-at-level", "store_at is inside compute_at");
  }
}

ScheduleState apply_unchecked(const ScheduleState& state, const LayerSchedule& action) {
  ScheduleState next = state;
  next.decisions_.push_back(action);
  return next;
}

ScheduleState apply(const ScheduleState& state, const LayerSchedule& action) {
  check_action(state, action);
  return apply_unchecked(state, action);
}

// --- loop nest view --------------------------------------------------------

const StageNest* LoopNest::find(int stage) const {
  for (const auto& s : stages) {
    if (s.stage == stage) return &s;
  }
  return nullptr;
}

std::string LoopNest::to_string(const PipelineGraph& graph) const {
  std::ostringstream os;
  for (const auto& sn : stages) {
    os << graph.stage(sn.stage).name << " @ ";
    auto site = [&](const Anchor& a) {
      if (a.is_root()) {
        os << "root";
      } else {
        os << graph.stage(a.consumer).name << "[" << a.level << "]";
      }
    };
    site(sn.compute_at);
    os << " store ";
    site(sn.store_at);
    os << ":";
    for (const auto& l : sn.loops) {
      os << " " << l.name << ":" << l.extent;
      if (l.parallel) os << "[par]";
      if (l.vectorized) os << "[vec]";
    }
    os << "\n";
  }
  return os.str();
}

LoopNest loop_nest(const ScheduleState& state) {
  LoopNest nest;
  for (const auto& d : state.decisions()) {
    const Stage& st = state.graph().stage(d.stage);
    StageNest sn;
    sn.stage = d.stage;
    sn.compute_at = d.compute_at;
    sn.store_at = d.store_at;
    for (size_t k = 0; k < d.order.size(); ++k) {
      Loop l;
      l.name = loop_name(st, d.order[k]);
      l.extent = nominal_extent(st, d, d.order[k]);
      l.reduction = is_reduction_loop(st, d.order[k]);
      l.parallel = d.parallel && k == 0;
      l.vectorized = d.vectorize_width > 1 && k + 1 == d.order.size();
      sn.loops.push_back(std::move(l));
    }
    nest.stages.push_back(std::move(sn));
  }
  return nest;
}

// --- schedule space size ---------------------------------------------------

namespace {

class SpaceCounter {
 public:
  explicit SpaceCounter(const PipelineGraph& g) : g_(g), hosted_(g.num_stages()) {
    for (int s = 0; s < g.num_stages(); ++s) {
      if (g.anchor_host(s) >= 0) hosted_[g.anchor_host(s)].push_back(s);
    }
  }

  double total() {
    double n = 1;
    for (int s = 0; s < g_.num_stages(); ++s) {
      if (g_.anchor_host(s) < 0) n *= choices(s, nullptr);
    }
    return n;
  }

 private:
  // Complete sub-schedules of the stages anchored (transitively) under
  // `stage`, given that `stage` took `decision`.
  double subtree(const LayerSchedule& decision) {
    std::string key = std::to_string(decision.stage) + "|" + render_decision(g_, decision);
    if (auto it = memo_.find(key); it != memo_.end()) return it->second;
    double n = 1;
    for (int p : hosted_[decision.stage]) n *= choices(p, &decision);
    memo_.emplace(std::move(key), n);
    return n;
  }

  double choices(int stage, const LayerSchedule* host_decision) {
    double n = 0;
    for (const auto& a : enumerate_candidates(g_, stage, host_decision)) n += subtree(a);
    return n;
  }

  const PipelineGraph& g_;
  std::vector<std::vector<int>> hosted_;
  std::map<std::string, double> memo_;
};

}  // namespace

double space_size(const PipelineGraph& graph) { return SpaceCounter(graph).total(); }

}  // namespace valsched
