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

#include "valsched/cost_model.h"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <limits>
#include <sstream>

#include "valsched/error.h"

namespace valsched {

// --- machine model ---------------------------------------------------------

void MachineModel::check() const {
  if (flop_cost.milli() <= 0 || mem_byte_cost.milli() <= 0 || cache_byte_cost.milli() <= 0 ||
      task_overhead.milli() <= 0 || cache_size <= 0 || cores < 1) {
    throw Error("machine model parameters must be positive");
  }
  if (cache_byte_cost > mem_byte_cost) throw Error("cache_byte_cost exceeds mem_byte_cost");
  if (vec_widths.empty() || std::find(vec_widths.begin(), vec_widths.end(), 1) == vec_widths.end()) {
    throw Error("vec_widths must include 1");
  }
}

namespace {

int64_t parse_positive(std::string_view key, std::string_view value) {
  int64_t v = 0;
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
  if (value.empty() || ec != std::errc() || ptr != value.data() + value.size()) {
    throw ParseError("bad integer for " + std::string(key) + ": '" + std::string(value) + "'");
  }
  return v;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

}  // namespace

void MachineModel::set(std::string_view key, std::string_view value) {
  value = trim(value);
  if (key == "flop_cost") {
    flop_cost = Fixed::parse(value);
  } else if (key == "mem_byte_cost") {
    mem_byte_cost = Fixed::parse(value);
  } else if (key == "cache_byte_cost") {
    cache_byte_cost = Fixed::parse(value);
  } else if (key == "task_overhead") {
    task_overhead = Fixed::parse(value);
  } else if (key == "cache_size") {
    cache_size = parse_positive(key, value);
  } else if (key == "cores") {
    cores = parse_positive(key, value);
  } else if (key == "vec_widths") {
    vec_widths.clear();
    size_t start = 0;
    while (start <= value.size()) {
      size_t comma = value.find(',', start);
      if (comma == std::string_view::npos) comma = value.size();
      vec_widths.push_back(static_cast<int>(parse_positive(key, trim(value.substr(start, comma - start)))));
      start = comma + 1;
    }
  } else {
    throw ParseError("unknown machine parameter '" + std::string(key) + "'");
  }
}

std::string MachineModel::to_string() const {
  std::ostringstream os;
  os << "flop_cost=" << flop_cost.to_string() << "\n"
     << "mem_byte_cost=" << mem_byte_cost.to_string() << "\n"
     << "cache_byte_cost=" << cache_byte_cost.to_string() << "\n"
     << "cache_size=" << cache_size << "\n"
     << "cores=" << cores << "\n"
     << "task_overhead=" << task_overhead.to_string() << "\n"
     << "vec_widths=";
  for (size_t i = 0; i < vec_widths.size(); ++i) os << (i ? "," : "") << vec_widths[i];
  os << "\n";
  return os.str();
}

MachineModel parse_machine(std::string_view text) {
  MachineModel m;
  int line_no = 0;
  size_t start = 0;
  while (start <= text.size()) {
    size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ParseError(line_no, 1, "expected key=value");
    try {
      m.set(trim(line.substr(0, eq)), line.substr(eq + 1));
    } catch (const ParseError& e) {
      throw ParseError(line_no, 1, e.what());
    }
  }
  m.check();
  return m;
}

MachineModel load_machine(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open machine file '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_machine(ss.str());
}

// --- bounds inference ------------------------------------------------------

Region host_subregion(const Stage& host, const LayerSchedule& hd, const StageBounds& hb, int level) {
  Region sub;
  for (int i = 0; i < host.num_iteration_dims(); ++i) {
    Interval base = host.is_reduction_dim(i) ? Interval{0, host.iteration_dim(i).extent} : hb.region.dims[i];
    int whole = -1, outer = -1, inner = -1;
    for (int k = 0; k < static_cast<int>(hd.order.size()); ++k) {
      if (hd.order[k].dim != i) continue;
      switch (hd.order[k].part) {
        case LoopPart::kWhole: whole = k; break;
        case LoopPart::kOuter: outer = k; break;
        case LoopPart::kInner: inner = k; break;
      }
    }
    Interval iv = base;
    if (whole >= 0) {
      if (whole <= level) iv.hi = iv.lo + 1;
    } else {
      const int64_t tile = std::min(hd.split_factor(i), base.size());
      const bool outer_fixed = outer <= level;
      const bool inner_fixed = inner <= level;
      if (outer_fixed && inner_fixed) {
        iv.hi = iv.lo + 1;
      } else if (outer_fixed) {
        iv.hi = iv.lo + tile;
      } else if (inner_fixed) {
        // Strided set {tile starts + offset}; its hull.
        iv.hi = iv.lo + base.size() - tile + 1;
      }
    }
    sub.dims.push_back(iv);
  }
  return sub;
}

namespace {

std::vector<int64_t> trip_counts(const Stage& st, const LayerSchedule& d, const Region& region) {
  std::vector<int64_t> trips;
  trips.reserve(d.order.size());
  for (LoopRef l : d.order) {
    int64_t r = st.is_reduction_dim(l.dim) ? st.iteration_dim(l.dim).extent : region.dims[l.dim].size();
    int64_t inner = std::min(d.split_factor(l.dim), r);
    switch (l.part) {
      case LoopPart::kWhole: trips.push_back(r); break;
      case LoopPart::kOuter: trips.push_back(inner > 0 ? (r + inner - 1) / inner : 0); break;
      case LoopPart::kInner: trips.push_back(inner); break;
    }
  }
  return trips;
}

Region hull_of_host_edges(const PipelineGraph& g, int stage, const Region& host_sub) {
  Region hull;
  for (const InputEdge* e : g.host_edges(stage)) {
    Region fp = footprint_region(*e, host_sub);
    if (hull.dims.empty()) {
      hull = std::move(fp);
      continue;
    }
    for (size_t k = 0; k < fp.dims.size(); ++k) {
      hull.dims[k].lo = std::min(hull.dims[k].lo, fp.dims[k].lo);
      hull.dims[k].hi = std::max(hull.dims[k].hi, fp.dims[k].hi);
    }
  }
  return hull;
}

}  // namespace

BoundsTable infer_partial_bounds(const ScheduleState& state) {
  const PipelineGraph& g = state.graph();
  BoundsTable table;
  table.stages.resize(g.num_stages());
  for (const LayerSchedule& d : state.decisions()) {
    const Stage& st = g.stage(d.stage);
    StageBounds b;
    b.scheduled = true;
    if (d.compute_at.is_root()) {
      b.invocations = 1;
      b.region = st.domain();
    } else {
      const int host = d.compute_at.consumer;
      const StageBounds& hb = table.stages[host];
      const LayerSchedule& hd = *state.decision_for(host);
      b.invocations = hb.invocations;
      for (int k = 0; k <= d.compute_at.level; ++k) b.invocations *= hb.trip_counts[k];
      b.region = hull_of_host_edges(g, d.stage, host_subregion(g.stage(host), hd, hb, d.compute_at.level));
    }
    b.trip_counts = trip_counts(st, d, b.region);
    b.points_per_invocation = b.region.size() * st.reduction_points();
    b.recompute_factor = static_cast<double>(b.invocations) * static_cast<double>(b.points_per_invocation) /
                         (static_cast<double>(st.pure_points()) * static_cast<double>(st.reduction_points()));
    if (d.store_at.is_root()) {
      b.alloc_bytes = st.pure_points() * st.element_size;
    } else {
      const int host = d.store_at.consumer;
      const Region store_region = hull_of_host_edges(
          g, d.stage,
          host_subregion(g.stage(host), *state.decision_for(host), table.stages[host], d.store_at.level));
      b.alloc_bytes = store_region.size() * st.element_size;
    }
    table.stages[d.stage] = std::move(b);
  }
  return table;
}

BoundsTable infer_bounds(const ScheduleState& state) {
  if (!state.is_complete()) {
    throw IncompleteScheduleError("schedule for '" + state.graph().name() + "' covers " +
                                  std::to_string(state.scheduled_count()) + " of " +
                                  std::to_string(state.graph().num_stages()) + " stages");
  }
  return infer_partial_bounds(state);
}

// --- cost ------------------------------------------------------------------

void check_schedule(const ScheduleState& state) {
  ScheduleState s = initial_state(state.graph_ptr());
  for (const auto& d : state.decisions()) s = apply(s, d);
}

namespace {

Fixed checked(__int128 milli) {
  if (milli < 0 || milli > static_cast<__int128>(std::numeric_limits<int64_t>::max())) {
    throw Error("cost overflow");
  }
  return Fixed::from_milli(static_cast<int64_t>(milli));
}

}  // namespace

Cost benchmark(const ScheduleState& state, const MachineModel& machine) {
  const BoundsTable bounds = infer_bounds(state);
  check_schedule(state);
  const PipelineGraph& g = state.graph();
  Cost cost;
  for (int s : g.topological_order()) {
    const Stage& st = g.stage(s);
    const LayerSchedule& d = *state.decision_for(s);
    const StageBounds& b = bounds[s];
    if (std::find(machine.vec_widths.begin(), machine.vec_widths.end(), d.vectorize_width) ==
        machine.vec_widths.end()) {
      throw IllegalActionError("vector-width", "machine does not support width " +
                                                   std::to_string(d.vectorize_width));
    }
    StageCost sc;
    sc.stage = s;
    const __int128 inv = b.invocations;
    const __int128 points = inv * b.points_per_invocation;
    const int64_t v = d.vectorize_width > 1 ? d.vectorize_width : 1;
    const int64_t p = d.parallel ? std::min(machine.cores, b.trip_counts.front()) : 1;
    sc.compute = Fixed::ratio_half_up(points * st.flops_per_point * machine.flop_cost.milli(),
                                      static_cast<__int128>(v) * std::max<int64_t>(p, 1));
    if (d.parallel) {
      sc.overhead = checked(static_cast<__int128>(machine.task_overhead.milli()) * b.trip_counts.front() * inv);
    }
    auto unit = [&](int64_t alloc_bytes) {
      return alloc_bytes <= machine.cache_size ? machine.cache_byte_cost.milli() : machine.mem_byte_cost.milli();
    };
    Region iteration = b.region;
    for (const auto& r : st.reduction_dims) iteration.dims.push_back({0, r.extent});
    __int128 memory = 0;
    for (const auto& e : g.inputs(s)) {
      const int64_t bytes = footprint_region(*e.edge, iteration).size() * e.producer_element_size;
      const int64_t u = e.producer_stage >= 0 ? unit(bounds[e.producer_stage].alloc_bytes)
                                              : machine.mem_byte_cost.milli();
      memory += inv * bytes * u;
    }
    memory += inv * b.region.size() * st.element_size * unit(b.alloc_bytes);
    sc.memory = checked(memory);
    cost.total = checked(static_cast<__int128>(cost.total.milli()) + sc.total().milli());
    cost.per_stage.push_back(sc);
  }
  return cost;
}

std::string format_breakdown(const PipelineGraph& g, const Cost& cost) {
  std::ostringstream os;
  size_t width = 5;
  for (const auto& sc : cost.per_stage) width = std::max(width, g.stage(sc.stage).name.size());
  auto pad = [&](const std::string& s, size_t w) { return s + std::string(w > s.size() ? w - s.size() : 0, ' '); };
  auto rpad = [&](const std::string& s, size_t w) { return std::string(w > s.size() ? w - s.size() : 0, ' ') + s; };
  os << pad("stage", width) << "  " << rpad("compute", 16) << "  " << rpad("memory", 16) << "  "
     << rpad("overhead", 16) << "  " << rpad("total", 16) << "\n";
  for (const auto& sc : cost.per_stage) {
    os << pad(g.stage(sc.stage).name, width) << "  " << rpad(sc.compute.to_string(), 16) << "  "
       << rpad(sc.memory.to_string(), 16) << "  " << rpad(sc.overhead.to_string(), 16) << "  "
       << rpad(sc.total().to_string(), 16) << "\n";
  }
  os << "total " << cost.total.to_string() << "\n";
  return os.str();
}

std::string breakdown_csv(const PipelineGraph& g, const Cost& cost) {
  std::ostringstream os;
  os << "stage,compute,memory,overhead,total\n";
  for (const auto& sc : cost.per_stage) {
    os << g.stage(sc.stage).name << "," << sc.compute.to_string() << "," << sc.memory.to_string() << ","
       << sc.overhead.to_string() << "," << sc.total().to_string() << "\n";
  }
  os << "TOTAL,,,," << cost.total.to_string() << "\n";
  return os.str();
}

}  // namespace valsched
