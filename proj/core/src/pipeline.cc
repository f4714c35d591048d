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

#include "valsched/pipeline.h"

#include <algorithm>
#include <map>
#include <queue>
#include <set>
#include <sstream>

#include "valsched/error.h"

namespace valsched {

int64_t Region::size() const {
  int64_t n = 1;
  for (const auto& d : dims) n *= d.size();
  return n;
}

std::string to_string(const Region& region) {
  std::ostringstream os;
  os << "{";
  for (size_t i = 0; i < region.dims.size(); ++i) {
    if (i) os << ", ";
    os << "[" << region.dims[i].lo << "," << region.dims[i].hi << ")";
  }
  os << "}";
  return os.str();
}

const Dim& Stage::iteration_dim(int i) const {
  return i < num_pure_dims() ? dims[i] : reduction_dims[i - num_pure_dims()];
}

std::optional<int> Stage::find_iteration_dim(std::string_view dim_name) const {
  for (int i = 0; i < num_iteration_dims(); ++i) {
    if (iteration_dim(i).name == dim_name) return i;
  }
  return std::nullopt;
}

int64_t Stage::pure_points() const {
  int64_t n = 1;
  for (const auto& d : dims) n *= d.extent;
  return n;
}

int64_t Stage::reduction_points() const {
  int64_t n = 1;
  for (const auto& d : reduction_dims) n *= d.extent;
  return n;
}

Region Stage::domain() const {
  Region r;
  for (const auto& d : dims) r.dims.push_back({0, d.extent});
  return r;
}

Region Stage::iteration_domain() const {
  Region r = domain();
  for (const auto& d : reduction_dims) r.dims.push_back({0, d.extent});
  return r;
}

const Stage* Pipeline::find_stage(std::string_view stage_name) const {
  for (const auto& s : stages) {
    if (s.name == stage_name) return &s;
  }
  return nullptr;
}

const ExternalBuffer* Pipeline::find_buffer(std::string_view buffer_name) const {
  for (const auto& b : buffers) {
    if (b.name == buffer_name) return &b;
  }
  return nullptr;
}

std::optional<int> Pipeline::stage_index(std::string_view stage_name) const {
  for (size_t i = 0; i < stages.size(); ++i) {
    if (stages[i].name == stage_name) return static_cast<int>(i);
  }
  return std::nullopt;
}

bool is_identifier(std::string_view name) {
  if (name.empty()) return false;
  auto alpha = [](char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_'; };
  if (!alpha(name[0])) return false;
  return std::all_of(name.begin(), name.end(),
                     [&](char c) { return alpha(c) || (c >= '0' && c <= '9'); });
}

bool ValidationReport::has(std::string_view kind) const {
  return std::any_of(violations.begin(), violations.end(),
                     [&](const Violation& v) { return v.kind == kind; });
}

std::string ValidationReport::to_string() const {
  std::ostringstream os;
  for (const auto& v : violations) os << v.kind << ": " << v.message << "\n";
  return os.str();
}

Region footprint_region(const InputEdge& edge, const Region& consumer_region) {
  Region out;
  out.dims.reserve(edge.access.size());
  for (const auto& m : edge.access) {
    if (!m.consumer_dim) {
      out.dims.push_back({0, m.window});
      continue;
    }
    int d = *m.consumer_dim;
    if (d < 0 || d >= static_cast<int>(consumer_region.dims.size())) {
      throw Error("footprint_region: edge from '" + edge.producer + "' references consumer dim " +
                  std::to_string(d) + " but region has " +
                  std::to_string(consumer_region.dims.size()) + " dims");
    }
    const Interval& c = consumer_region.dims[d];
    if (c.size() == 0) {
      out.dims.push_back({m.stride * c.lo, m.stride * c.lo});
    } else {
      out.dims.push_back({m.stride * c.lo, m.stride * (c.hi - 1) + m.window});
    }
  }
  return out;
}

namespace {

std::vector<int64_t> producer_extents(const Pipeline& p, std::string_view name) {
  if (const Stage* s = p.find_stage(name)) {
    std::vector<int64_t> e;
    for (const auto& d : s->dims) e.push_back(d.extent);
    return e;
  }
  if (const ExternalBuffer* b = p.find_buffer(name)) return b->dims;
  return {};
}

void check_names(const Pipeline& p, ValidationReport& report) {
  if (!is_identifier(p.name)) {
    report.violations.push_back({"bad-name", "pipeline name '" + p.name + "' is not an identifier"});
  }
  std::set<std::string> seen;
  auto claim = [&](const std::string& name, const char* what) {
    if (!is_identifier(name)) {
      report.violations.push_back(
          {"bad-name", std::string(what) + " name '" + name + "' is not an identifier"});
    }
    if (!seen.insert(name).second) {
      report.violations.push_back(
          {"duplicate-name", std::string(what) + " '" + name + "' is declared more than once"});
    }
  };
  for (const auto& b : p.buffers) claim(b.name, "buffer");
  for (const auto& s : p.stages) claim(s.name, "stage");
}

void check_buffer(const ExternalBuffer& b, ValidationReport& report) {
  if (b.dims.empty()) {
    report.violations.push_back({"bad-extent", "buffer '" + b.name + "' has no dims"});
  }
  for (int64_t e : b.dims) {
    if (e < 1) {
      report.violations.push_back(
          {"bad-extent", "buffer '" + b.name + "' has extent " + std::to_string(e)});
    }
  }
  if (b.element_size < 1) {
    report.violations.push_back({"bad-element-size", "buffer '" + b.name + "' element size " +
                                                         std::to_string(b.element_size)});
  }
}

void check_stage(const Pipeline& p, const Stage& s, ValidationReport& report) {
  const std::string where = "stage '" + s.name + "'";
  if (s.dims.empty()) report.violations.push_back({"no-dims", where + " has no pure dims"});
  std::set<std::string> dim_names;
  for (int i = 0; i < s.num_iteration_dims(); ++i) {
    const Dim& d = s.iteration_dim(i);
    if (d.extent < 1) {
      report.violations.push_back(
          {"bad-extent", where + " dim '" + d.name + "' has extent " + std::to_string(d.extent)});
    }
    if (!is_identifier(d.name)) {
      report.violations.push_back({"bad-name", where + " dim '" + d.name + "' is not an identifier"});
    }
    if (!dim_names.insert(d.name).second) {
      report.violations.push_back({"duplicate-dim", where + " declares dim '" + d.name + "' twice"});
    }
  }
  if (s.element_size < 1) {
    report.violations.push_back({"bad-element-size", where + " element size " +
                                                         std::to_string(s.element_size)});
  }
  if (s.flops_per_point < 0 || (!s.inputs.empty() && s.flops_per_point < 1)) {
    report.violations.push_back(
        {"bad-flops", where + " has flops_per_point " + std::to_string(s.flops_per_point)});
  }
  for (size_t e = 0; e < s.inputs.size(); ++e) {
    const InputEdge& edge = s.inputs[e];
    const std::string edge_where = where + " input #" + std::to_string(e) + " ('" + edge.producer + "')";
    if (!p.find_stage(edge.producer) && !p.find_buffer(edge.producer)) {
      report.violations.push_back({"unknown-reference", edge_where + " names no stage or buffer"});
      continue;
    }
    std::vector<int64_t> extents = producer_extents(p, edge.producer);
    if (extents.size() != edge.access.size()) {
      report.violations.push_back(
          {"rank-mismatch", edge_where + " has " + std::to_string(edge.access.size()) +
                                " maps for a " + std::to_string(extents.size()) + "-d producer"});
      continue;
    }
    for (size_t k = 0; k < edge.access.size(); ++k) {
      const AccessMap& m = edge.access[k];
      const std::string map_where = edge_where + " map " + std::to_string(k);
      if (m.window < 1) {
        report.violations.push_back({"bad-window", map_where + " window " + std::to_string(m.window)});
        continue;
      }
      if (m.stride < 0) {
        report.violations.push_back({"bad-stride", map_where + " stride " + std::to_string(m.stride)});
        continue;
      }
      int64_t max_index = m.window - 1;
      if (m.consumer_dim) {
        int d = *m.consumer_dim;
        if (d < 0 || d >= s.num_iteration_dims()) {
          report.violations.push_back({"bad-dim-ref", map_where + " references consumer dim " +
                                                          std::to_string(d)});
          continue;
        }
        if (m.window < m.stride) {
          report.violations.push_back(
              {"sparse-access", map_where + " has window " + std::to_string(m.window) +
                                    " < stride " + std::to_string(m.stride)});
        }
        max_index = m.stride * (s.iteration_dim(d).extent - 1) + m.window - 1;
      } else if (m.stride != 0) {
        report.violations.push_back(
            {"bad-stride", map_where + " has no consumer dim but stride " + std::to_string(m.stride)});
      }
      if (max_index >= extents[k]) {
        report.violations.push_back(
            {"out-of-bounds", map_where + " reaches index " + std::to_string(max_index) +
                                  " but producer extent is " + std::to_string(extents[k])});
      }
    }
  }
}

// Every non-output stage must be read, and over all of its points.
void check_coverage(const Pipeline& p, ValidationReport& report) {
  for (const Stage& producer : p.stages) {
    if (producer.output) continue;
    std::optional<Region> hull;
    for (const Stage& consumer : p.stages) {
      for (const InputEdge& edge : consumer.inputs) {
        if (edge.producer != producer.name) continue;
        if (edge.access.size() != producer.dims.size()) return;  // reported elsewhere
        for (const auto& m : edge.access) {
          if (m.consumer_dim && (*m.consumer_dim < 0 || *m.consumer_dim >= consumer.num_iteration_dims())) {
            return;
          }
        }
        Region fp = footprint_region(edge, consumer.iteration_domain());
        if (!hull) {
          hull = fp;
        } else {
          for (size_t d = 0; d < fp.dims.size(); ++d) {
            hull->dims[d].lo = std::min(hull->dims[d].lo, fp.dims[d].lo);
            hull->dims[d].hi = std::max(hull->dims[d].hi, fp.dims[d].hi);
          }
        }
      }
    }
    if (!hull) {
      report.violations.push_back({"unused-stage", "stage '" + producer.name +
                                                       "' is not the output and has no consumers"});
    } else if (*hull != producer.domain() && hull->size() < producer.domain().size()) {
      report.violations.push_back(
          {"unused-points", "consumers of stage '" + producer.name + "' only read " +
                                to_string(*hull) + " of its domain " + to_string(producer.domain())});
    }
  }
}

// Kahn's algorithm with a declaration-order priority queue. Returns the order
// and the stages left over (non-empty iff there is a cycle).
std::pair<std::vector<int>, std::vector<int>> kahn(const Pipeline& p) {
  const int n = static_cast<int>(p.stages.size());
  std::vector<std::set<int>> producers(n);
  std::vector<std::vector<int>> consumers(n);
  for (int c = 0; c < n; ++c) {
    for (const auto& edge : p.stages[c].inputs) {
      if (auto pi = p.stage_index(edge.producer)) {
        if (producers[c].insert(*pi).second) consumers[*pi].push_back(c);
      }
    }
  }
  std::vector<int> indegree(n);
  std::priority_queue<int, std::vector<int>, std::greater<>> ready;
  for (int i = 0; i < n; ++i) {
    indegree[i] = static_cast<int>(producers[i].size());
    if (indegree[i] == 0) ready.push(i);
  }
  std::vector<int> order;
  while (!ready.empty()) {
    int s = ready.top();
    ready.pop();
    order.push_back(s);
    for (int c : consumers[s]) {
      if (--indegree[c] == 0) ready.push(c);
    }
  }
  std::vector<int> rest;
  for (int i = 0; i < n; ++i) {
    if (indegree[i] > 0) rest.push_back(i);
  }
  return {order, rest};
}

}  // namespace

ValidationReport validate(const Pipeline& p) {
  ValidationReport report;
  check_names(p, report);
  if (p.stages.empty()) report.violations.push_back({"no-stages", "pipeline has no stages"});
  for (const auto& b : p.buffers) check_buffer(b, report);
  for (const auto& s : p.stages) check_stage(p, s, report);
  int outputs = static_cast<int>(std::count_if(p.stages.begin(), p.stages.end(),
                                               [](const Stage& s) { return s.output; }));
  if (!p.stages.empty() && outputs != 1) {
    report.violations.push_back(
        {"output-count", "expected exactly one output stage, found " + std::to_string(outputs)});
  }
  auto [order, rest] = kahn(p);
  if (!rest.empty()) {
    std::string names;
    for (int i : rest) names += (names.empty() ? "" : ", ") + p.stages[i].name;
    report.violations.push_back({"cycle", "stages on or behind a dependence cycle: " + names});
  }
  if (report.ok()) check_coverage(p, report);
  return report;
}

std::vector<std::string> topological_order(const Pipeline& p) {
  auto [order, rest] = kahn(p);
  if (!rest.empty()) {
    std::string names;
    for (int i : rest) names += (names.empty() ? "" : ", ") + p.stages[i].name;
    throw CycleError("dependence cycle through: " + names);
  }
  std::vector<std::string> names;
  names.reserve(order.size());
  for (int i : order) names.push_back(p.stages[i].name);
  return names;
}

IntrinsicStats intrinsic_stats(const Pipeline& p, std::string_view stage_name) {
  const Stage* s = p.find_stage(stage_name);
  if (!s) throw Error("intrinsic_stats: unknown stage '" + std::string(stage_name) + "'");
  IntrinsicStats st;
  st.points = s->pure_points() * s->reduction_points();
  st.flops = st.points * s->flops_per_point;
  const Region full = s->iteration_domain();
  for (const auto& edge : s->inputs) {
    int64_t elem = 1;
    if (const Stage* ps = p.find_stage(edge.producer)) {
      elem = ps->element_size;
    } else if (const ExternalBuffer* b = p.find_buffer(edge.producer)) {
      elem = b->element_size;
    } else {
      throw Error("intrinsic_stats: unknown producer '" + edge.producer + "'");
    }
    st.input_bytes += footprint_region(edge, full).size() * elem;
  }
  st.output_bytes = s->pure_points() * s->element_size;
  return st;
}

}  // namespace valsched
