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

// Decision rendering shared by canonical keys and schedule files:
//
//   <stage> split=<dim>:<factor>,...|- order=<loop>,... vec=<w> par=<0|1>
//           compute=<root|consumer@level> store=<root|consumer@level>
//
// Loops are named after their dim; split halves are "<dim>.o" and "<dim>.i".

#include <charconv>
#include <sstream>

#include "valsched/error.h"
#include "valsched/schedule.h"

namespace valsched {
namespace {

std::string render_anchor(const PipelineGraph& g, const Anchor& a) {
  if (a.is_root()) return "root";
  return g.stage(a.consumer).name + "@" + std::to_string(a.level);
}

int64_t parse_int(std::string_view text, std::string_view what) {
  int64_t v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || ec != std::errc() || ptr != text.data() + text.size()) {
    throw ParseError("bad " + std::string(what) + " '" + std::string(text) + "'");
  }
  return v;
}

std::vector<std::string_view> split_on(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  size_t start = 0;
  for (size_t i = 0; i <= s.size(); ++i) {
    if (i == s.size() || s[i] == sep) {
      out.push_back(s.substr(start, i - start));
      start = i + 1;
    }
  }
  return out;
}

int stage_or_throw(const PipelineGraph& g, std::string_view name) {
  auto i = g.pipeline().stage_index(name);
  if (!i) throw ParseError("pipeline '" + g.name() + "' has no stage '" + std::string(name) + "'");
  return *i;
}

Anchor parse_anchor(const PipelineGraph& g, std::string_view text) {
  if (text == "root") return Anchor::root();
  auto at = text.find('@');
  if (at == std::string_view::npos) throw ParseError("bad site '" + std::string(text) + "'");
  return Anchor::at(stage_or_throw(g, text.substr(0, at)),
                    static_cast<int>(parse_int(text.substr(at + 1), "loop level")));
}

LoopRef parse_loop(const Stage& st, std::string_view text) {
  LoopRef l;
  std::string_view dim = text;
  if (text.size() > 2 && (text.ends_with(".o") || text.ends_with(".i"))) {
    l.part = text.back() == 'o' ? LoopPart::kOuter : LoopPart::kInner;
    dim = text.substr(0, text.size() - 2);
  }
  auto d = st.find_iteration_dim(dim);
  if (!d) throw ParseError("stage '" + st.name + "' has no loop '" + std::string(text) + "'");
  l.dim = *d;
  return l;
}

}  // namespace

std::string render_decision(const PipelineGraph& g, const LayerSchedule& d) {
  const Stage& st = g.stage(d.stage);
  std::string out = st.name + " split=";
  if (d.splits.empty()) out += "-";
  for (size_t i = 0; i < d.splits.size(); ++i) {
    if (i) out += ",";
    out += st.iteration_dim(d.splits[i].dim).name + ":" + std::to_string(d.splits[i].factor);
  }
  out += " order=";
  for (size_t i = 0; i < d.order.size(); ++i) {
    if (i) out += ",";
    out += loop_name(st, d.order[i]);
  }
  out += " vec=" + std::to_string(d.vectorize_width);
  out += d.parallel ? " par=1" : " par=0";
  out += " compute=" + render_anchor(g, d.compute_at);
  out += " store=" + render_anchor(g, d.store_at);
  return out;
}

LayerSchedule parse_decision(const PipelineGraph& g, std::string_view text) {
  std::vector<std::string_view> tokens;
  for (auto t : split_on(text, ' ')) {
    if (!t.empty()) tokens.push_back(t);
  }
  if (tokens.size() != 7) {
    throw ParseError("decision needs 7 fields (stage split order vec par compute store), got " +
                     std::to_string(tokens.size()) + ": '" + std::string(text) + "'");
  }
  LayerSchedule d;
  d.stage = stage_or_throw(g, tokens[0]);
  const Stage& st = g.stage(d.stage);
  auto field = [&](size_t i, std::string_view name) {
    std::string_view t = tokens[i];
    if (!t.starts_with(name) || t.size() <= name.size() || t[name.size()] != '=') {
      throw ParseError("expected field '" + std::string(name) + "=', got '" + std::string(t) + "'");
    }
    return t.substr(name.size() + 1);
  };
  std::string_view splits = field(1, "split");
  if (splits != "-") {
    for (auto part : split_on(splits, ',')) {
      auto colon = part.find(':');
      if (colon == std::string_view::npos) throw ParseError("bad split '" + std::string(part) + "'");
      auto dim = st.find_iteration_dim(part.substr(0, colon));
      if (!dim) throw ParseError("stage '" + st.name + "' has no dim '" + std::string(part.substr(0, colon)) + "'");
      d.splits.push_back({*dim, parse_int(part.substr(colon + 1), "split factor")});
    }
  }
  for (auto part : split_on(field(2, "order"), ',')) d.order.push_back(parse_loop(st, part));
  d.vectorize_width = static_cast<int>(parse_int(field(3, "vec"), "vector width"));
  std::string_view par = field(4, "par");
  if (par != "0" && par != "1") throw ParseError("bad par flag '" + std::string(par) + "'");
  d.parallel = par == "1";
  d.compute_at = parse_anchor(g, field(5, "compute"));
  d.store_at = parse_anchor(g, field(6, "store"));
  return d;
}

std::string canonical_key(const ScheduleState& state) {
  std::string key = state.graph().name() + "/";
  for (size_t i = 0; i < state.decisions().size(); ++i) {
    if (i) key += ";";
    key += render_decision(state.graph(), state.decisions()[i]);
  }
  return key;
}

std::string_view key_pipeline(std::string_view key) {
  auto slash = key.find('/');
  return slash == std::string_view::npos ? key : key.substr(0, slash);
}

ScheduleState state_from_key(const GraphPtr& graph, std::string_view key) {
  auto slash = key.find('/');
  if (slash == std::string_view::npos) throw ParseError("key has no '/': '" + std::string(key) + "'");
  if (key.substr(0, slash) != graph->name()) {
    throw Error("key belongs to pipeline '" + std::string(key.substr(0, slash)) + "', not '" +
                graph->name() + "'");
  }
  ScheduleState s = initial_state(graph);
  std::string_view rest = key.substr(slash + 1);
  if (rest.empty()) return s;
  for (auto part : split_on(rest, ';')) s = apply(s, parse_decision(*graph, part));
  return s;
}

std::string serialize_schedule(const ScheduleState& state) {
  std::string out = "pipeline " + state.graph().name() + "\n";
  for (const auto& d : state.decisions()) out += render_decision(state.graph(), d) + "\n";
  return out;
}

ScheduleState parse_schedule(const GraphPtr& graph, std::string_view text) {
  ScheduleState s = initial_state(graph);
  bool header = false;
  int line_no = 0;
  for (auto raw : split_on(text, '\n')) {
    ++line_no;
    std::string_view line = raw;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    while (!line.empty() && (line.back() == ' ' || line.back() == '\r' || line.back() == '\t')) line.remove_suffix(1);
    while (!line.empty() && (line.front() == ' ' || line.front() == '\t')) line.remove_prefix(1);
    if (line.empty()) continue;
    if (!header) {
      if (!line.starts_with("pipeline ")) throw ParseError(line_no, 1, "expected 'pipeline <name>' header");
      std::string_view name = line.substr(9);
      if (name != graph->name()) {
        throw Error("schedule is for pipeline '" + std::string(name) + "', not '" + graph->name() + "'");
      }
      header = true;
      continue;
    }
    LayerSchedule d;
    try {
      d = parse_decision(*graph, line);
    } catch (const ParseError& e) {
      throw ParseError(line_no, 1, e.what());
    }
    s = apply(s, d);
  }
  if (!header) throw ParseError(1, 1, "empty schedule file");
  return s;
}

}  // namespace valsched
