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


#include "valsched/search.h"

#include <algorithm>
#include <limits>
#include <memory>
#include <mutex>
#include <numeric>
#include <shared_mutex>

#include "valsched/error.h"
#include "valsched/parallel.h"

namespace valsched {

ValueFunction memoize(ValueFunction fn) {
  struct Cache {
    std::shared_mutex mu;
    std::unordered_map<std::string, double> values;
  };
  auto cache = std::make_shared<Cache>();
  return [fn = std::move(fn), cache](const ScheduleState& s) {
    std::string key = canonical_key(s);
    {
      std::shared_lock lock(cache->mu);
      auto it = cache->values.find(key);
      if (it != cache->values.end()) return it->second;
    }
    const double v = fn(s);
    std::unique_lock lock(cache->mu);
    cache->values.emplace(std::move(key), v);
    return v;
  };
}

void NoiseConfig::check() const {
  if (!(epsilon >= 0 && epsilon < 1)) throw Error("noise epsilon must be in [0, 1)");
}

namespace {

struct Scored {
  ScheduleState state;
  double value = 0;
};

std::vector<Scored> expand(const ScheduleState& s, const ValueFunction& value, int jobs) {
  std::vector<LayerSchedule> cands = candidate_actions(s);
  std::vector<Scored> out(cands.size());
  parallel_for(cands.size(), jobs, [&](size_t j) {
    out[j].state = apply_unchecked(s, cands[j]);
    out[j].value = value(out[j].state);
  });
  return out;
}

}  // namespace

GreedyResult greedy_schedule(const ScheduleState& start, const ValueFunction& value, const NoiseConfig* noise,
                             SearchRng* rng, int jobs) {
  if (noise) {
    noise->check();
    if (!rng) throw Error("greedy_schedule: noise requires an rng");
  }
  GreedyResult r;
  r.state = start;
  while (!r.state.is_complete()) {
    const uint64_t layer_seed = noise ? rng->next() : 0;
    std::vector<Scored> scored = expand(r.state, value, jobs);
    r.visited += static_cast<int64_t>(scored.size());
    size_t best = 0;
    double best_v = std::numeric_limits<double>::infinity();
    for (size_t j = 0; j < scored.size(); ++j) {
      double v = scored[j].value;
      if (noise) v *= 1.0 + SearchRng(layer_seed).derive(j).uniform(-noise->epsilon, noise->epsilon);
      if (v < best_v) {
        best_v = v;
        best = j;
      }
    }
    r.value = scored[best].value;
    r.state = std::move(scored[best].state);
  }
  if (r.visited == 0) r.value = value(r.state);
  return r;
}

BeamResult beam_search(const ScheduleState& prefix, const ValueFunction& value, int width, int jobs) {
  if (width < 1) throw Error("beam width must be >= 1");
  std::vector<Scored> beam{{prefix, 0}};
  BeamResult r;
  if (prefix.is_complete()) beam[0].value = value(prefix);
  while (!beam.front().state.is_complete()) {
    std::vector<Scored> next;
    for (const auto& b : beam) {
      std::vector<Scored> children = expand(b.state, value, jobs);
      r.visited += static_cast<int64_t>(children.size());
      for (auto& c : children) next.push_back(std::move(c));
    }
    std::stable_sort(next.begin(), next.end(), [](const Scored& a, const Scored& b) { return a.value < b.value; });
    if (next.size() > static_cast<size_t>(width)) next.resize(width);
    beam = std::move(next);
  }
  r.state = beam.front().state;
  r.value = beam.front().value;
  const auto& d = r.state.decisions();
  r.completion.assign(d.begin() + prefix.scheduled_count(), d.end());
  return r;
}

ScheduleState random_schedule(const GraphPtr& graph, SearchRng& rng) {
  ScheduleState s = initial_state(graph);
  while (!s.is_complete()) {
    std::vector<LayerSchedule> cands = candidate_actions(s);
    s = apply_unchecked(s, cands[rng.below(cands.size())]);
  }
  return s;
}

Fixed ExhaustiveResult::value_of(const ScheduleState& state, const MachineModel& machine) const {
  if (state.is_complete()) return benchmark(state, machine).total;
  auto it = prefix_values.find(canonical_key(state));
  if (it == prefix_values.end()) throw Error("no exhaustive value for state " + canonical_key(state));
  return it->second;
}

ValueFunction ExhaustiveResult::value_function(const MachineModel& machine) const {
  return [this, machine](const ScheduleState& s) { return value_of(s, machine).to_double(); };
}

namespace {

class Enumerator {
 public:
  Enumerator(const MachineModel& machine, ExhaustiveResult& out) : machine_(machine), out_(out) {}

  Fixed visit(const ScheduleState& s) {
    if (s.is_complete()) {
      const Fixed c = benchmark(s, machine_).total;
      ++out_.states_visited;
      if (!found_ || c < out_.optimal_cost) {
        found_ = true;
        out_.optimal_cost = c;
        out_.optimal = s;
      }
      return c;
    }
    Fixed best = Fixed::from_milli(std::numeric_limits<int64_t>::max());
    for (const auto& a : candidate_actions(s)) best = std::min(best, visit(apply_unchecked(s, a)));
    out_.prefix_values.emplace(canonical_key(s), best);
    return best;
  }

 private:
  const MachineModel& machine_;
  ExhaustiveResult& out_;
  bool found_ = false;
};

}  // namespace

ExhaustiveResult exhaustive(const GraphPtr& graph, const MachineModel& machine, double limit) {
  const double count = space_size(*graph);
  if (count > limit) throw StateSpaceTooLargeError(count, limit);
  ExhaustiveResult r;
  Enumerator(machine, r).visit(initial_state(graph));
  return r;
}

}  // namespace valsched
