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


#include <gtest/gtest.h>

#include <algorithm>
#include <set>

#include "test_util.h"
#include "valsched/error.h"
#include "valsched/search.h"

namespace valsched {
namespace {

using testing::load_graph;

double cost_of(const ScheduleState& s) { return benchmark(s, MachineModel{}).total.to_double(); }

ValueFunction benchmark_guide() {
  // Completes partial states with default actions; any deterministic guide works.
  return [](const ScheduleState& s) {
    ScheduleState t = s;
    while (!t.is_complete()) t = apply(t, default_action(t.graph(), t.next_stage()));
    return cost_of(t);
  };
}

int64_t candidate_sum(const ScheduleState& final_state) {
  int64_t sum = 0;
  for (int k = 0; k < final_state.scheduled_count(); ++k) {
    sum += static_cast<int64_t>(candidate_actions(final_state.prefix(k)).size());
  }
  return sum;
}

std::vector<GraphPtr> enumerable_graphs() {
  std::vector<GraphPtr> out;
  for (const auto& g : testing::shipped_graphs()) {
    if (space_size(*g) <= 1e6) out.push_back(g);
  }
  return out;
}

TEST(Greedy, VisitCountIsCandidateSum) {
  for (const auto& g : testing::shipped_graphs()) {
    if (g->name() == "deep12") continue;
    GreedyResult r = greedy_schedule(initial_state(g), benchmark_guide());
    ASSERT_TRUE(r.state.is_complete());
    EXPECT_EQ(r.visited, candidate_sum(r.state)) << g->name();
  }
}

TEST(Greedy, ZeroEpsilonMatchesNoiseFree) {
  GraphPtr g = load_graph("pipelines/conv_relu_pool.pipe");
  ValueFunction v = memoize(benchmark_guide());
  GreedyResult plain = greedy_schedule(initial_state(g), v);
  NoiseConfig zero{0.0};
  SearchRng rng(5);
  GreedyResult noisy = greedy_schedule(initial_state(g), v, &zero, &rng);
  EXPECT_EQ(plain.state, noisy.state);
  NoiseConfig bad{1.0};
  EXPECT_THROW(greedy_schedule(initial_state(g), v, &bad, &rng), Error);
}

TEST(Greedy, NoiseIsSeededAndJobIndependent) {
  GraphPtr g = load_graph("pipelines/blur2d.pipe");
  ValueFunction v = memoize(benchmark_guide());
  NoiseConfig noise{0.25};
  std::set<std::string> keys;
  for (uint64_t seed = 0; seed < 8; ++seed) {
    SearchRng a(seed), b(seed);
    GreedyResult ra = greedy_schedule(initial_state(g), v, &noise, &a, 1);
    GreedyResult rb = greedy_schedule(initial_state(g), v, &noise, &b, 4);
    EXPECT_EQ(ra.state, rb.state);
    EXPECT_EQ(a.next(), b.next());
    keys.insert(canonical_key(ra.state));
  }
  EXPECT_GT(keys.size(), 1u);
}

TEST(Beam, WidthOneEqualsGreedy) {
  for (const auto& g : enumerable_graphs()) {
    ValueFunction v = memoize(benchmark_guide());
    GreedyResult gr = greedy_schedule(initial_state(g), v);
    BeamResult br = beam_search(initial_state(g), v, 1);
    EXPECT_EQ(gr.state, br.state) << g->name();
    EXPECT_EQ(br.completion.size(), static_cast<size_t>(g->num_stages()));
  }
  GraphPtr g = load_graph("pipelines/toy1.pipe");
  EXPECT_THROW(beam_search(initial_state(g), benchmark_guide(), 0), Error);
}

TEST(Beam, CompletesPrefixAndIsJobIndependent) {
  GraphPtr g = load_graph("pipelines/conv_relu_pool.pipe");
  ValueFunction v = memoize(benchmark_guide());
  ScheduleState s0 = initial_state(g);
  ScheduleState prefix = apply(s0, candidate_actions(s0)[3]);
  BeamResult a = beam_search(prefix, v, 4, 1);
  BeamResult b = beam_search(prefix, v, 4, 4);
  EXPECT_EQ(a.state, b.state);
  EXPECT_EQ(a.state.prefix(1), prefix);
  EXPECT_EQ(a.completion.size(), 2u);
  BeamResult done = beam_search(a.state, v, 4);
  EXPECT_EQ(done.state, a.state);
  EXPECT_TRUE(done.completion.empty());
}

TEST(RandomSchedule, LegalAndReproducible) {
  for (const auto& g : testing::shipped_graphs()) {
    for (uint64_t seed = 0; seed < 1000; seed += (g->name() == "deep12" ? 97 : 1)) {
      SearchRng a(seed), b(seed);
      ScheduleState s = random_schedule(g, a);
      ASSERT_TRUE(s.is_complete());
      EXPECT_NO_THROW(check_schedule(s));
      EXPECT_EQ(s, random_schedule(g, b));
    }
  }
}

TEST(Exhaustive, RefusesLargeSpacesWithExactCount) {
  GraphPtr g = load_graph("pipelines/diamond.pipe");
  try {
    exhaustive(g, MachineModel{}, 1e6);
    FAIL();
  } catch (const StateSpaceTooLargeError& e) {
    EXPECT_EQ(e.count(), space_size(*g));
    EXPECT_GT(e.count(), 1e6);
  }
}

TEST(Exhaustive, Toy1OptimumMatchesHandValue) {
  GraphPtr g = load_graph("pipelines/toy1.pipe");
  ExhaustiveResult r = exhaustive(g, MachineModel{}, 1e6);
  EXPECT_EQ(r.optimal_cost, Fixed::from_int(2320));
  EXPECT_EQ(r.states_visited, 17);
  Fixed best = Fixed::from_int(1 << 30);
  for (const auto& a : candidate_actions(initial_state(g))) {
    best = std::min(best, benchmark(apply(initial_state(g), a), MachineModel{}).total);
  }
  EXPECT_EQ(best, r.optimal_cost);
}

TEST(Exhaustive, GreedyUnderOptimalValueFindsOptimum) {
  for (const auto& g : enumerable_graphs()) {
    ExhaustiveResult r = exhaustive(g, MachineModel{}, 1e6);
    EXPECT_EQ(static_cast<double>(r.states_visited), space_size(*g)) << g->name();
    ValueFunction vstar = r.value_function(MachineModel{});
    GreedyResult gr = greedy_schedule(initial_state(g), vstar);
    EXPECT_EQ(benchmark(gr.state, MachineModel{}).total, r.optimal_cost) << g->name();
    BeamResult br = beam_search(initial_state(g), vstar, 16);
    EXPECT_EQ(benchmark(br.state, MachineModel{}).total, r.optimal_cost) << g->name();
    EXPECT_LE(br.value, gr.value);
    EXPECT_EQ(r.value_of(initial_state(g), MachineModel{}), r.optimal_cost);
    SearchRng rng(3);
    for (int i = 0; i < 50; ++i) {
      EXPECT_LE(r.optimal_cost, benchmark(random_schedule(g, rng), MachineModel{}).total);
    }
  }
}

TEST(Exhaustive, PrefixValuesAreMinimaOverChildren) {
  GraphPtr g = load_graph("pipelines/stencil1d.pipe");
  ExhaustiveResult r = exhaustive(g, MachineModel{}, 1e6);
  ScheduleState s0 = initial_state(g);
  for (const auto& a : candidate_actions(s0)) {
    ScheduleState s1 = apply(s0, a);
    Fixed best = Fixed::from_int(1 << 30);
    for (const auto& b : candidate_actions(s1)) {
      best = std::min(best, benchmark(apply(s1, b), MachineModel{}).total);
    }
    EXPECT_EQ(r.value_of(s1, MachineModel{}), best);
  }
}

}  // namespace
}  // namespace valsched
