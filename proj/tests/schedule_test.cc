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

#include <functional>
#include <set>

#include "reference.h"
#include "test_util.h"
#include "valsched/error.h"
#include "valsched/rng.h"
#include "valsched/schedule.h"

namespace valsched {
namespace {

using testing::load_graph;

LayerSchedule parse_d(const GraphPtr& g, const std::string& text) { return parse_decision(*g, text); }

std::string rule_of(const ScheduleState& s, const LayerSchedule& a) {
  try {
    apply(s, a);
  } catch (const IllegalActionError& e) {
    return e.rule();
  }
  return "";
}

TEST(InitialState, EmptyAndPure) {
  GraphPtr g = load_graph("pipelines/conv_relu_pool.pipe");
  ScheduleState a = initial_state(g);
  ScheduleState b = initial_state(g);
  EXPECT_EQ(a.scheduled_count(), 0);
  EXPECT_EQ(a, b);
  EXPECT_EQ(canonical_key(a), "conv_relu_pool/");
}

TEST(InitialState, RejectsInvalidPipeline) {
  Pipeline p = load_pipeline(testing::asset("pipelines/chain2.pipe"));
  p.stages[1].output = false;
  EXPECT_THROW(initial_state(p), ValidationError);
}

TEST(ScheduleOrder, ConsumersFirst) {
  GraphPtr g = load_graph("pipelines/conv_relu_pool.pipe");
  EXPECT_EQ(g->schedule_order(), (std::vector<int>{2, 1, 0}));
  EXPECT_EQ(initial_state(g).next_stage(), 2);
}

TEST(CandidateActions, SingleDimMatchesIndependentLister) {
  GraphPtr g = load_graph("pipelines/toy1.pipe");
  std::vector<std::string> got;
  for (const auto& a : candidate_actions(initial_state(g))) got.push_back(render_decision(*g, a));
  std::vector<std::string> sorted = got;
  std::sort(sorted.begin(), sorted.end());
  EXPECT_EQ(std::set<std::string>(got.begin(), got.end()).size(), got.size()) << "duplicates";
  EXPECT_EQ(sorted, testing::reference_single_stage_candidates(*g));
  // Frozen from the independent lister.
  EXPECT_EQ(got.size(), 17u);
}

TEST(CandidateActions, MultiDimAndReductionMatchIndependentLister) {
  for (const char* text : {
           "pipeline m\nbuffer in dims 64x32 elem 4\nstage s dims y:64,x:32 flops 1 output\n  in in map y*1+1,x*1+1\n",
           "pipeline r\nbuffer in dims 16x8 elem 4\nstage s dims x:16 reduce k:8 flops 2 output\n  in in map x*1+1,k*1+1\n",
           "pipeline t\nbuffer in dims 4x64x32 elem 4\nstage s dims c:4,y:64,x:32 reduce r:3 flops 2 output\n"
           "  in in map c*1+1,y*1+1,x*1+1\n",
       }) {
    GraphPtr g = PipelineGraph::make(parse_pipeline(text));
    std::vector<std::string> got;
    for (const auto& a : candidate_actions(initial_state(g))) got.push_back(render_decision(*g, a));
    std::sort(got.begin(), got.end());
    EXPECT_EQ(got, testing::reference_single_stage_candidates(*g)) << g->name();
  }
}

TEST(CandidateActions, NonDivisibleVectorWidthFiltered) {
  GraphPtr g = PipelineGraph::make(
      parse_pipeline("pipeline six\nbuffer in dims 6 elem 4\nstage s dims x:6 flops 1 output\n  in in map x*1+1\n"));
  auto c = candidate_actions(initial_state(g));
  ASSERT_FALSE(c.empty());
  for (const auto& a : c) EXPECT_EQ(a.vectorize_width, 1);
}

TEST(CandidateActions, ProducerGetsComputeAtSites) {
  GraphPtr g = load_graph("pipelines/chain2.pipe");
  ScheduleState s = apply(initial_state(g), parse_d(g, "b split=x:8 order=x.o,x.i vec=1 par=0 compute=root store=root"));
  auto c = candidate_actions(s);
  // Hand count: 17 loop variants times locations {root/root, b@0/root, b@0/b@0, b@1/root, b@1/b@1}.
  EXPECT_EQ(c.size(), 17u * 5u);
  std::set<int> levels;
  for (const auto& a : c) {
    if (!a.compute_at.is_root()) {
      EXPECT_EQ(a.compute_at.consumer, g->stage_index("b"));
      levels.insert(a.compute_at.level);
    }
  }
  EXPECT_EQ(levels, (std::set<int>{0, 1}));
}

TEST(CandidateActions, DefaultAlwaysPresentAndDeterministic) {
  for (const auto& g : testing::shipped_graphs()) {
    ScheduleState s = initial_state(g);
    while (!s.is_complete()) {
      auto c1 = candidate_actions(s);
      auto c2 = candidate_actions(s);
      ASSERT_EQ(c1, c2);
      const LayerSchedule def = default_action(*g, s.next_stage());
      EXPECT_NE(std::find(c1.begin(), c1.end(), def), c1.end()) << g->name();
      s = apply(s, def);
    }
  }
}

TEST(CandidateActions, ThrowsWhenComplete) {
  GraphPtr g = load_graph("pipelines/toy1.pipe");
  ScheduleState s = apply(initial_state(g), default_action(*g, 0));
  EXPECT_THROW(candidate_actions(s), Error);
}

// Seeded random walks: every candidate passes the legality check and the
// stage's own loops cover its iteration domain exactly.
TEST(CandidateActions, RandomWalksStayLegal) {
  for (const auto& g : testing::shipped_graphs()) {
    for (uint64_t seed = 0; seed < 20; ++seed) {
      SearchRng rng(seed);
      ScheduleState s = initial_state(g);
      while (!s.is_complete()) {
        auto c = candidate_actions(s);
        for (size_t j = 0; j < c.size(); j += 7) ASSERT_NO_THROW(check_action(s, c[j])) << render_decision(*g, c[j]);
        const LayerSchedule& a = c[rng.below(c.size())];
        s = apply(s, a);
        const Stage& st = g->stage(a.stage);
        int64_t product = 1;
        for (LoopRef l : a.order) product *= nominal_extent(st, a, l);
        ASSERT_EQ(product, st.pure_points() * st.reduction_points());
      }
      ASSERT_EQ(s.scheduled_count(), g->num_stages());
    }
  }
}

TEST(Apply, SplitBuildsNest) {
  GraphPtr g = load_graph("pipelines/toy1.pipe");
  ScheduleState s = apply(initial_state(g), parse_d(g, "f split=x:8 order=x.o,x.i vec=8 par=0 compute=root store=root"));
  LoopNest nest = loop_nest(s);
  ASSERT_EQ(nest.stages.size(), 1u);
  const auto& loops = nest.stages[0].loops;
  ASSERT_EQ(loops.size(), 2u);
  EXPECT_EQ(loops[0], (Loop{"x.o", 8, false, false, false}));
  EXPECT_EQ(loops[1], (Loop{"x.i", 8, true, false, false}));

  ScheduleState r = apply(initial_state(g), parse_d(g, "f split=x:8 order=x.i,x.o vec=1 par=0 compute=root store=root"));
  EXPECT_EQ(loop_nest(r).stages[0].loops[0].name, "x.i");
  EXPECT_EQ(loop_nest(r).stages[0].loops[1].name, "x.o");
}

TEST(Apply, DefaultIncrementsAndLeavesInputUnchanged) {
  GraphPtr g = load_graph("pipelines/chain2.pipe");
  ScheduleState s0 = initial_state(g);
  ScheduleState s1 = apply(s0, default_action(*g, s0.next_stage()));
  EXPECT_EQ(s0.scheduled_count(), 0);
  EXPECT_EQ(s1.scheduled_count(), 1);
}

TEST(Apply, NestedAnchorView) {
  GraphPtr g = load_graph("pipelines/chain2.pipe");
  ScheduleState s = apply(initial_state(g), parse_d(g, "b split=x:8 order=x.o,x.i vec=1 par=0 compute=root store=root"));
  s = apply(s, parse_d(g, "a split=- order=x vec=1 par=0 compute=b@0 store=b@0"));
  LoopNest nest = loop_nest(s);
  const StageNest* a = nest.find(g->stage_index("a"));
  ASSERT_NE(a, nullptr);
  EXPECT_EQ(a->compute_at, Anchor::at(g->stage_index("b"), 0));
  EXPECT_NE(nest.to_string(*g).find("a @ b[0] store b[0]: x:64"), std::string::npos) << nest.to_string(*g);
}

TEST(Apply, IllegalActionsNameTheRule) {
  GraphPtr g = load_graph("pipelines/chain2.pipe");
  const ScheduleState s0 = initial_state(g);
  const int b = g->stage_index("b");
  const int a = g->stage_index("a");
  auto base = [&](int stage) { return default_action(*g, stage); };

  LayerSchedule x = base(b);
  x.splits = {{0, 7}};
  x.order = {{0, LoopPart::kOuter}, {0, LoopPart::kInner}};
  EXPECT_EQ(rule_of(s0, x), "split-factor");

  EXPECT_EQ(rule_of(s0, base(a)), "wrong-stage");

  x = base(b);
  x.splits = {{3, 8}};
  EXPECT_EQ(rule_of(s0, x), "split-dim");

  x = base(b);
  x.splits = {{0, 8}};
  EXPECT_EQ(rule_of(s0, x), "order-permutation");

  x = base(b);
  x.vectorize_width = 3;
  EXPECT_EQ(rule_of(s0, x), "vector-width");

  x = base(b);
  x.splits = {{0, 32}};
  x.order = {{0, LoopPart::kInner}, {0, LoopPart::kOuter}};
  x.vectorize_width = 8;
  EXPECT_EQ(rule_of(s0, x), "vector-divisibility");

  x = base(b);
  x.vectorize_width = 8;
  x.parallel = true;
  EXPECT_EQ(rule_of(s0, x), "parallel-vectorized");

  x = base(b);
  x.compute_at = Anchor::at(a, 0);
  EXPECT_EQ(rule_of(s0, x), "compute-at");

  const ScheduleState s1 = apply(s0, parse_d(g, "b split=x:8 order=x.o,x.i vec=1 par=0 compute=root store=root"));
  x = base(a);
  x.compute_at = Anchor::at(b, 5);
  EXPECT_EQ(rule_of(s1, x), "compute-at");
  x = base(a);
  x.store_at = Anchor::at(b, 0);
  EXPECT_EQ(rule_of(s1, x), "store-at-level");
  x = base(a);
  x.compute_at = Anchor::at(b, 0);
  x.store_at = Anchor::at(b, 1);
  EXPECT_EQ(rule_of(s1, x), "store-at-level");
  x.store_at = Anchor::at(b, 0);
  EXPECT_EQ(rule_of(s1, x), "");

  const ScheduleState done = apply(s1, base(a));
  EXPECT_EQ(rule_of(done, base(a)), "complete");

  GraphPtr mm = load_graph("pipelines/matmul_relu.pipe");
  ScheduleState m0 = apply(initial_state(mm), default_action(*mm, mm->stage_index("relu")));
  LayerSchedule r = default_action(*mm, mm->stage_index("mm"));
  r.splits = {{2, 4}};
  EXPECT_EQ(rule_of(m0, r), "split-reduction");
  r = default_action(*mm, mm->stage_index("mm"));
  r.order = {{2, LoopPart::kWhole}, {0, LoopPart::kWhole}, {1, LoopPart::kWhole}};
  r.parallel = true;
  EXPECT_EQ(rule_of(m0, r), "parallel-reduction");
  r = default_action(*mm, mm->stage_index("mm"));
  r.vectorize_width = 8;
  EXPECT_EQ(rule_of(m0, r), "vectorize-reduction");
}

TEST(Apply, DiamondSharedProducerIsRootOnly) {
  GraphPtr g = load_graph("pipelines/diamond.pipe");
  EXPECT_EQ(g->anchor_host(g->stage_index("a")), -1);
  EXPECT_EQ(g->anchor_host(g->stage_index("d")), -1);
  EXPECT_EQ(g->anchor_host(g->stage_index("b")), g->stage_index("d"));
  ScheduleState s = initial_state(g);
  while (s.next_stage() != g->stage_index("a")) s = apply(s, default_action(*g, s.next_stage()));
  for (const auto& a : candidate_actions(s)) EXPECT_TRUE(a.compute_at.is_root());
}

TEST(CanonicalKey, PrefixAndInjectivity) {
  GraphPtr g = load_graph("pipelines/toy1.pipe");
  ScheduleState s0 = initial_state(g);
  auto c = candidate_actions(s0);
  std::set<std::string> keys;
  for (const auto& a : c) {
    std::string k = canonical_key(apply(s0, a));
    EXPECT_EQ(k.rfind(canonical_key(s0), 0), 0u);
    EXPECT_GT(k.size(), canonical_key(s0).size());
    keys.insert(k);
  }
  EXPECT_EQ(keys.size(), c.size());
  LayerSchedule v1 = default_action(*g, 0);
  LayerSchedule v8 = v1;
  v8.vectorize_width = 8;
  EXPECT_NE(canonical_key(apply(s0, v1)), canonical_key(apply(s0, v8)));
}

// Full schedule tree of a 2-stage pipeline: keys are distinct and parse back.
TEST(CanonicalKey, InjectiveOverFullTwoStageTree) {
  GraphPtr g = load_graph("pipelines/stencil1d.pipe");
  std::set<std::string> keys;
  int64_t states = 0;
  std::function<void(const ScheduleState&)> walk = [&](const ScheduleState& s) {
    ++states;
    const std::string k = canonical_key(s);
    EXPECT_TRUE(keys.insert(k).second) << k;
    EXPECT_EQ(state_from_key(g, k), s);
    if (s.is_complete()) return;
    for (const auto& a : candidate_actions(s)) walk(apply(s, a));
  };
  walk(initial_state(g));
  EXPECT_EQ(static_cast<int64_t>(keys.size()), states);
  EXPECT_EQ(key_pipeline(*keys.rbegin()), "stencil1d");
}

TEST(CanonicalKey, RejectsForeignKey) {
  GraphPtr g = load_graph("pipelines/toy1.pipe");
  EXPECT_THROW(state_from_key(g, "chain2/"), Error);
}

TEST(ScheduleFile, RoundTrip) {
  for (const auto& g : testing::shipped_graphs()) {
    SearchRng rng(11);
    ScheduleState s = initial_state(g);
    while (!s.is_complete()) {
      auto c = candidate_actions(s);
      s = apply(s, c[rng.below(c.size())]);
    }
    const std::string text = serialize_schedule(s);
    EXPECT_EQ(text.rfind("pipeline " + g->name() + "\n", 0), 0u);
    EXPECT_EQ(parse_schedule(g, text), s);
  }
}

TEST(ScheduleFile, Errors) {
  GraphPtr g = load_graph("pipelines/toy1.pipe");
  EXPECT_THROW(parse_schedule(g, "pipeline chain2\n"), Error);
  EXPECT_THROW(parse_schedule(g, "pipeline toy1\nf split=x:8 order=x vec=1 par=0 compute=root store=root\n"),
               IllegalActionError);
  EXPECT_THROW(parse_schedule(g, "pipeline toy1\nf split=x:8 order=x.o,x.i vec=one\n"), ParseError);
  EXPECT_THROW(parse_schedule(g, "pipeline toy1\nzz split=- order=x vec=1 par=0 compute=root store=root\n"), Error);
}

int64_t count_complete(const ScheduleState& s) {
  if (s.is_complete()) return 1;
  int64_t n = 0;
  for (const auto& a : candidate_actions(s)) n += count_complete(apply_unchecked(s, a));
  return n;
}

TEST(SpaceSize, MatchesEnumeration) {
  for (const char* f : {"pipelines/toy1.pipe", "pipelines/chain2.pipe", "pipelines/stencil1d.pipe",
                        "pipelines/blur2d.pipe", "pipelines/conv_relu_pool.pipe", "train/stencil_chain.pipe"}) {
    GraphPtr g = load_graph(f);
    EXPECT_EQ(space_size(*g), static_cast<double>(count_complete(initial_state(g)))) << f;
  }
}

TEST(SpaceSize, DeepPipelineIsAstronomical) {
  GraphPtr g = load_graph("pipelines/deep12.pipe");
  EXPECT_EQ(g->num_stages(), 12);
  EXPECT_GT(space_size(*g), 1e20);
}

}  // namespace
}  // namespace valsched
