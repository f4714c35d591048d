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
#include "valsched/pipeline.h"

namespace valsched {
namespace {

using testing::asset;
using testing::parse;

const char* kChain = R"(pipeline chain
buffer in dims 64 elem 4
stage a dims x:64 flops 1
  in in map x*1+1
stage b dims x:64 flops 1
  in a map x*1+1
stage c dims x:64 flops 1 output
  in b map x*1+1
)";

TEST(ParsePipeline, SingleStage) {
  Pipeline p = parse("pipeline one\nbuffer in dims 64 elem 4\nstage a dims x:64 flops 2 output\n  in in map x*1+1\n");
  EXPECT_EQ(p.name, "one");
  ASSERT_EQ(p.stages.size(), 1u);
  ASSERT_EQ(p.buffers.size(), 1u);
  EXPECT_EQ(p.stages[0].dims[0].extent, 64);
  EXPECT_TRUE(p.stages[0].output);
  ASSERT_EQ(p.stages[0].inputs.size(), 1u);
  EXPECT_EQ(p.stages[0].inputs[0].access[0].consumer_dim, 0);
}

TEST(ParsePipeline, UnknownProducer) {
  try {
    parse("pipeline p\nstage a dims x:4 flops 1 output\n  in z map x*1+1\n");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("z"), std::string::npos);
    EXPECT_EQ(e.line(), 3);
  }
}

TEST(ParsePipeline, SyntaxErrorsCarryPosition) {
  EXPECT_THROW(parse("pipeline p\nstage a dims x:0x flops 1 output\n"), ParseError);
  EXPECT_THROW(parse("stage a dims x:4 flops 1\n"), ParseError);
  EXPECT_THROW(parse("pipeline p\nstage a dims x:4 flops 1 output\n  in a map y*1+1\n"), ParseError);
  EXPECT_THROW(parse("pipeline p\nbuffer b dims 4 elem 4\nbuffer b dims 4 elem 4\n"), ParseError);
  try {
    parse("pipeline p\nstage a dims x:4 flops one output\n");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2);
    EXPECT_GT(e.column(), 1);
  }
}

TEST(ParsePipeline, ConvReluPoolRoundTrip) {
  Pipeline p = load_pipeline(asset("pipelines/conv_relu_pool.pipe"));
  ASSERT_EQ(p.stages.size(), 3u);
  EXPECT_EQ(p.stages[0].name, "conv");
  EXPECT_EQ(p.stages[1].name, "relu");
  EXPECT_EQ(p.stages[2].name, "pool");
  EXPECT_EQ(parse_pipeline(serialize_pipeline(p)), p);
}

TEST(ParsePipeline, RoundTripEveryAsset) {
  for (const char* dir : {"pipelines", "train"}) {
    for (const auto& f : testing::asset_files(dir)) {
      Pipeline p = load_pipeline(f);
      EXPECT_EQ(parse_pipeline(serialize_pipeline(p)), p) << f;
    }
  }
}

TEST(Validate, WellFormedChain) { EXPECT_TRUE(validate(parse(kChain)).ok()) << validate(parse(kChain)).to_string(); }

TEST(Validate, EveryAssetIsValid) {
  for (const char* dir : {"pipelines", "train"}) {
    for (const auto& f : testing::asset_files(dir)) {
      ValidationReport r = validate(load_pipeline(f));
      EXPECT_TRUE(r.ok()) << f << "\n" << r.to_string();
    }
  }
}

TEST(Validate, OutOfBoundsWindow) {
  Pipeline p = parse(R"(pipeline p
buffer in dims 4 elem 4
stage a dims x:4 flops 1
  in in map x*1+1
stage b dims x:4 flops 1 output
  in a map x*1+3
)");
  ValidationReport r = validate(p);
  EXPECT_TRUE(r.has("out-of-bounds"));
  EXPECT_NE(r.to_string().find("a"), std::string::npos);
}

TEST(Validate, DuplicateStageName) {
  Pipeline p = parse(kChain);
  p.stages[1].name = "a";
  p.stages[2].inputs[0].producer = "a";
  EXPECT_TRUE(validate(p).has("duplicate-name"));
}

TEST(Validate, StructuralViolations) {
  Pipeline base = parse(kChain);
  {
    Pipeline p = base;
    p.stages[0].dims[0].extent = 0;
    EXPECT_TRUE(validate(p).has("bad-extent"));
  }
  {
    Pipeline p = base;
    p.stages[1].flops_per_point = 0;
    EXPECT_TRUE(validate(p).has("bad-flops"));
  }
  {
    Pipeline p = base;
    p.stages[2].output = false;
    EXPECT_TRUE(validate(p).has("output-count"));
  }
  {
    Pipeline p = base;
    p.stages[0].output = true;
    EXPECT_TRUE(validate(p).has("output-count"));
  }
  {
    Pipeline p = base;
    p.stages[1].inputs[0].access.push_back({0, 1, 1});
    EXPECT_TRUE(validate(p).has("rank-mismatch"));
  }
  {
    Pipeline p = base;
    p.stages[1].inputs[0].access[0].window = 0;
    EXPECT_TRUE(validate(p).has("bad-window"));
  }
  {
    Pipeline p = base;
    p.stages[1].inputs[0].access[0] = {std::nullopt, 1, 1};
    EXPECT_TRUE(validate(p).has("bad-stride"));
  }
  {
    Pipeline p = base;
    p.stages[1].inputs[0].producer = "nowhere";
    EXPECT_TRUE(validate(p).has("unknown-reference"));
  }
  {
    Pipeline p = base;
    p.stages.clear();
    EXPECT_TRUE(validate(p).has("no-stages"));
  }
  {
    Pipeline p = base;
    p.stages[0].inputs[0].producer = "c";
    EXPECT_TRUE(validate(p).has("cycle"));
  }
}

TEST(TopologicalOrder, Chain) {
  EXPECT_EQ(topological_order(parse(kChain)), (std::vector<std::string>{"a", "b", "c"}));
}

TEST(TopologicalOrder, DiamondUsesDeclarationOrder) {
  Pipeline p = load_pipeline(asset("pipelines/diamond.pipe"));
  EXPECT_EQ(topological_order(p), (std::vector<std::string>{"a", "b", "c", "d"}));
  std::swap(p.stages[1], p.stages[2]);
  EXPECT_EQ(topological_order(p), (std::vector<std::string>{"a", "c", "b", "d"}));
}

TEST(TopologicalOrder, SelfLoopIsCycle) {
  Pipeline p = parse("pipeline p\nbuffer in dims 4 elem 4\nstage a dims x:4 flops 1 output\n  in in map x*1+1\n");
  p.stages[0].inputs.push_back({"a", {{0, 1, 1}}});
  EXPECT_THROW(topological_order(p), CycleError);
}

TEST(TopologicalOrder, RespectsEdgesOnAssets) {
  for (const auto& g : testing::shipped_graphs()) {
    const Pipeline& p = g->pipeline();
    auto order = topological_order(p);
    ASSERT_EQ(order.size(), p.stages.size());
    auto pos = [&](const std::string& n) { return std::find(order.begin(), order.end(), n) - order.begin(); };
    for (const auto& s : p.stages) {
      for (const auto& e : s.inputs) {
        if (p.find_stage(e.producer)) {
          EXPECT_LT(pos(e.producer), pos(s.name));
        }
      }
    }
  }
}

InputEdge edge1(std::optional<int> dim, int64_t stride, int64_t window) { return {"p", {{dim, stride, window}}}; }

TEST(FootprintRegion, Examples) {
  EXPECT_EQ(footprint_region(edge1(0, 1, 1), Region{{{0, 8}}}), (Region{{{0, 8}}}));
  EXPECT_EQ(footprint_region(edge1(0, 1, 3), Region{{{4, 8}}}), (Region{{{4, 10}}}));
  EXPECT_EQ(footprint_region(edge1(0, 2, 2), Region{{{0, 4}}}), (Region{{{0, 8}}}));
  EXPECT_EQ(footprint_region(edge1(std::nullopt, 0, 5), Region{{{3, 4}}}), (Region{{{0, 5}}}));
  EXPECT_THROW(footprint_region(edge1(2, 1, 1), Region{{{0, 4}}}), Error);
}

// Every consumer interval of size <= 64 against the brute-force union.
TEST(FootprintRegion, MatchesBruteForceUnion) {
  for (int64_t stride = 0; stride <= 3; ++stride) {
    for (int64_t window = 1; window <= 4; ++window) {
      if (stride > window) continue;  // sparse maps are rejected by validate
      for (int64_t lo = 0; lo < 8; ++lo) {
        for (int64_t hi = lo + 1; hi - lo <= 64 && hi <= 64; hi += 7) {
          std::set<int64_t> seen;
          for (int64_t c = lo; c < hi; ++c) {
            for (int64_t k = 0; k < window; ++k) seen.insert(stride * c + k);
          }
          Region fp = footprint_region(edge1(0, stride, window), Region{{{lo, hi}}});
          ASSERT_EQ(fp.dims[0].lo, *seen.begin());
          ASSERT_EQ(fp.dims[0].hi, *seen.rbegin() + 1);
          ASSERT_EQ(fp.size(), static_cast<int64_t>(seen.size()));
        }
      }
    }
  }
}

TEST(IntrinsicStats, Examples) {
  Pipeline p = load_pipeline(asset("pipelines/toy1.pipe"));
  EXPECT_EQ(intrinsic_stats(p, "f"), (IntrinsicStats{64, 128, 256, 256}));

  Pipeline r = parse("pipeline r\nbuffer in dims 16 elem 4\nstage s dims x:16 reduce r:8 flops 1 output\n"
                     "  in in map x*1+1\n");
  IntrinsicStats rs = intrinsic_stats(r, "s");
  EXPECT_EQ(rs.points, 128);
  EXPECT_EQ(rs.flops, 128);

  Pipeline z = parse("pipeline z\nstage s dims x:16 flops 0 output\n");
  IntrinsicStats zs = intrinsic_stats(z, "s");
  EXPECT_EQ(zs.flops, 0);
  EXPECT_EQ(zs.input_bytes, 0);
  EXPECT_THROW(intrinsic_stats(z, "nope"), Error);
}

}  // namespace
}  // namespace valsched
