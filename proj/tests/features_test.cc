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

#include <cmath>

#include "test_util.h"
#include "valsched/error.h"
#include "valsched/features.h"
#include "valsched/rng.h"

namespace valsched {
namespace {

using testing::load_graph;

ScheduleState random_complete(const GraphPtr& g, uint64_t seed) {
  SearchRng rng(seed);
  ScheduleState s = initial_state(g);
  while (!s.is_complete()) {
    auto c = candidate_actions(s);
    s = apply(s, c[rng.below(c.size())]);
  }
  return s;
}

TEST(Featurize, ShapeAndUnscheduledRows) {
  GraphPtr g = load_graph("pipelines/conv_relu_pool.pipe");
  FeatureMatrix m = featurize_state(initial_state(g));
  EXPECT_EQ(m.rows(), 3);
  EXPECT_EQ(m.cols(), kFeatureWidth);
  EXPECT_TRUE(m.rightCols(kFeatureWidth - kIntrinsicFeatures).isZero());
  EXPECT_TRUE(m.allFinite());
}

TEST(Featurize, IntrinsicColumnsAreScheduleInvariant) {
  for (const auto& g : testing::shipped_graphs()) {
    const FeatureMatrix base = featurize_state(initial_state(g));
    for (uint64_t seed = 0; seed < 5; ++seed) {
      ScheduleState s = random_complete(g, seed);
      for (int k = 0; k <= s.scheduled_count(); ++k) {
        FeatureMatrix m = featurize_state(s.prefix(k));
        EXPECT_EQ(m.leftCols(kIntrinsicFeatures), base.leftCols(kIntrinsicFeatures)) << g->name();
        EXPECT_TRUE(m.allFinite());
      }
    }
  }
}

TEST(Featurize, RowsFollowTopologicalOrder) {
  GraphPtr g = load_graph("pipelines/conv_relu_pool.pipe");
  ScheduleState s = apply(initial_state(g), default_action(*g, g->stage_index("pool")));
  FeatureMatrix m = featurize_state(s);
  // pool is scheduled first but sits in the last row.
  EXPECT_EQ(m(2, 8), 1.0);
  EXPECT_EQ(m(0, 8), 0.0);
  EXPECT_EQ(m(1, 8), 0.0);
}

TEST(Featurize, AcquiredColumnsReflectDecision) {
  GraphPtr g = load_graph("pipelines/stencil1d.pipe");
  ScheduleState s = parse_schedule(g,
                                   "pipeline stencil1d\n"
                                   "b split=x:8 order=x.o,x.i vec=8 par=1 compute=root store=root\n"
                                   "a split=- order=x vec=1 par=0 compute=b@0 store=b@0\n");
  FeatureMatrix m = featurize_state(s);
  const int a = 0, b = 1;  // topological rows
  EXPECT_EQ(m(b, 9), 3.0);                   // log2 8
  EXPECT_EQ(m(b, 10), 3.0);                  // 8 parallel tasks
  EXPECT_EQ(m(b, 11), 3.0);                  // innermost x.i:8
  EXPECT_EQ(m(b, 12), 0.0);                  // root
  EXPECT_EQ(m(a, 12), 1.0);                  // level 0
  EXPECT_DOUBLE_EQ(m(a, 13), std::log2(80.0 / 66.0));
  EXPECT_EQ(m(a, 14), 1.0);
  EXPECT_DOUBLE_EQ(m(a, 15), std::log2(9.0));
}

TEST(Normalizer, FitAndRoundTrip) {
  GraphPtr g = load_graph("pipelines/blur2d.pipe");
  std::vector<FeatureMatrix> data;
  for (uint64_t seed = 0; seed < 30; ++seed) {
    ScheduleState s = random_complete(g, seed);
    data.push_back(featurize_state(s.prefix(static_cast<int>(seed % 3))));
  }
  Normalizer nz = fit_normalizer(data);
  Eigen::MatrixXd all(0, kFeatureWidth);
  for (const auto& m : data) {
    Eigen::MatrixXd grown(all.rows() + m.rows(), kFeatureWidth);
    grown << all, normalize(nz, m);
    all = grown;
  }
  for (int c = 0; c < kFeatureWidth; ++c) {
    EXPECT_NEAR(all.col(c).mean(), 0.0, 1e-9);
    if (nz.stddev(c) > Normalizer::kMinStddev) {
      EXPECT_NEAR(std::sqrt(all.col(c).array().square().mean()), 1.0, 1e-9);
    }
  }
  EXPECT_TRUE(denormalize(nz, normalize(nz, data[3])).isApprox(data[3], 1e-12));
  EXPECT_THROW(fit_normalizer({}), Error);
}

TEST(Normalizer, ConstantColumnsStayFinite) {
  FeatureMatrix m = FeatureMatrix::Constant(4, kFeatureWidth, 2.0);
  Normalizer nz = fit_normalizer({m});
  EXPECT_TRUE(normalize(nz, m).allFinite());
  EXPECT_TRUE(normalize(nz, m).isZero());
}

}  // namespace
}  // namespace valsched
