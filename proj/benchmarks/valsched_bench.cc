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


#include <benchmark/benchmark.h>

#include <map>
#include <string>

#include "valsched/cost_model.h"
#include "valsched/learner.h"
#include "valsched/search.h"
#include "valsched/value_model.h"

namespace valsched {
namespace {

GraphPtr graph(const std::string& name) {
  static std::map<std::string, GraphPtr> cache;
  auto it = cache.find(name);
  if (it == cache.end()) {
    it = cache.emplace(name, PipelineGraph::make(load_pipeline(std::string(VALSCHED_ASSET_DIR) + "/" + name))).first;
  }
  return it->second;
}

ScheduleState sample_schedule(const GraphPtr& g, uint64_t seed) {
  SearchRng rng(seed);
  return random_schedule(g, rng);
}

void BM_Benchmark(benchmark::State& state, const char* name) {
  const ScheduleState s = sample_schedule(graph(name), 1);
  const MachineModel m;
  for (auto _ : state) benchmark::DoNotOptimize(benchmark(s, m));
}
BENCHMARK_CAPTURE(BM_Benchmark, conv_relu_pool, "pipelines/conv_relu_pool.pipe");
BENCHMARK_CAPTURE(BM_Benchmark, stencil_chain, "train/stencil_chain.pipe");
BENCHMARK_CAPTURE(BM_Benchmark, deep12, "pipelines/deep12.pipe");

void BM_CandidateActions(benchmark::State& state, const char* name) {
  const ScheduleState s = sample_schedule(graph(name), 2).prefix(1);
  for (auto _ : state) benchmark::DoNotOptimize(candidate_actions(s));
}
BENCHMARK_CAPTURE(BM_CandidateActions, deep12, "pipelines/deep12.pipe");
BENCHMARK_CAPTURE(BM_CandidateActions, mm_bias_relu, "train/mm_bias_relu.pipe");

void BM_Predict(benchmark::State& state) {
  const ValueModelParams p = init_params(1, static_cast<int>(state.range(0)));
  const ScheduleState s = sample_schedule(graph("pipelines/deep12.pipe"), 3);
  for (auto _ : state) benchmark::DoNotOptimize(predict(p, s));
}
BENCHMARK(BM_Predict)->Arg(8)->Arg(32)->Arg(64);

void BM_GreedyDeep12(benchmark::State& state) {
  const ValueModelParams p = init_params(1, 32);
  const GraphPtr g = graph("pipelines/deep12.pipe");
  const int jobs = static_cast<int>(state.range(0));
  for (auto _ : state) {
    GreedyResult r = greedy_schedule(initial_state(g), model_value(p, MachineModel{}), nullptr, nullptr, jobs);
    benchmark::DoNotOptimize(r.visited);
  }
}
BENCHMARK(BM_GreedyDeep12)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace valsched

BENCHMARK_MAIN();
