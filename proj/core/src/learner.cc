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


#include "valsched/learner.h"

#include <cmath>
#include <fstream>
#include <mutex>
#include <sstream>
#include <unordered_map>

#include "valsched/error.h"
#include "valsched/parallel.h"

namespace valsched {

void TargetTable::update(const std::string& key, Fixed r) {
  if (r <= Fixed()) throw Error("target table: cost must be positive for " + key);
  auto [it, inserted] = entries_.try_emplace(key);
  TargetEntry& e = it->second;
  if (inserted) {
    e.r_min = r;
    e.pipeline = std::string(key_pipeline(key));
  } else if (r < e.r_min) {
    e.r_min = r;
  }
  ++e.count;
}

const TargetEntry* TargetTable::find(const std::string& key) const {
  auto it = entries_.find(key);
  return it == entries_.end() ? nullptr : &it->second;
}

std::string TargetTable::serialize() const {
  std::string out;
  for (const auto& [key, e] : entries_) {
    out += key + '\t' + e.r_min.to_string() + '\t' + std::to_string(e.count) + '\n';
  }
  return out;
}

TargetTable TargetTable::parse(std::string_view text) {
  TargetTable t;
  int line_no = 0;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const size_t a = line.find('\t');
    const size_t b = a == std::string::npos ? a : line.find('\t', a + 1);
    if (b == std::string::npos) throw ParseError(line_no, 1, "expected <key>\\t<r_min>\\t<count>");
    const std::string key = line.substr(0, a);
    TargetEntry e;
    e.r_min = Fixed::parse(std::string_view(line).substr(a + 1, b - a - 1));
    try {
      size_t used = 0;
      e.count = std::stoll(line.substr(b + 1), &used);
      if (used != line.size() - b - 1 || e.count < 1) throw std::invalid_argument("count");
    } catch (const std::exception&) {
      throw ParseError(line_no, static_cast<int>(b + 2), "bad observation count");
    }
    if (e.r_min <= Fixed()) throw ParseError(line_no, static_cast<int>(a + 2), "r_min must be positive");
    e.pipeline = std::string(key_pipeline(key));
    if (!t.entries_.emplace(key, std::move(e)).second) throw ParseError(line_no, 1, "duplicate key");
  }
  return t;
}

void TargetTable::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << serialize();
}

TargetTable TargetTable::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

void RoundConfig::check() const {
  if (schedules_per_pipeline < 1) throw Error("schedules per pipeline must be >= 1");
  if (beam_width < 1) throw Error("beam width must be >= 1");
  if (hidden < 1) throw Error("hidden size must be >= 1");
  if (jobs < 1) throw Error("jobs must be >= 1");
  noise.check();
  train.check();
  machine.check();
}

std::string RoundReport::to_csv() const {
  std::string out = std::string(kCsvHeader) + '\n';
  for (const auto& r : rows) {
    out += r.pipeline + ',' + r.greedy_cost.to_string() + ',' + r.beam_cost.to_string() + ',' +
           (r.exhaustive_cost ? r.exhaustive_cost->to_string() : "") + ',' + std::to_string(r.round) + '\n';
  }
  return out;
}

RoundReport RoundReport::parse_csv(std::string_view text) {
  RoundReport rep;
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader) throw ParseError(1, 1, "missing round report header");
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) f.push_back(cell);
    if (line.back() == ',') f.emplace_back();
    if (f.size() != 5) throw ParseError(line_no, 1, "expected 5 fields");
    ReportRow r;
    r.pipeline = f[0];
    r.greedy_cost = Fixed::parse(f[1]);
    r.beam_cost = Fixed::parse(f[2]);
    if (!f[3].empty()) r.exhaustive_cost = Fixed::parse(f[3]);
    try {
      r.round = std::stoi(f[4]);
    } catch (const std::exception&) {
      throw ParseError(line_no, 1, "bad round number");
    }
    rep.rows.push_back(std::move(r));
  }
  return rep;
}

namespace {

template <typename F>
double mean_of(const std::vector<ReportRow>& rows, F f) {
  double s = 0;
  int n = 0;
  for (const auto& r : rows) {
    if (auto v = f(r)) {
      s += *v;
      ++n;
    }
  }
  return n ? s / n : std::nan("");
}

}  // namespace

double RoundReport::mean_greedy() const {
  return mean_of(rows, [](const ReportRow& r) { return std::optional(r.greedy_cost.to_double()); });
}
double RoundReport::mean_beam() const {
  return mean_of(rows, [](const ReportRow& r) { return std::optional(r.beam_cost.to_double()); });
}
double RoundReport::mean_greedy_beam_ratio() const {
  return mean_of(rows, [](const ReportRow& r) {
    return std::optional(r.greedy_cost.to_double() / r.beam_cost.to_double());
  });
}
double RoundReport::mean_exhaustive_ratio() const {
  return mean_of(rows, [](const ReportRow& r) -> std::optional<double> {
    if (!r.exhaustive_cost) return std::nullopt;
    return r.greedy_cost.to_double() / r.exhaustive_cost->to_double();
  });
}

ValueFunction model_value(const ValueModelParams& params, const MachineModel& machine) {
  return memoize([params, machine](const ScheduleState& s) { return predict(params, s, machine); });
}

TargetTable bootstrap(const std::vector<GraphPtr>& graphs, int count, const MachineModel& machine, uint64_t seed,
                      int jobs) {
  if (count < 1) throw Error("bootstrap count must be >= 1");
  const SearchRng root(seed);
  const size_t per = static_cast<size_t>(count);
  std::vector<std::pair<ScheduleState, Fixed>> runs(graphs.size() * per);
  parallel_for(runs.size(), jobs, [&](size_t t) {
    SearchRng rng = root.derive(t / per).derive(t % per);
    ScheduleState s = random_schedule(graphs[t / per], rng);
    const Fixed c = benchmark(s, machine).total;
    runs[t] = {std::move(s), c};
  });
  TargetTable table;
  for (const auto& [s, c] : runs) {
    for (int j = 0; j <= s.scheduled_count(); ++j) table.update(canonical_key(s.prefix(j)), c);
  }
  return table;
}

std::vector<Sample> make_dataset(const std::vector<GraphPtr>& graphs, const TargetTable& table,
                                 const MachineModel& machine) {
  std::unordered_map<std::string, GraphPtr> by_name;
  for (const auto& g : graphs) by_name.emplace(g->name(), g);
  std::vector<Sample> out;
  for (const auto& [key, e] : table.entries()) {
    auto it = by_name.find(e.pipeline);
    if (it == by_name.end()) continue;
    out.push_back({featurize_state(state_from_key(it->second, key), machine), e.r_min.to_double()});
  }
  return out;
}

TrainResult fit_value_model(const std::vector<GraphPtr>& graphs, const TargetTable& table, const RoundConfig& cfg,
                            int round) {
  const SearchRng streams = SearchRng(cfg.seed).derive(0x7261696eULL).derive(static_cast<uint64_t>(round));
  TrainConfig tc = cfg.train;
  tc.seed = streams.derive(1).next();
  tc.jobs = cfg.jobs;
  return train(init_params(streams.derive(0).next(), cfg.hidden), make_dataset(graphs, table, cfg.machine), tc);
}

std::optional<Fixed> OptimumCache::get(const GraphPtr& graph, const MachineModel& machine, double limit) {
  auto it = values_.find(graph->name());
  if (it != values_.end()) return it->second;
  std::optional<Fixed> v;
  if (space_size(*graph) <= limit) v = exhaustive(graph, machine, limit).optimal_cost;
  values_.emplace(graph->name(), v);
  return v;
}

RoundReport evaluate_round(const std::vector<GraphPtr>& graphs, const ValueModelParams& params,
                           const MachineModel& machine, int beam_width, int round, double exhaustive_limit, int jobs,
                           OptimumCache* cache) {
  OptimumCache local;
  if (!cache) cache = &local;
  const ValueFunction v = model_value(params, machine);
  RoundReport rep;
  for (const auto& g : graphs) {
    const ScheduleState s0 = initial_state(g);
    ReportRow row;
    row.pipeline = g->name();
    row.round = round;
    row.greedy_cost = benchmark(greedy_schedule(s0, v, nullptr, nullptr, jobs).state, machine).total;
    row.beam_cost = benchmark(beam_search(s0, v, beam_width, jobs).state, machine).total;
    row.exhaustive_cost = cache->get(g, machine, exhaustive_limit);
    rep.rows.push_back(std::move(row));
  }
  return rep;
}

RoundResult value_iteration_round(const std::vector<GraphPtr>& graphs, const ValueModelParams& prev,
                                  const TargetTable& table, const RoundConfig& cfg, int round,
                                  OptimumCache* cache) {
  cfg.check();
  const ValueFunction v = model_value(prev, cfg.machine);
  const SearchRng root = SearchRng(cfg.seed).derive(0x726f6c6cULL).derive(static_cast<uint64_t>(round));
  const size_t K = static_cast<size_t>(cfg.schedules_per_pipeline);

  // For every (pipeline, k): the stitched schedule of each rollout prefix.
  std::vector<std::vector<ScheduleState>> stitched(graphs.size() * K);
  parallel_for(stitched.size(), cfg.jobs, [&](size_t t) {
    SearchRng rng = root.derive(t / K).derive(t % K);
    const ScheduleState rollout = greedy_schedule(initial_state(graphs[t / K]), v, &cfg.noise, &rng).state;
    for (int j = 0; j <= rollout.scheduled_count(); ++j) {
      stitched[t].push_back(beam_search(rollout.prefix(j), v, cfg.beam_width).state);
    }
  });

  std::unordered_map<std::string, size_t> index;
  std::vector<const ScheduleState*> unique;
  for (const auto& per : stitched) {
    for (const auto& s : per) {
      if (index.emplace(canonical_key(s), unique.size()).second) unique.push_back(&s);
    }
  }
  std::vector<Fixed> costs(unique.size());
  parallel_for(unique.size(), cfg.jobs, [&](size_t i) { costs[i] = benchmark(*unique[i], cfg.machine).total; });

  RoundResult r;
  r.table = table;
  r.benchmarks = static_cast<int64_t>(unique.size());
  for (const auto& per : stitched) {
    for (size_t j = 0; j < per.size(); ++j) {
      r.table.update(canonical_key(per[j].prefix(static_cast<int>(j))), costs[index.at(canonical_key(per[j]))]);
    }
  }
  r.model = fit_value_model(graphs, r.table, cfg, round);
  r.report = evaluate_round(graphs, r.model.params, cfg.machine, cfg.beam_width, round, cfg.exhaustive_limit,
                            cfg.jobs, cache);
  return r;
}

}  // namespace valsched
