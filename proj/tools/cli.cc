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


#include "cli.h"

#include <openssl/evp.h>

#include <CLI11.hpp>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <map>
#include <optional>
#include <regex>
#include <sstream>

#include "valsched/error.h"
#include "valsched/learner.h"

namespace valsched::cli {
namespace {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

constexpr int kOk = 0;
constexpr int kDomainError = 1;
constexpr int kUsageError = 2;

#ifndef VALSCHED_VERSION
#define VALSCHED_VERSION "dev"
#endif

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("failed writing '" + path.string() + "'");
}

std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Error("sha256 failed");
  }
  std::string hex;
  char buf[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(buf, sizeof(buf), "%02x", digest[i]);
    hex += buf;
  }
  return hex;
}

std::string format_double(double v) {
  if (std::isnan(v)) return "";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

// Machine overrides: --machine <file> first, then individual flags.
struct MachineFlags {
  std::string file;
  std::map<std::string, std::string> values;

  void add(CLI::App* app) {
    app->add_option("--machine", file, "key=value machine description")->check(CLI::ExistingFile);
    for (const char* key :
         {"flop_cost", "mem_byte_cost", "cache_byte_cost", "cache_size", "cores", "task_overhead", "vec_widths"}) {
      std::string flag = std::string("--") + key;
      std::replace(flag.begin(), flag.end(), '_', '-');
      app->add_option_function<std::string>(
          flag, [this, key](const std::string& v) { values[key] = v; }, std::string("override ") + key);
    }
  }

  MachineModel resolve() const {
    MachineModel m = file.empty() ? MachineModel{} : load_machine(file);
    for (const auto& [k, v] : values) m.set(k, v);
    m.check();
    return m;
  }
};

GraphPtr load_graph(const fs::path& path) { return PipelineGraph::make(parse_pipeline(read_file(path))); }

std::vector<fs::path> pipeline_files(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw Error("'" + dir.string() + "' is not a directory");
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".pipe") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw Error("no .pipe files in '" + dir.string() + "'");
  return files;
}

Json machine_json(const MachineModel& m) {
  Json j = Json::object();
  std::istringstream in(m.to_string());
  std::string line;
  while (std::getline(in, line)) {
    const size_t eq = line.find('=');
    if (eq != std::string::npos) j[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return j;
}

// --- validate ---------------------------------------------------------------

int cmd_validate(const std::string& path, std::ostream& out) {
  const Pipeline p = parse_pipeline(read_file(path));
  const ValidationReport report = validate(p);
  if (report.ok()) {
    out << "ok: pipeline " << p.name << " (" << p.stages.size() << " stages)\n";
    return kOk;
  }
  out << report.to_string();
  return kDomainError;
}

// --- bench ------------------------------------------------------------------

struct BenchArgs {
  std::string pipeline;
  std::string schedule;
  std::string csv;
  MachineFlags machine;
};

int cmd_bench(const BenchArgs& a, std::ostream& out) {
  const MachineModel m = a.machine.resolve();
  const GraphPtr g = load_graph(a.pipeline);
  const ScheduleState s = parse_schedule(g, read_file(a.schedule));
  const Cost cost = benchmark(s, m);
  out << format_breakdown(*g, cost);
  if (!a.csv.empty()) write_file(a.csv, breakdown_csv(*g, cost));
  return kOk;
}

// --- train ------------------------------------------------------------------

struct TrainArgs {
  std::string pipelines;
  std::string out;
  int rounds = 2;
  int bootstrap = 200;
  RoundConfig cfg;
  MachineFlags machine;
};

int cmd_train(TrainArgs a, std::ostream& out) {
  a.cfg.machine = a.machine.resolve();
  a.cfg.check();
  if (a.rounds < 0) throw Error("--rounds must be >= 0");
  if (a.bootstrap < 1) throw Error("--bootstrap must be >= 1");

  const std::vector<fs::path> files = pipeline_files(a.pipelines);
  std::vector<GraphPtr> graphs;
  Json inputs = Json::array();
  for (const auto& f : files) {
    const std::string text = read_file(f);
    graphs.push_back(PipelineGraph::make(parse_pipeline(text)));
    for (size_t i = 0; i + 1 < graphs.size(); ++i) {
      if (graphs[i]->name() == graphs.back()->name()) throw Error("duplicate pipeline name " + graphs.back()->name());
    }
    inputs.push_back({{"file", f.filename().string()}, {"pipeline", graphs.back()->name()}, {"sha256", sha256_hex(text)}});
  }

  const fs::path dir(a.out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw Error("cannot create output directory '" + a.out + "'");

  Json outputs = Json::array();
  Json rounds = Json::array();
  auto emit = [&](const std::string& name, const std::string& bytes) {
    write_file(dir / name, bytes);
    outputs.push_back({{"file", name}, {"sha256", sha256_hex(bytes)}});
  };
  auto record = [&](int round, const TargetTable& table, const TrainResult& model, const RoundReport& report) {
    const std::string i = std::to_string(round);
    emit("targets" + i + ".tsv", table.serialize());
    emit("v" + i + ".ckpt", serialize_params(model.params));
    emit("round" + i + ".csv", report.to_csv());
    const TrainMetrics& mt = model.metrics;
    rounds.push_back({{"round", round},
                      {"table_size", table.size()},
                      {"train_size", mt.train_size},
                      {"holdout_size", mt.holdout_size},
                      {"epochs_run", mt.epochs_run},
                      {"holdout_r2", mt.holdout_r2},
                      {"median_relative_error", mt.median_relative_error},
                      {"mean_greedy", report.mean_greedy()},
                      {"mean_beam", report.mean_beam()}});
    out << "round " << round << ": targets " << table.size() << ", holdout R2 " << format_double(mt.holdout_r2)
        << ", median rel err " << format_double(mt.median_relative_error) << ", mean greedy "
        << format_double(report.mean_greedy()) << ", mean beam " << format_double(report.mean_beam()) << "\n";
  };

  OptimumCache optima;
  TargetTable table = bootstrap(graphs, a.bootstrap, a.cfg.machine, a.cfg.seed, a.cfg.jobs);
  TrainResult model = fit_value_model(graphs, table, a.cfg, 0);
  RoundReport report = evaluate_round(graphs, model.params, a.cfg.machine, a.cfg.beam_width, 0,
                                      a.cfg.exhaustive_limit, a.cfg.jobs, &optima);
  record(0, table, model, report);
  for (int r = 1; r <= a.rounds; ++r) {
    RoundResult res = value_iteration_round(graphs, model.params, table, a.cfg, r, &optima);
    table = std::move(res.table);
    model = std::move(res.model);
    record(r, table, model, res.report);
  }

  const RoundConfig& c = a.cfg;
  Json manifest = {
      {"tool", "valsched"},
      {"version", VALSCHED_VERSION},
      {"command", "train"},
      {"config",
       {{"pipelines", fs::path(a.pipelines).filename().string()},
        {"rounds", a.rounds},
        {"bootstrap", a.bootstrap},
        {"k", c.schedules_per_pipeline},
        {"beam", c.beam_width},
        {"epsilon", c.noise.epsilon},
        {"epochs", c.train.epochs},
        {"batch", c.train.batch_size},
        {"lr", c.train.learning_rate},
        {"clip", c.train.clip_norm},
        {"holdout", c.train.holdout_fraction},
        {"patience", c.train.patience},
        {"hidden", c.hidden},
        {"exhaustive_limit", c.exhaustive_limit},
        {"seed", c.seed},
        {"jobs", c.jobs}}},
      {"machine", machine_json(c.machine)},
      {"inputs", inputs},
      {"outputs", outputs},
      {"rounds", rounds},
  };
  write_file(dir / "manifest.json", manifest.dump(2) + "\n");
  return kOk;
}

// --- schedule ---------------------------------------------------------------

struct ScheduleArgs {
  std::string pipeline;
  std::string model;
  std::string out;
  int beam = 0;
  int jobs = 1;
  MachineFlags machine;
};

int cmd_schedule(const ScheduleArgs& a, std::ostream& out) {
  const MachineModel m = a.machine.resolve();
  const GraphPtr g = load_graph(a.pipeline);
  const ValueModelParams params = load_params(a.model);
  const ValueFunction v = model_value(params, m);
  const auto t0 = std::chrono::steady_clock::now();
  ScheduleState s;
  int64_t visited = 0;
  double predicted = 0;
  if (a.beam > 0) {
    BeamResult r = beam_search(initial_state(g), v, a.beam, a.jobs);
    s = std::move(r.state);
    visited = r.visited;
    predicted = r.value;
  } else {
    GreedyResult r = greedy_schedule(initial_state(g), v, nullptr, nullptr, a.jobs);
    s = std::move(r.state);
    visited = r.visited;
    predicted = r.value;
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const Cost cost = benchmark(s, m);
  const std::string text = serialize_schedule(s);
  if (a.out.empty()) {
    out << text;
  } else {
    write_file(a.out, text);
  }
  out << "search: " << (a.beam > 0 ? "beam " + std::to_string(a.beam) : std::string("greedy")) << "\n"
      << "visited candidates: " << visited << "\n"
      << "predicted cost: " << format_double(predicted) << "\n"
      << "benchmarked cost: " << cost.total.to_string() << "\n"
      << "wall time: " << format_double(secs) << " s\n";
  return kOk;
}

// --- report -----------------------------------------------------------------

int cmd_report(const std::string& dir, const std::string& out_file, std::ostream& out) {
  if (!fs::is_directory(dir)) throw Error("'" + dir + "' is not a directory");
  static const std::regex kRoundCsv(R"(round(\d+)\.csv)");
  std::map<int, fs::path> csvs;
  for (const auto& e : fs::directory_iterator(dir)) {
    std::smatch m;
    const std::string name = e.path().filename().string();
    if (e.is_regular_file() && std::regex_match(name, m, kRoundCsv)) csvs.emplace(std::stoi(m[1]), e.path());
  }
  if (csvs.empty()) throw Error("no round<i>.csv files in '" + dir + "'");
  std::string csv = "round,mean_greedy,mean_beam,mean_greedy_beam_ratio,mean_exhaustive_ratio\n";
  for (const auto& [round, path] : csvs) {
    const RoundReport r = RoundReport::parse_csv(read_file(path));
    if (r.rows.empty()) throw Error("'" + path.string() + "' has no rows");
    csv += std::to_string(round) + ',' + format_double(r.mean_greedy()) + ',' + format_double(r.mean_beam()) + ',' +
           format_double(r.mean_greedy_beam_ratio()) + ',' + format_double(r.mean_exhaustive_ratio()) + '\n';
  }
  if (!out_file.empty()) write_file(out_file, csv);
  out << csv;
  return kOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"valsched: learned value-function scheduler for tensor pipelines", "valsched"};
  app.set_version_flag("--version", VALSCHED_VERSION);
  app.require_subcommand(1);

  std::string validate_path;
  auto* validate_cmd = app.add_subcommand("validate", "check a pipeline file");
  validate_cmd->add_option("pipeline", validate_path, "pipeline file")->required();

  BenchArgs bench;
  auto* bench_cmd = app.add_subcommand("bench", "cost a complete schedule");
  bench_cmd->add_option("pipeline", bench.pipeline, "pipeline file")->required();
  bench_cmd->add_option("schedule", bench.schedule, "schedule file")->required();
  bench_cmd->add_option("--csv", bench.csv, "also write the breakdown as CSV");
  bench.machine.add(bench_cmd);

  TrainArgs train;
  auto* train_cmd = app.add_subcommand("train", "bootstrap and run value iteration rounds");
  train_cmd->add_option("pipelines", train.pipelines, "directory of .pipe files")->required();
  train_cmd->add_option("--out", train.out, "output directory")->required();
  train_cmd->add_option("--rounds", train.rounds, "value iteration rounds")->capture_default_str();
  train_cmd->add_option("--bootstrap", train.bootstrap, "random schedules per pipeline")->capture_default_str();
  train_cmd->add_option("--k", train.cfg.schedules_per_pipeline, "rollouts per pipeline per round")
      ->capture_default_str();
  train_cmd->add_option("--beam", train.cfg.beam_width, "beam width")->capture_default_str();
  train_cmd->add_option("--epsilon", train.cfg.noise.epsilon, "rollout noise amplitude")->capture_default_str();
  train_cmd->add_option("--epochs", train.cfg.train.epochs)->capture_default_str();
  train_cmd->add_option("--batch", train.cfg.train.batch_size)->capture_default_str();
  train_cmd->add_option("--lr", train.cfg.train.learning_rate)->capture_default_str();
  train_cmd->add_option("--clip", train.cfg.train.clip_norm)->capture_default_str();
  train_cmd->add_option("--holdout", train.cfg.train.holdout_fraction)->capture_default_str();
  train_cmd->add_option("--patience", train.cfg.train.patience)->capture_default_str();
  train_cmd->add_option("--hidden", train.cfg.hidden)->capture_default_str();
  train_cmd->add_option("--exhaustive-limit", train.cfg.exhaustive_limit)->capture_default_str();
  train_cmd->add_option("--seed", train.cfg.seed)->capture_default_str();
  train_cmd->add_option("--jobs", train.cfg.jobs)->capture_default_str();
  train.machine.add(train_cmd);

  ScheduleArgs sched;
  auto* sched_cmd = app.add_subcommand("schedule", "schedule a pipeline with a trained model");
  sched_cmd->add_option("pipeline", sched.pipeline, "pipeline file")->required();
  sched_cmd->add_option("--model", sched.model, "checkpoint")->required();
  auto* beam_opt = sched_cmd->add_option("--beam", sched.beam, "beam width")->check(CLI::PositiveNumber);
  sched_cmd->add_flag("--greedy", "greedy search (default)")->excludes(beam_opt);
  sched_cmd->add_option("--out", sched.out, "schedule output file");
  sched_cmd->add_option("--jobs", sched.jobs)->check(CLI::PositiveNumber);
  sched.machine.add(sched_cmd);

  std::string report_dir;
  std::string report_out;
  auto* report_cmd = app.add_subcommand("report", "aggregate round CSVs");
  report_cmd->add_option("dir", report_dir, "training output directory")->required();
  report_cmd->add_option("--out", report_out, "also write the CSV here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsageError;
  }

  try {
    if (*validate_cmd) return cmd_validate(validate_path, out);
    if (*bench_cmd) return cmd_bench(bench, out);
    if (*train_cmd) return cmd_train(train, out);
    if (*sched_cmd) return cmd_schedule(sched, out);
    if (*report_cmd) return cmd_report(report_dir, report_out, out);
  } catch (const ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kUsageError;
  } catch (const ValidationError& e) {
    err << "error: invalid pipeline\n" << e.what() << "\n";
    return kDomainError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kDomainError;
  }
  return kUsageError;
}

}  // namespace valsched::cli
