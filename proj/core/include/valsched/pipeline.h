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

/*!
 * \file valsched/pipeline.h
 * \brief Declarative tensor pipelines: stages over integer iteration domains
 * connected by strided-window access maps.
 *
 * A stage iterates over its pure dims (outermost first) followed by its
 * reduction dims. An access map sends consumer index c along one of those
 * iteration dims to the producer interval [stride*c, stride*c + window).
 */
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace valsched {

struct Interval {
  int64_t lo = 0;
  int64_t hi = 0;

  int64_t size() const { return hi > lo ? hi - lo : 0; }
  bool operator==(const Interval&) const = default;
};

/// Product of half-open intervals, one per dimension.
struct Region {
  std::vector<Interval> dims;

  int64_t size() const;
  bool operator==(const Region&) const = default;
};

std::string to_string(const Region& region);

struct AccessMap {
  /// Index into the consumer's iteration dims (pure dims, then reduction dims).
  std::optional<int> consumer_dim;
  int64_t stride = 0;
  int64_t window = 1;

  bool operator==(const AccessMap&) const = default;
};

struct InputEdge {
  std::string producer;
  /// One map per producer dimension, in producer-dim order.
  std::vector<AccessMap> access;

  bool operator==(const InputEdge&) const = default;
};

struct Dim {
  std::string name;
  int64_t extent = 1;

  bool operator==(const Dim&) const = default;
};

struct ExternalBuffer {
  std::string name;
  std::vector<int64_t> dims;
  int64_t element_size = 4;

  bool operator==(const ExternalBuffer&) const = default;
};

struct Stage {
  std::string name;
  std::vector<Dim> dims;
  std::vector<Dim> reduction_dims;
  int64_t flops_per_point = 0;
  int64_t element_size = 4;
  std::vector<InputEdge> inputs;
  bool output = false;

  int num_pure_dims() const { return static_cast<int>(dims.size()); }
  int num_iteration_dims() const { return static_cast<int>(dims.size() + reduction_dims.size()); }
  /// Pure dims first, then reduction dims.
  const Dim& iteration_dim(int i) const;
  bool is_reduction_dim(int i) const { return i >= num_pure_dims(); }
  std::optional<int> find_iteration_dim(std::string_view dim_name) const;
  int64_t pure_points() const;
  int64_t reduction_points() const;
  /// The full pure domain as a region.
  Region domain() const;
  /// The full iteration domain (pure + reduction) as a region.
  Region iteration_domain() const;

  bool operator==(const Stage&) const = default;
};

struct Pipeline {
  std::string name;
  std::vector<ExternalBuffer> buffers;
  std::vector<Stage> stages;

  const Stage* find_stage(std::string_view stage_name) const;
  const ExternalBuffer* find_buffer(std::string_view buffer_name) const;
  std::optional<int> stage_index(std::string_view stage_name) const;

  bool operator==(const Pipeline&) const = default;
};

/// Parses the line-oriented pipeline text format. Throws ParseError on
/// syntax errors, duplicate names and references to undeclared producers.
Pipeline parse_pipeline(std::string_view text);
Pipeline load_pipeline(const std::filesystem::path& path);
/// Inverse of parse_pipeline: parse_pipeline(serialize_pipeline(p)) == p.
std::string serialize_pipeline(const Pipeline& pipeline);

struct Violation {
  std::string kind;  // "duplicate-name", "out-of-bounds", "cycle", ...
  std::string message;
};

struct ValidationReport {
  std::vector<Violation> violations;

  bool ok() const { return violations.empty(); }
  bool has(std::string_view kind) const;
  std::string to_string() const;
};

ValidationReport validate(const Pipeline& pipeline);

/// Producers before consumers; ties broken by declaration order.
/// Throws CycleError.
std::vector<std::string> topological_order(const Pipeline& pipeline);

/// Exact interval image of `consumer_region` (over the consumer's iteration
/// dims) under the edge's access maps. Throws Error on a dimension mismatch.
Region footprint_region(const InputEdge& edge, const Region& consumer_region);

struct IntrinsicStats {
  int64_t points = 0;
  int64_t flops = 0;
  int64_t input_bytes = 0;
  int64_t output_bytes = 0;

  bool operator==(const IntrinsicStats&) const = default;
};

IntrinsicStats intrinsic_stats(const Pipeline& pipeline, std::string_view stage);

/// True for names usable as pipeline, buffer, stage or dim identifiers.
bool is_identifier(std::string_view name);

}  // namespace valsched
