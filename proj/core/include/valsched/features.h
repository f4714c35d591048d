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
 * \file valsched/features.h
 * \brief Per-stage feature rows fed to the value model.
 *
 * Row i describes the i-th stage in topological order. Columns 0-7 are
 * intrinsic (fixed by the pipeline), columns 8-15 are acquired from the
 * stage's decision and are all zero while the stage is unscheduled:
 *
 *   0 log2(1+points)        8  scheduled flag
 *   1 log2(1+flops)         9  log2(vector width)
 *   2 log2(1+input bytes)   10 log2(parallel tasks), 0 if serial
 *   3 log2(1+output bytes)  11 log2(innermost loop extent)
 *   4 flops/(1+in+out)      12 compute depth (0 = root, else level+1)
 *   5 number of inputs      13 log2(recompute factor)
 *   6 reduction dims        14 allocation fits in cache
 *   7 max window/stride     15 log2(1+invocations)
 */
#pragma once

#include <Eigen/Dense>
#include <vector>

#include "valsched/cost_model.h"
#include "valsched/schedule.h"

namespace valsched {

inline constexpr int kFeatureWidth = 16;
inline constexpr int kIntrinsicFeatures = 8;

using FeatureMatrix = Eigen::MatrixXd;  // n_stages x kFeatureWidth

FeatureMatrix featurize_state(const ScheduleState& state, const MachineModel& machine = {});

/// Column-wise z-scoring. Standard deviations are floored at kMinStddev.
struct Normalizer {
  static constexpr double kMinStddev = 1e-6;

  Eigen::VectorXd mean = Eigen::VectorXd::Zero(kFeatureWidth);
  Eigen::VectorXd stddev = Eigen::VectorXd::Ones(kFeatureWidth);

  bool operator==(const Normalizer& o) const { return mean == o.mean && stddev == o.stddev; }
};

/// Population statistics over every row of every matrix. Throws Error on an
/// empty dataset.
Normalizer fit_normalizer(const std::vector<FeatureMatrix>& dataset);
FeatureMatrix normalize(const Normalizer& nz, const FeatureMatrix& m);
FeatureMatrix denormalize(const Normalizer& nz, const FeatureMatrix& m);

}  // namespace valsched
