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

#include "valsched/features.h"

#include <algorithm>
#include <cmath>

#include "valsched/error.h"

namespace valsched {

namespace {

void intrinsic_row(const PipelineGraph& g, int s, Eigen::Ref<Eigen::RowVectorXd, 0, Eigen::InnerStride<>> row) {
  const Stage& st = g.stage(s);
  const IntrinsicStats is = intrinsic_stats(g.pipeline(), st.name);
  double overlap = 0;
  for (const auto& e : st.inputs) {
    for (const auto& m : e.access) {
      overlap = std::max(overlap, static_cast<double>(m.window) / static_cast<double>(std::max<int64_t>(1, m.stride)));
    }
  }
  row(0) = std::log2(1.0 + is.points);
  row(1) = std::log2(1.0 + is.flops);
  row(2) = std::log2(1.0 + is.input_bytes);
  row(3) = std::log2(1.0 + is.output_bytes);
  row(4) = static_cast<double>(is.flops) / (1.0 + is.input_bytes + is.output_bytes);
  row(5) = static_cast<double>(st.inputs.size());
  row(6) = static_cast<double>(st.reduction_dims.size());
  row(7) = overlap;
}

}  // namespace

FeatureMatrix featurize_state(const ScheduleState& state, const MachineModel& machine) {
  const PipelineGraph& g = state.graph();
  const int n = g.num_stages();
  FeatureMatrix m = FeatureMatrix::Zero(n, kFeatureWidth);
  const BoundsTable bounds = infer_partial_bounds(state);
  for (int row = 0; row < n; ++row) {
    const int s = g.topological_order()[row];
    intrinsic_row(g, s, m.row(row));
    const LayerSchedule* d = state.decision_for(s);
    if (!d) continue;
    const Stage& st = g.stage(s);
    const StageBounds& b = bounds[s];
    m(row, 8) = 1.0;
    m(row, 9) = std::log2(static_cast<double>(d->vectorize_width));
    m(row, 10) = d->parallel ? std::log2(static_cast<double>(b.trip_counts.front())) : 0.0;
    m(row, 11) = std::log2(static_cast<double>(nominal_extent(st, *d, d->order.back())));
    m(row, 12) = d->compute_at.is_root() ? 0.0 : d->compute_at.level + 1.0;
    m(row, 13) = std::log2(b.recompute_factor);
    m(row, 14) = b.alloc_bytes <= machine.cache_size ? 1.0 : 0.0;
    m(row, 15) = std::log2(1.0 + static_cast<double>(b.invocations));
  }
  return m;
}

Normalizer fit_normalizer(const std::vector<FeatureMatrix>& dataset) {
  Eigen::Index rows = 0;
  for (const auto& m : dataset) rows += m.rows();
  if (dataset.empty() || rows == 0) throw Error("fit_normalizer: empty dataset");
  Normalizer nz;
  nz.mean.setZero();
  for (const auto& m : dataset) nz.mean += m.colwise().sum().transpose();
  nz.mean /= static_cast<double>(rows);
  Eigen::VectorXd var = Eigen::VectorXd::Zero(kFeatureWidth);
  for (const auto& m : dataset) {
    var += (m.rowwise() - nz.mean.transpose()).array().square().matrix().colwise().sum().transpose();
  }
  var /= static_cast<double>(rows);
  nz.stddev = var.cwiseSqrt().cwiseMax(Normalizer::kMinStddev);
  return nz;
}

FeatureMatrix normalize(const Normalizer& nz, const FeatureMatrix& m) {
  return ((m.rowwise() - nz.mean.transpose()).array().rowwise() / nz.stddev.transpose().array()).matrix();
}

FeatureMatrix denormalize(const Normalizer& nz, const FeatureMatrix& m) {
  return ((m.array().rowwise() * nz.stddev.transpose().array()).rowwise() + nz.mean.transpose().array()).matrix();
}

}  // namespace valsched
