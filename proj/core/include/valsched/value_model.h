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
 * \file valsched/value_model.h
 * \brief Learned estimate of the best achievable cost of a partial schedule.
 *
 * A single-layer LSTM runs over the normalized feature rows of a state (one
 * timestep per stage). Each timestep emits a scalar through an affine
 * readout; the scalars are summed in log space:
 *
 *   predict(s) = exp(sum_t readout(h_t) + target_scale)
 *
 * Training minimises the mean squared log error against target costs with
 * plain minibatch gradient descent, gradient-norm clipping and early stopping
 * on a held-out split.
 */
#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "valsched/features.h"

namespace valsched {

/// Gate blocks in the stacked matrices are ordered input, forget, output,
/// candidate.
struct ValueModelParams {
  int hidden = 0;
  Eigen::MatrixXd input_weights;      // 4H x kFeatureWidth
  Eigen::MatrixXd recurrent_weights;  // 4H x H
  Eigen::VectorXd gate_bias;          // 4H
  Eigen::VectorXd readout_weights;    // H
  double readout_bias = 0;
  /// Added to the summed readout; the mean log target of the training set.
  double target_scale = 0;
  Normalizer normalizer;

  bool operator==(const ValueModelParams& o) const;
};

/// Gradient of the loss with respect to the trainable parameters.
struct ParamGradients {
  Eigen::MatrixXd input_weights;
  Eigen::MatrixXd recurrent_weights;
  Eigen::VectorXd gate_bias;
  Eigen::VectorXd readout_weights;
  double readout_bias = 0;

  static ParamGradients zeros(int hidden);
  double norm() const;
};

/// Flat views over the trainable groups, in a fixed order.
struct ParamGroup {
  const char* name;
  std::span<double> values;
};
std::vector<ParamGroup> trainable_groups(ValueModelParams& params);
std::vector<ParamGroup> trainable_groups(ParamGradients& grads);

/// Weights uniform in (-1/sqrt(H), 1/sqrt(H)), forget-gate bias 1, identity
/// normalizer, zero target scale.
ValueModelParams init_params(uint64_t seed, int hidden = 32);

/// Raw (unnormalized) features and the target cost (> 0).
struct Sample {
  FeatureMatrix features;
  double target = 1;
};

/// log of the prediction for already-normalized features.
double predict_log_normalized(const ValueModelParams& params, const FeatureMatrix& normalized);
double predict_features(const ValueModelParams& params, const FeatureMatrix& raw);
double predict(const ValueModelParams& params, const ScheduleState& state, const MachineModel& machine = {});

/// Mean over the batch of (log(pred) - log(target))^2. Throws Error on a
/// non-positive target.
double loss(const ValueModelParams& params, std::span<const Sample> batch);
/// Exact gradient of loss() by backpropagation through time.
ParamGradients gradients(const ValueModelParams& params, std::span<const Sample> batch, int jobs = 1);

struct TrainConfig {
  double learning_rate = 5e-2;
  int epochs = 200;
  int batch_size = 32;
  uint64_t seed = 0;
  double clip_norm = 5;
  double holdout_fraction = 0.2;
  int patience = 20;
  int jobs = 1;

  void check() const;
};

struct TrainMetrics {
  double initial_train_mse = 0;
  double train_mse = 0;
  double holdout_mse = 0;
  double holdout_r2 = 0;
  double median_relative_error = 0;
  int epochs_run = 0;
  int best_epoch = 0;
  size_t train_size = 0;
  size_t holdout_size = 0;
};

struct TrainResult {
  ValueModelParams params;
  TrainMetrics metrics;
};

/// Fits the normalizer and target scale on the training split, then runs
/// gradient descent from `params`' weights. Deterministic given cfg.seed and
/// independent of cfg.jobs. Throws Error when fewer than 10 samples.
TrainResult train(const ValueModelParams& params, const std::vector<Sample>& dataset, const TrainConfig& cfg);

/// Checkpoint container (little endian), see docs/checkpoint_format.md.
inline constexpr uint32_t kCheckpointVersion = 1;
std::string serialize_params(const ValueModelParams& params);
/// Throws CheckpointError on corrupt data or a version mismatch.
ValueModelParams deserialize_params(std::string_view bytes);
void save_params(const ValueModelParams& params, const std::filesystem::path& path);
ValueModelParams load_params(const std::filesystem::path& path);

}  // namespace valsched
