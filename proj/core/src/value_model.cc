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

#include "valsched/value_model.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <sstream>

#include "valsched/error.h"
#include "valsched/parallel.h"
#include "valsched/rng.h"

namespace valsched {

bool ValueModelParams::operator==(const ValueModelParams& o) const {
  return hidden == o.hidden && input_weights == o.input_weights && recurrent_weights == o.recurrent_weights &&
         gate_bias == o.gate_bias && readout_weights == o.readout_weights && readout_bias == o.readout_bias &&
         target_scale == o.target_scale && normalizer == o.normalizer;
}

ParamGradients ParamGradients::zeros(int hidden) {
  ParamGradients g;
  g.input_weights = Eigen::MatrixXd::Zero(4 * hidden, kFeatureWidth);
  g.recurrent_weights = Eigen::MatrixXd::Zero(4 * hidden, hidden);
  g.gate_bias = Eigen::VectorXd::Zero(4 * hidden);
  g.readout_weights = Eigen::VectorXd::Zero(hidden);
  return g;
}

double ParamGradients::norm() const {
  return std::sqrt(input_weights.squaredNorm() + recurrent_weights.squaredNorm() + gate_bias.squaredNorm() +
                   readout_weights.squaredNorm() + readout_bias * readout_bias);
}

namespace {

template <typename T>
std::vector<ParamGroup> groups_of(T& p) {
  return {
      {"input_weights", {p.input_weights.data(), static_cast<size_t>(p.input_weights.size())}},
      {"recurrent_weights", {p.recurrent_weights.data(), static_cast<size_t>(p.recurrent_weights.size())}},
      {"gate_bias", {p.gate_bias.data(), static_cast<size_t>(p.gate_bias.size())}},
      {"readout_weights", {p.readout_weights.data(), static_cast<size_t>(p.readout_weights.size())}},
      {"readout_bias", {&p.readout_bias, 1}},
  };
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Activations of one forward pass, one column per timestep.
struct Trace {
  Eigen::MatrixXd gates;  // 4H x T, post-activation
  Eigen::MatrixXd cell;   // H x T
  Eigen::MatrixXd hidden;  // H x T
  double raw = 0;
};

double forward(const ValueModelParams& p, const FeatureMatrix& x, Trace* trace) {
  const int H = p.hidden;
  const Eigen::Index T = x.rows();
  Eigen::MatrixXd pre = p.input_weights * x.transpose();
  pre.colwise() += p.gate_bias;
  Eigen::VectorXd h = Eigen::VectorXd::Zero(H);
  Eigen::VectorXd c = Eigen::VectorXd::Zero(H);
  Eigen::VectorXd z(4 * H);
  if (trace) {
    trace->gates.resize(4 * H, T);
    trace->cell.resize(H, T);
    trace->hidden.resize(H, T);
  }
  double raw = 0;
  for (Eigen::Index t = 0; t < T; ++t) {
    z.noalias() = pre.col(t) + p.recurrent_weights * h;
    for (int k = 0; k < 3 * H; ++k) z(k) = sigmoid(z(k));
    for (int k = 3 * H; k < 4 * H; ++k) z(k) = std::tanh(z(k));
    c = z.segment(H, H).cwiseProduct(c) + z.segment(0, H).cwiseProduct(z.segment(3 * H, H));
    h = z.segment(2 * H, H).cwiseProduct(c.array().tanh().matrix());
    raw += p.readout_weights.dot(h) + p.readout_bias;
    if (trace) {
      trace->gates.col(t) = z;
      trace->cell.col(t) = c;
      trace->hidden.col(t) = h;
    }
  }
  if (trace) trace->raw = raw;
  return raw;
}

// Accumulates d(loss)/d(params) for one sequence given d(loss)/d(raw).
void backward(const ValueModelParams& p, const FeatureMatrix& x, const Trace& tr, double draw, ParamGradients& g) {
  const int H = p.hidden;
  const Eigen::Index T = x.rows();
  Eigen::VectorXd dh_next = Eigen::VectorXd::Zero(H);
  Eigen::VectorXd dc_next = Eigen::VectorXd::Zero(H);
  Eigen::VectorXd dz(4 * H);
  Eigen::VectorXd zero = Eigen::VectorXd::Zero(H);
  for (Eigen::Index t = T - 1; t >= 0; --t) {
    const auto gates = tr.gates.col(t);
    const auto in = gates.segment(0, H);
    const auto fg = gates.segment(H, H);
    const auto og = gates.segment(2 * H, H);
    const auto cand = gates.segment(3 * H, H);
    const Eigen::VectorXd tc = tr.cell.col(t).array().tanh();
    const Eigen::VectorXd c_prev = t > 0 ? Eigen::VectorXd(tr.cell.col(t - 1)) : zero;
    const Eigen::VectorXd h_prev = t > 0 ? Eigen::VectorXd(tr.hidden.col(t - 1)) : zero;

    g.readout_weights += draw * tr.hidden.col(t);
    g.readout_bias += draw;
    const Eigen::VectorXd dh = draw * p.readout_weights + dh_next;
    const Eigen::VectorXd dc =
        (dh.array() * og.array() * (1.0 - tc.array().square())).matrix() + dc_next;
    dz.segment(0, H) = (dc.array() * cand.array() * in.array() * (1.0 - in.array())).matrix();
    dz.segment(H, H) = (dc.array() * c_prev.array() * fg.array() * (1.0 - fg.array())).matrix();
    dz.segment(2 * H, H) = (dh.array() * tc.array() * og.array() * (1.0 - og.array())).matrix();
    dz.segment(3 * H, H) = (dc.array() * in.array() * (1.0 - cand.array().square())).matrix();

    g.input_weights.noalias() += dz * x.row(t);
    g.recurrent_weights.noalias() += dz * h_prev.transpose();
    g.gate_bias += dz;
    dh_next.noalias() = p.recurrent_weights.transpose() * dz;
    dc_next = dc.cwiseProduct(fg);
  }
}

double log_target(double target) {
  if (!(target > 0) || !std::isfinite(target)) {
    throw Error("value model targets must be positive, got " + std::to_string(target));
  }
  return std::log(target);
}

void add_into(ParamGradients& acc, const ParamGradients& g) {
  acc.input_weights += g.input_weights;
  acc.recurrent_weights += g.recurrent_weights;
  acc.gate_bias += g.gate_bias;
  acc.readout_weights += g.readout_weights;
  acc.readout_bias += g.readout_bias;
}

// Mean-loss gradient over normalized sequences; per-sample gradients are
// summed in index order.
ParamGradients batch_gradients(const ValueModelParams& p, std::span<const FeatureMatrix* const> xs,
                               std::span<const double> log_targets, int jobs) {
  const size_t n = xs.size();
  std::vector<ParamGradients> per(n);
  parallel_for(n, jobs, [&](size_t i) {
    Trace tr;
    const double raw = forward(p, *xs[i], &tr);
    const double draw = 2.0 * (raw + p.target_scale - log_targets[i]) / static_cast<double>(n);
    per[i] = ParamGradients::zeros(p.hidden);
    backward(p, *xs[i], tr, draw, per[i]);
  });
  ParamGradients total = ParamGradients::zeros(p.hidden);
  for (const auto& g : per) add_into(total, g);
  return total;
}

double mse(const ValueModelParams& p, const std::vector<FeatureMatrix>& xs, const std::vector<double>& lt,
           const std::vector<size_t>& idx) {
  if (idx.empty()) return 0;
  double s = 0;
  for (size_t i : idx) {
    const double e = forward(p, xs[i], nullptr) + p.target_scale - lt[i];
    s += e * e;
  }
  return s / static_cast<double>(idx.size());
}

}  // namespace

std::vector<ParamGroup> trainable_groups(ValueModelParams& params) { return groups_of(params); }
std::vector<ParamGroup> trainable_groups(ParamGradients& grads) { return groups_of(grads); }

ValueModelParams init_params(uint64_t seed, int hidden) {
  if (hidden < 1) throw Error("init_params: hidden size must be >= 1");
  ValueModelParams p;
  p.hidden = hidden;
  SearchRng rng(seed);
  const double bound = 1.0 / std::sqrt(static_cast<double>(hidden));
  auto fill = [&](auto& m) {
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-bound, bound);
  };
  p.input_weights.resize(4 * hidden, kFeatureWidth);
  p.recurrent_weights.resize(4 * hidden, hidden);
  p.gate_bias.resize(4 * hidden);
  p.readout_weights.resize(hidden);
  fill(p.input_weights);
  fill(p.recurrent_weights);
  fill(p.gate_bias);
  fill(p.readout_weights);
  p.readout_bias = rng.uniform(-bound, bound);
  p.gate_bias.segment(hidden, hidden).setOnes();
  return p;
}

double predict_log_normalized(const ValueModelParams& params, const FeatureMatrix& normalized) {
  return forward(params, normalized, nullptr) + params.target_scale;
}

double predict_features(const ValueModelParams& params, const FeatureMatrix& raw) {
  return std::exp(predict_log_normalized(params, normalize(params.normalizer, raw)));
}

double predict(const ValueModelParams& params, const ScheduleState& state, const MachineModel& machine) {
  return predict_features(params, featurize_state(state, machine));
}

double loss(const ValueModelParams& params, std::span<const Sample> batch) {
  if (batch.empty()) throw Error("loss: empty batch");
  double s = 0;
  for (const auto& smp : batch) {
    const double e = predict_log_normalized(params, normalize(params.normalizer, smp.features)) - log_target(smp.target);
    s += e * e;
  }
  return s / static_cast<double>(batch.size());
}

ParamGradients gradients(const ValueModelParams& params, std::span<const Sample> batch, int jobs) {
  if (batch.empty()) throw Error("gradients: empty batch");
  std::vector<FeatureMatrix> xs;
  std::vector<double> lt;
  for (const auto& smp : batch) {
    xs.push_back(normalize(params.normalizer, smp.features));
    lt.push_back(log_target(smp.target));
  }
  std::vector<const FeatureMatrix*> ptrs;
  for (const auto& x : xs) ptrs.push_back(&x);
  return batch_gradients(params, ptrs, lt, jobs);
}

void TrainConfig::check() const {
  if (!(learning_rate > 0) || epochs < 1 || batch_size < 1 || !(clip_norm > 0) || patience < 1 || jobs < 1) {
    throw Error("train config values must be positive");
  }
  if (!(holdout_fraction > 0 && holdout_fraction < 1)) throw Error("holdout fraction must be in (0, 1)");
}

TrainResult train(const ValueModelParams& init, const std::vector<Sample>& dataset, const TrainConfig& cfg) {
  cfg.check();
  const size_t n = dataset.size();
  if (n < 10) throw Error("train: dataset has " + std::to_string(n) + " samples, need at least 10");

  SearchRng rng(cfg.seed);
  std::vector<size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  for (size_t i = n - 1; i > 0; --i) std::swap(perm[i], perm[rng.below(i + 1)]);
  size_t n_hold = static_cast<size_t>(std::llround(cfg.holdout_fraction * static_cast<double>(n)));
  n_hold = std::clamp<size_t>(n_hold, 1, n - 1);
  std::vector<size_t> train_idx(perm.begin(), perm.end() - static_cast<std::ptrdiff_t>(n_hold));
  std::vector<size_t> hold_idx(perm.end() - static_cast<std::ptrdiff_t>(n_hold), perm.end());
  std::sort(train_idx.begin(), train_idx.end());
  std::sort(hold_idx.begin(), hold_idx.end());

  ValueModelParams p = init;
  std::vector<FeatureMatrix> train_raw;
  double mean_lt = 0;
  std::vector<double> lt(n);
  for (size_t i = 0; i < n; ++i) lt[i] = log_target(dataset[i].target);
  for (size_t i : train_idx) {
    train_raw.push_back(dataset[i].features);
    mean_lt += lt[i];
  }
  p.normalizer = fit_normalizer(train_raw);
  p.target_scale = mean_lt / static_cast<double>(train_idx.size());
  std::vector<FeatureMatrix> xs(n);
  for (size_t i = 0; i < n; ++i) xs[i] = normalize(p.normalizer, dataset[i].features);

  TrainResult result;
  result.metrics.train_size = train_idx.size();
  result.metrics.holdout_size = hold_idx.size();
  result.metrics.initial_train_mse = mse(p, xs, lt, train_idx);

  ValueModelParams best = p;
  double best_hold = mse(p, xs, lt, hold_idx);
  int since_best = 0;
  std::vector<size_t> order = train_idx;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    SearchRng erng = rng.derive(static_cast<uint64_t>(epoch));
    for (size_t i = order.size() - 1; i > 0; --i) std::swap(order[i], order[erng.below(i + 1)]);
    for (size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const size_t end = std::min(order.size(), start + static_cast<size_t>(cfg.batch_size));
      std::vector<const FeatureMatrix*> bx;
      std::vector<double> bt;
      for (size_t k = start; k < end; ++k) {
        bx.push_back(&xs[order[k]]);
        bt.push_back(lt[order[k]]);
      }
      ParamGradients g = batch_gradients(p, bx, bt, cfg.jobs);
      const double norm = g.norm();
      const double scale = norm > cfg.clip_norm ? cfg.clip_norm / norm : 1.0;
      const double step = cfg.learning_rate * scale;
      p.input_weights -= step * g.input_weights;
      p.recurrent_weights -= step * g.recurrent_weights;
      p.gate_bias -= step * g.gate_bias;
      p.readout_weights -= step * g.readout_weights;
      p.readout_bias -= step * g.readout_bias;
    }
    result.metrics.epochs_run = epoch;
    const double hold = mse(p, xs, lt, hold_idx);
    if (hold < best_hold) {
      best_hold = hold;
      best = p;
      result.metrics.best_epoch = epoch;
      since_best = 0;
    } else if (++since_best >= cfg.patience) {
      break;
    }
  }

  result.params = best;
  result.metrics.train_mse = mse(best, xs, lt, train_idx);
  result.metrics.holdout_mse = best_hold;
  double hold_mean = 0;
  for (size_t i : hold_idx) hold_mean += lt[i];
  hold_mean /= static_cast<double>(hold_idx.size());
  double ss_tot = 0;
  std::vector<double> rel;
  for (size_t i : hold_idx) {
    ss_tot += (lt[i] - hold_mean) * (lt[i] - hold_mean);
    const double pred = std::exp(predict_log_normalized(best, xs[i]));
    rel.push_back(std::abs(pred - dataset[i].target) / dataset[i].target);
  }
  const double ss_res = best_hold * static_cast<double>(hold_idx.size());
  result.metrics.holdout_r2 = ss_tot > 0 ? 1.0 - ss_res / ss_tot : (ss_res == 0 ? 1.0 : 0.0);
  std::sort(rel.begin(), rel.end());
  const size_t m = rel.size();
  result.metrics.median_relative_error = m % 2 ? rel[m / 2] : 0.5 * (rel[m / 2 - 1] + rel[m / 2]);
  return result;
}

// --- checkpoints -----------------------------------------------------------

namespace {

constexpr char kMagic[8] = {'V', 'S', 'C', 'H', 'E', 'D', 'V', 'M'};

class Writer {
 public:
  void u32(uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
  }
  void u64(uint64_t v) {
    for (int i = 0; i < 8; ++i) out_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
  }
  void f64(double v) { u64(std::bit_cast<uint64_t>(v)); }
  template <typename M>
  void matrix(const M& m) {  // row-major
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) f64(m(r, c));
    }
  }
  void raw(const char* p, size_t n) { out_.append(p, n); }
  std::string& bytes() { return out_; }

 private:
  std::string out_;
};

class Reader {
 public:
  explicit Reader(std::string_view in) : in_(in) {}
  uint64_t uint(int width) {
    if (pos_ + width > in_.size()) throw CheckpointError("corrupt checkpoint: truncated");
    uint64_t v = 0;
    for (int i = 0; i < width; ++i) v |= static_cast<uint64_t>(static_cast<unsigned char>(in_[pos_ + i])) << (8 * i);
    pos_ += width;
    return v;
  }
  double f64() { return std::bit_cast<double>(uint(8)); }
  template <typename M>
  void matrix(M& m) {
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = f64();
    }
  }
  size_t pos() const { return pos_; }

 private:
  std::string_view in_;
  size_t pos_ = 0;
};

uint64_t fnv1a(std::string_view bytes) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

std::string serialize_params(const ValueModelParams& p) {
  Writer w;
  w.raw(kMagic, sizeof(kMagic));
  w.u32(kCheckpointVersion);
  w.u32(kFeatureWidth);
  w.u32(static_cast<uint32_t>(p.hidden));
  w.matrix(p.input_weights);
  w.matrix(p.recurrent_weights);
  w.matrix(p.gate_bias);
  w.matrix(p.readout_weights);
  w.f64(p.readout_bias);
  w.f64(p.target_scale);
  w.matrix(p.normalizer.mean);
  w.matrix(p.normalizer.stddev);
  w.u64(fnv1a(w.bytes()));
  return std::move(w.bytes());
}

ValueModelParams deserialize_params(std::string_view bytes) {
  if (bytes.size() < sizeof(kMagic) + 12 || std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) {
    throw CheckpointError("corrupt checkpoint: bad magic or truncated header");
  }
  Reader r(bytes.substr(sizeof(kMagic)));
  const uint32_t version = static_cast<uint32_t>(r.uint(4));
  if (version != kCheckpointVersion) {
    throw CheckpointError("checkpoint version mismatch: file has " + std::to_string(version) + ", expected " +
                          std::to_string(kCheckpointVersion));
  }
  const uint32_t input_dim = static_cast<uint32_t>(r.uint(4));
  if (input_dim != kFeatureWidth) {
    throw CheckpointError("checkpoint feature width " + std::to_string(input_dim) + " does not match " +
                          std::to_string(kFeatureWidth));
  }
  const uint32_t hidden = static_cast<uint32_t>(r.uint(4));
  if (hidden < 1 || hidden > 4096) throw CheckpointError("corrupt checkpoint: hidden size " + std::to_string(hidden));
  const size_t H = hidden;
  const size_t expected = sizeof(kMagic) + 12 + 8 * (4 * H * kFeatureWidth + 4 * H * H + 4 * H + H + 2 + 2 * kFeatureWidth) + 8;
  if (bytes.size() != expected) {
    throw CheckpointError("corrupt checkpoint: " + std::to_string(bytes.size()) + " bytes, expected " +
                          std::to_string(expected));
  }
  ValueModelParams p;
  p.hidden = static_cast<int>(hidden);
  p.input_weights.resize(4 * H, kFeatureWidth);
  p.recurrent_weights.resize(4 * H, H);
  p.gate_bias.resize(4 * H);
  p.readout_weights.resize(H);
  r.matrix(p.input_weights);
  r.matrix(p.recurrent_weights);
  r.matrix(p.gate_bias);
  r.matrix(p.readout_weights);
  p.readout_bias = r.f64();
  p.target_scale = r.f64();
  r.matrix(p.normalizer.mean);
  r.matrix(p.normalizer.stddev);
  const size_t body = sizeof(kMagic) + r.pos();
  const uint64_t checksum = r.uint(8);
  if (checksum != fnv1a(bytes.substr(0, body))) throw CheckpointError("corrupt checkpoint: checksum mismatch");
  return p;
}

void save_params(const ValueModelParams& params, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write checkpoint '" + path.string() + "'");
  const std::string bytes = serialize_params(params);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("failed writing checkpoint '" + path.string() + "'");
}

ValueModelParams load_params(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return deserialize_params(ss.str());
}

}  // namespace valsched
