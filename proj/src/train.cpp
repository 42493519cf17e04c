// Copyright 2026 The Looking Authors
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

#include "looking/train.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "looking/metrics.hpp"

namespace looking
{

namespace
{
constexpr std::uint64_t kShuffleStream = 2;
constexpr std::uint64_t kDropoutStream = 3;
constexpr Eigen::Index kEvalChunk = 512;
}  // namespace

void TrainConfig::validate() const
{
  if (!(learning_rate > 0.0)) {
    throw std::invalid_argument("learning rate must be positive");
  }
  if (batch_size < 2) {
    throw std::invalid_argument("batch size must be at least 2");
  }
  if (epochs < 1) {
    throw std::invalid_argument("epochs must be at least 1");
  }
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0) || !(adam_beta2 >= 0.0 && adam_beta2 < 1.0)) {
    throw std::invalid_argument("Adam betas must be in [0, 1)");
  }
  if (!(adam_eps > 0.0)) {
    throw std::invalid_argument("Adam eps must be positive");
  }
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) {
    throw std::invalid_argument("dropout rate must be in [0, 1)");
  }
}

AdamState make_adam_state(const NetworkParams & params)
{
  AdamState state;
  for_each_trainable(params, [&](const std::string &, std::span<const double> values) {
    state.m.emplace_back(values.size(), 0.0);
    state.v.emplace_back(values.size(), 0.0);
  });
  return state;
}

void adam_step(NetworkParams & params, const Gradients & grads, AdamState & state, const TrainConfig & cfg)
{
  std::vector<std::span<const double>> g;
  for_each_trainable(grads, [&](const std::string &, std::span<const double> values) { g.push_back(values); });

  state.t += 1;
  const double b1 = cfg.adam_beta1;
  const double b2 = cfg.adam_beta2;
  const double correction1 = 1.0 - std::pow(b1, static_cast<double>(state.t));
  const double correction2 = 1.0 - std::pow(b2, static_cast<double>(state.t));

  std::size_t k = 0;
  for_each_trainable(params, [&](const std::string & name, std::span<double> theta) {
    if (k >= g.size() || g[k].size() != theta.size() || state.m[k].size() != theta.size()) {
      throw std::invalid_argument("adam_step: shape mismatch at " + name);
    }
    auto & m = state.m[k];
    auto & v = state.v[k];
    const auto & grad = g[k];
    for (std::size_t i = 0; i < theta.size(); ++i) {
      m[i] = b1 * m[i] + (1.0 - b1) * grad[i];
      v[i] = b2 * v[i] + (1.0 - b2) * grad[i] * grad[i];
      const double m_hat = m[i] / correction1;
      const double v_hat = v[i] / correction2;
      theta[i] -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.adam_eps);
    }
    ++k;
  });
}

std::vector<TrainSample> samples_from_records(
  std::span<const ImageRecord> records, Split split, KeypointSubset subset)
{
  std::vector<TrainSample> out;
  for (const auto & rec : records) {
    if (rec.split != split) {
      continue;
    }
    for (const auto & inst : rec.instances) {
      const auto y = binary_label(inst.label);
      if (!y || !inst.pose) {
        continue;
      }
      out.push_back(TrainSample{pose_features(*inst.pose, rec.width, subset).values, *y});
    }
  }
  return out;
}

Matrix stack_features(std::span<const TrainSample> samples)
{
  if (samples.empty()) {
    return Matrix();
  }
  const auto width = static_cast<Eigen::Index>(samples.front().x.size());
  Matrix m(static_cast<Eigen::Index>(samples.size()), width);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (static_cast<Eigen::Index>(samples[i].x.size()) != width) {
      throw std::invalid_argument("samples have inconsistent feature widths");
    }
    m.row(static_cast<Eigen::Index>(i)) = Eigen::Map<const Eigen::RowVectorXd>(samples[i].x.data(), width);
  }
  return m;
}

Vector predict_probs(const NetworkParams & params, const Matrix & features)
{
  Vector out(features.rows());
  for (Eigen::Index start = 0; start < features.rows(); start += kEvalChunk) {
    const Eigen::Index n = std::min(kEvalChunk, features.rows() - start);
    out.segment(start, n) = forward_eval(params, features.middleRows(start, n));
  }
  return out;
}

namespace
{

std::optional<double> validation_ap(const NetworkParams & params, std::span<const TrainSample> val)
{
  if (val.empty()) {
    return std::nullopt;
  }
  std::vector<int> labels;
  for (const auto & s : val) {
    labels.push_back(s.y);
  }
  const auto positives = std::count(labels.begin(), labels.end(), 1);
  if (positives == 0 || static_cast<std::size_t>(positives) == labels.size()) {
    return std::nullopt;
  }
  const Vector probs = predict_probs(params, stack_features(val));
  return average_precision(std::span<const double>(probs.data(), static_cast<std::size_t>(probs.size())), labels);
}

void check_dataset(std::span<const TrainSample> dataset, std::size_t width, const char * what)
{
  for (const auto & s : dataset) {
    if (s.x.size() != width) {
      throw std::invalid_argument(
        std::string(what) + " sample has " + std::to_string(s.x.size()) + " features, expected " +
        std::to_string(width));
    }
    if (s.y != 0 && s.y != 1) {
      throw std::invalid_argument(std::string(what) + " labels must be 0 or 1");
    }
  }
}

}  // namespace

TrainResult train(std::span<const TrainSample> dataset, std::span<const TrainSample> val, const TrainConfig & cfg)
{
  cfg.validate();
  if (dataset.empty()) {
    throw std::invalid_argument("training set is empty");
  }
  const auto positives = std::count_if(dataset.begin(), dataset.end(), [](const auto & s) { return s.y == 1; });
  if (positives == 0 || static_cast<std::size_t>(positives) == dataset.size()) {
    throw std::invalid_argument("training set must contain both classes");
  }
  NetworkArch arch = NetworkArch::for_subset(cfg.subset);
  arch.dropout_rate = cfg.dropout_rate;
  check_dataset(dataset, arch.input_dim, "training");
  check_dataset(val, arch.input_dim, "validation");

  TrainResult result;
  result.checkpoint.subset = cfg.subset;
  NetworkParams & params = result.checkpoint.params;
  params = init_network(arch, cfg.seed);
  AdamState adam = make_adam_state(params);
  Rng shuffle_rng(derive_seed(cfg.seed, kShuffleStream));
  Rng dropout_rng(derive_seed(cfg.seed, kDropoutStream));

  const Matrix features = stack_features(dataset);
  Vector labels(static_cast<Eigen::Index>(dataset.size()));
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    labels(static_cast<Eigen::Index>(i)) = dataset[i].y;
  }

  std::vector<Eigen::Index> order(dataset.size());
  std::iota(order.begin(), order.end(), 0);
  const auto start_time = std::chrono::steady_clock::now();

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    shuffle_rng.shuffle(std::span(order));
    double loss_sum = 0.0;
    std::size_t seen = 0;
    for (std::size_t begin = 0; begin < order.size(); begin += cfg.batch_size) {
      const std::size_t n = std::min(cfg.batch_size, order.size() - begin);
      if (n < 2) {
        continue;  // batch statistics need two samples
      }
      Matrix batch(static_cast<Eigen::Index>(n), features.cols());
      Vector y(static_cast<Eigen::Index>(n));
      for (std::size_t i = 0; i < n; ++i) {
        batch.row(static_cast<Eigen::Index>(i)) = features.row(order[begin + i]);
        y(static_cast<Eigen::Index>(i)) = labels(order[begin + i]);
      }
      const ForwardResult fwd = forward_train(params, batch, dropout_rng);
      loss_sum += bce_loss(fwd.probs, y) * static_cast<double>(n);
      seen += n;
      const Gradients grads = backward(params, *fwd.cache, y);
      adam_step(params, grads, adam, cfg);
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = seen > 0 ? loss_sum / static_cast<double>(seen) : 0.0;
    rec.val_ap = validation_ap(params, val);
    if (cfg.log_saliency) {
      rec.saliency = saliency(result.checkpoint, dataset);
    }
    rec.elapsed_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start_time).count();
    spdlog::info(
      "epoch {}/{} train_loss={:.6f} val_ap={}", epoch, cfg.epochs, rec.train_loss,
      rec.val_ap ? std::to_string(*rec.val_ap) : std::string("n/a"));
    result.history.push_back(std::move(rec));
  }
  return result;
}

SaliencyReport saliency(const Checkpoint & checkpoint, std::span<const TrainSample> dataset)
{
  if (dataset.empty()) {
    throw std::invalid_argument("saliency needs a non-empty dataset");
  }
  const NetworkParams & params = checkpoint.params;
  const std::size_t width = params.arch.input_dim;
  if (width != subset_width(checkpoint.subset)) {
    throw std::invalid_argument("checkpoint input width does not match its subset");
  }
  check_dataset(dataset, width, "saliency");

  const std::size_t k = width / 3;
  std::vector<double> sums(k, 0.0);
  const Matrix features = stack_features(dataset);
  for (Eigen::Index start = 0; start < features.rows(); start += kEvalChunk) {
    const Eigen::Index n = std::min(kEvalChunk, features.rows() - start);
    Vector y(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      y(i) = dataset[static_cast<std::size_t>(start + i)].y;
    }
    const ForwardResult fwd = forward_eval_cached(params, features.middleRows(start, n));
    const Matrix grad = input_gradient(params, *fwd.cache, y);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (std::size_t kp = 0; kp < k; ++kp) {
        const auto c = static_cast<Eigen::Index>(3 * kp);
        sums[kp] += std::abs(grad(i, c)) + std::abs(grad(i, c + 1)) + std::abs(grad(i, c + 2));
      }
    }
  }

  SaliencyReport report;
  const std::size_t offset = subset_offset(checkpoint.subset);
  const double n = static_cast<double>(dataset.size());
  for (std::size_t kp = 0; kp < k; ++kp) {
    report.keypoint_names.emplace_back(kKeypointNames[offset + kp]);
    report.impact.push_back(sums[kp] / n);
  }
  const double max_impact = *std::max_element(report.impact.begin(), report.impact.end());
  for (const double v : report.impact) {
    report.impact_normalized.push_back(max_impact > 0.0 ? v / max_impact : 0.0);
  }
  return report;
}

}  // namespace looking
