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

#ifndef LOOKING__TRAIN_HPP_
#define LOOKING__TRAIN_HPP_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "looking/checkpoint.hpp"
#include "looking/dataset.hpp"
#include "looking/net.hpp"

namespace looking
{

struct TrainConfig
{
  double learning_rate{1e-4};
  std::size_t batch_size{64};
  std::size_t epochs{20};
  double adam_beta1{0.9};
  double adam_beta2{0.999};
  double adam_eps{1e-8};
  std::uint64_t seed{0};
  KeypointSubset subset{KeypointSubset::Full};
  double dropout_rate{0.2};
  /// Compute a saliency report on the training set after every epoch.
  bool log_saliency{false};

  void validate() const;
};

struct AdamState
{
  std::vector<std::vector<double>> m;  ///< first moments, one per trainable tensor
  std::vector<std::vector<double>> v;  ///< second moments
  std::uint64_t t{0};
};

AdamState make_adam_state(const NetworkParams & params);

/// One bias-corrected Adam update of every trainable tensor.
void adam_step(NetworkParams & params, const Gradients & grads, AdamState & state, const TrainConfig & cfg);

struct TrainSample
{
  std::vector<double> x;
  int y{0};
};

/// Labeled (looking / not looking) instances with a pose from one split.
std::vector<TrainSample> samples_from_records(
  std::span<const ImageRecord> records, Split split, KeypointSubset subset);

/// Stacks sample features into a B x D matrix.
Matrix stack_features(std::span<const TrainSample> samples);

struct SaliencyReport
{
  std::vector<std::string> keypoint_names;
  std::vector<double> impact;             ///< mean absolute input gradient summed over (x, y, c)
  std::vector<double> impact_normalized;  ///< impact / max(impact), zeros if all zero
};

struct EpochRecord
{
  std::size_t epoch{0};  ///< 1-based
  double train_loss{0.0};
  std::optional<double> val_ap;
  double elapsed_ms{0.0};
  std::optional<SaliencyReport> saliency;
};

struct TrainResult
{
  Checkpoint checkpoint;
  std::vector<EpochRecord> history;
};

/// Mini-batch Adam on mean BCE. Deterministic in cfg.seed. A final batch
/// shorter than 2 samples is dropped. Returns the final-epoch parameters.
TrainResult train(std::span<const TrainSample> dataset, std::span<const TrainSample> val, const TrainConfig & cfg);

/// Per-keypoint impact: (1/N) sum_j |dL/dk_x| + |dL/dk_y| + |dL/dk_c| with the
/// per-sample loss, network in Eval mode.
SaliencyReport saliency(const Checkpoint & checkpoint, std::span<const TrainSample> dataset);

/// Eval-mode probabilities for a feature matrix, computed in fixed-size chunks.
Vector predict_probs(const NetworkParams & params, const Matrix & features);

}  // namespace looking

#endif  // LOOKING__TRAIN_HPP_
