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


#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "looking/checkpoint.hpp"
#include "looking/metrics.hpp"
#include "looking/synth.hpp"
#include "looking/train.hpp"
#include "oracles.hpp"

namespace looking
{
namespace
{

/// Tiny network so single tensors are easy to inspect.
NetworkParams tiny_params()
{
  NetworkArch arch;
  arch.input_dim = 3;
  arch.hidden_dim = 2;
  arch.n_residual_blocks = 1;
  return init_network(arch, 1);
}

/// Sets every gradient component to zero except head.bias, set to g.
Gradients head_bias_gradient(const NetworkParams & params, double g)
{
  Gradients grads = zero_gradients(params.arch);
  grads.head.bias(0) = g;
  return grads;
}

/// Gaussian features with labels from a fixed hyperplane, keeping a margin.
std::vector<TrainSample> separable_set(std::size_t n, std::uint64_t seed, std::size_t width = 51, double margin = 0.3)
{
  Rng rng(seed);
  std::vector<TrainSample> out;
  while (out.size() < n) {
    TrainSample s;
    s.x.resize(width);
    for (auto & v : s.x) {
      v = rng.normal();
    }
    const double d = s.x[0] + 0.5 * s.x[1] - 0.25 * s.x[2];
    if (std::abs(d) < margin) {
      continue;
    }
    s.y = d > 0 ? 1 : 0;
    out.push_back(std::move(s));
  }
  return out;
}

TEST(TrainConfigTest, DefaultsFollowPaperSchedule)
{
  const TrainConfig cfg;
  EXPECT_EQ(cfg.learning_rate, 1e-4);
  EXPECT_EQ(cfg.batch_size, 64U);
  EXPECT_EQ(cfg.epochs, 20U);
  EXPECT_EQ(cfg.adam_beta1, 0.9);
  EXPECT_EQ(cfg.adam_beta2, 0.999);
  EXPECT_EQ(cfg.adam_eps, 1e-8);
  EXPECT_NO_THROW(cfg.validate());
}

TEST(TrainConfigTest, ValidateRejectsBadValues)
{
  TrainConfig cfg;
  cfg.learning_rate = 0.0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = TrainConfig{};
  cfg.batch_size = 1;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = TrainConfig{};
  cfg.epochs = 0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
}

TEST(AdamTest, ZeroGradientFromZeroStateIsFixedPoint)
{
  NetworkParams params = tiny_params();
  const NetworkParams before = params;
  AdamState state = make_adam_state(params);
  adam_step(params, zero_gradients(params.arch), state, TrainConfig{});
  EXPECT_EQ(state.t, 1U);
  EXPECT_EQ(params.stem.fc.weight, before.stem.fc.weight);
  EXPECT_EQ(params.blocks[0].second.bn.gamma, before.blocks[0].second.bn.gamma);
  EXPECT_EQ(params.head.bias, before.head.bias);
}

TEST(AdamTest, ZeroGradientWithZeroMomentsAtAnyStep)
{
  NetworkParams params = tiny_params();
  const NetworkParams before = params;
  AdamState state = make_adam_state(params);
  state.t = 57;
  adam_step(params, zero_gradients(params.arch), state, TrainConfig{});
  EXPECT_EQ(state.t, 58U);
  EXPECT_EQ(params.head.weight, before.head.weight);
  EXPECT_EQ(params.stem.fc.weight, before.stem.fc.weight);
}

TEST(AdamTest, FirstStepMovesByLearningRate)
{
  NetworkParams params = tiny_params();
  const double start = params.head.bias(0);
  AdamState state = make_adam_state(params);
  adam_step(params, head_bias_gradient(params, 0.3), state, TrainConfig{});
  EXPECT_NEAR(params.head.bias(0) - start, -1e-4 * 0.3 / (0.3 + 1e-8), 1e-18);
  EXPECT_NEAR(params.head.bias(0) - start, -1e-4, 1e-11);
  for (const auto & m : state.v) {
    for (const double v : m) {
      EXPECT_GE(v, 0.0);
    }
  }
}

TEST(AdamTest, ConstantGradientMatchesHandIteratedRecurrence)
{
  NetworkParams params = tiny_params();
  AdamState state = make_adam_state(params);
  const TrainConfig cfg;
  const double g = 0.1;
  double theta = params.head.bias(0);
  double m = 0.0;
  double v = 0.0;
  for (int t = 1; t <= 2; ++t) {
    m = cfg.adam_beta1 * m + (1.0 - cfg.adam_beta1) * g;
    v = cfg.adam_beta2 * v + (1.0 - cfg.adam_beta2) * g * g;
    const double m_hat = m / (1.0 - std::pow(cfg.adam_beta1, t));
    const double v_hat = v / (1.0 - std::pow(cfg.adam_beta2, t));
    const double expected = theta - cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.adam_eps);
    const double previous = params.head.bias(0);
    adam_step(params, head_bias_gradient(params, g), state, cfg);
    EXPECT_NEAR(params.head.bias(0), expected, 1e-15);
    EXPECT_LT(params.head.bias(0), previous);
    EXPECT_NEAR(previous - params.head.bias(0), 1e-4, 1e-9);
    theta = expected;
  }
}

TEST(AdamTest, RejectsShapeMismatch)
{
  NetworkParams params = tiny_params();
  AdamState state = make_adam_state(params);
  NetworkArch other = params.arch;
  other.hidden_dim = 3;
  EXPECT_THROW(adam_step(params, zero_gradients(other), state, TrainConfig{}), std::invalid_argument);
}

TEST(SamplesTest, OnlyLabeledInstancesWithPoseFromSplit)
{
  SynthConfig sc;
  sc.n_images = 20;
  auto records = synth_generate(sc);
  records[0].split = Split::Train;
  records[0].instances[0].label = Label::Ambiguous;
  records[0].instances.push_back(records[0].instances[0]);
  records[0].instances.back().label = Label::Looking;
  records[0].instances.back().pose.reset();
  records[0].instances.back().match_iou.reset();

  std::size_t expected = 0;
  for (const auto & r : records) {
    if (r.split != Split::Train) {
      continue;
    }
    for (const auto & inst : r.instances) {
      expected += (inst.pose && binary_label(inst.label)) ? 1 : 0;
    }
  }
  const auto samples = samples_from_records(records, Split::Train, KeypointSubset::Head);
  EXPECT_EQ(samples.size(), expected);
  for (const auto & s : samples) {
    EXPECT_EQ(s.x.size(), 15U);
  }
  const Matrix m = stack_features(samples);
  EXPECT_EQ(m.rows(), static_cast<Eigen::Index>(samples.size()));
  EXPECT_EQ(m(0, 0), samples[0].x[0]);
}

TEST(TrainTest, RejectsEmptyOrSingleClassData)
{
  TrainConfig cfg;
  cfg.epochs = 1;
  EXPECT_THROW(train({}, {}, cfg), std::invalid_argument);
  auto data = separable_set(10, 1);
  for (auto & s : data) {
    s.y = 1;
  }
  EXPECT_THROW(train(data, {}, cfg), std::invalid_argument);
  auto narrow = separable_set(10, 1, 15);
  EXPECT_THROW(train(narrow, {}, cfg), std::invalid_argument);
}

TEST(TrainTest, DeterministicInSeed)
{
  const auto data = separable_set(130, 3);
  const auto val = separable_set(40, 4);
  TrainConfig cfg;
  cfg.epochs = 2;
  cfg.seed = 5;
  const TrainResult a = train(data, val, cfg);
  const TrainResult b = train(data, val, cfg);
  EXPECT_EQ(checkpoint_to_json(a.checkpoint).dump(), checkpoint_to_json(b.checkpoint).dump());
  ASSERT_EQ(a.history.size(), 2U);
  for (std::size_t i = 0; i < a.history.size(); ++i) {
    EXPECT_EQ(a.history[i].train_loss, b.history[i].train_loss);
    EXPECT_EQ(a.history[i].val_ap, b.history[i].val_ap);
    EXPECT_TRUE(std::isfinite(a.history[i].train_loss));
  }
  cfg.seed = 6;
  const TrainResult c = train(data, val, cfg);
  EXPECT_NE(checkpoint_to_json(a.checkpoint).dump(), checkpoint_to_json(c.checkpoint).dump());
}

TEST(TrainTest, ShortFinalBatchOfOneIsDropped)
{
  // 129 samples with batch 64: the trailing single sample cannot form a batch
  const auto data = separable_set(129, 8);
  TrainConfig cfg;
  cfg.epochs = 1;
  EXPECT_NO_THROW(train(data, {}, cfg));
}

TEST(TrainTest, SeparableSetReachesLowLossAndHighValAp)
{
  const auto data = separable_set(2000, 21, 51, 1.0);
  const auto val = separable_set(300, 22, 51, 1.0);
  TrainConfig cfg;
  cfg.log_saliency = false;
  const TrainResult r = train(data, val, cfg);
  ASSERT_EQ(r.history.size(), 20U);
  for (const auto & h : r.history) {
    EXPECT_TRUE(std::isfinite(h.train_loss));
  }
  EXPECT_LT(r.history.back().train_loss, 0.1 * std::log(2.0));
  ASSERT_TRUE(r.history.back().val_ap.has_value());
  EXPECT_GE(*r.history.back().val_ap, 0.95);
  EXPECT_EQ(r.checkpoint.subset, KeypointSubset::Full);
}

TEST(TrainTest, PerEpochSaliencyLogging)
{
  const auto data = separable_set(70, 9);
  TrainConfig cfg;
  cfg.epochs = 2;
  cfg.log_saliency = true;
  const TrainResult r = train(data, {}, cfg);
  for (const auto & h : r.history) {
    ASSERT_TRUE(h.saliency.has_value());
    EXPECT_EQ(h.saliency->impact.size(), 17U);
    EXPECT_FALSE(h.val_ap.has_value());
  }
}

TEST(SaliencyTest, ZeroStemGivesZeroImpact)
{
  Checkpoint ckpt;
  ckpt.params = init_network(NetworkArch{}, 3);
  ckpt.params.stem.fc.weight.setZero();
  const SaliencyReport r = saliency(ckpt, separable_set(20, 2));
  ASSERT_EQ(r.impact.size(), 17U);
  for (std::size_t k = 0; k < 17; ++k) {
    EXPECT_EQ(r.impact[k], 0.0);
    EXPECT_EQ(r.impact_normalized[k], 0.0);
  }
  EXPECT_EQ(r.keypoint_names.front(), "nose");
}

TEST(SaliencyTest, NonNegativeAndMaxNormalized)
{
  Checkpoint ckpt;
  ckpt.params = testing::random_params(NetworkArch{}, 4);
  const SaliencyReport r = saliency(ckpt, separable_set(600, 5));
  double max_norm = 0.0;
  for (std::size_t k = 0; k < r.impact.size(); ++k) {
    EXPECT_GE(r.impact[k], 0.0);
    max_norm = std::max(max_norm, r.impact_normalized[k]);
  }
  EXPECT_EQ(max_norm, 1.0);
}

TEST(SaliencyTest, SubsetNamesAndWidthCheck)
{
  Checkpoint ckpt;
  ckpt.subset = KeypointSubset::Body;
  ckpt.params = init_network(NetworkArch::for_subset(KeypointSubset::Body), 1);
  const SaliencyReport r = saliency(ckpt, separable_set(5, 1, 36));
  ASSERT_EQ(r.keypoint_names.size(), 12U);
  EXPECT_EQ(r.keypoint_names.front(), "left_shoulder");
  EXPECT_THROW(saliency(ckpt, separable_set(5, 1, 51)), std::invalid_argument);
  EXPECT_THROW(saliency(ckpt, {}), std::invalid_argument);
}

TEST(SaliencyTest, PermutationEquivariance)
{
  Checkpoint ckpt;
  ckpt.params = testing::random_params(NetworkArch{}, 6);
  const auto data = separable_set(50, 7);

  std::vector<std::size_t> perm(17);
  std::iota(perm.begin(), perm.end(), 0);
  Rng rng(8);
  rng.shuffle(std::span(perm));

  Checkpoint permuted = ckpt;
  std::vector<TrainSample> permuted_data = data;
  for (std::size_t k = 0; k < 17; ++k) {
    for (std::size_t j = 0; j < 3; ++j) {
      const auto from = static_cast<Eigen::Index>(3 * k + j);
      const auto to = static_cast<Eigen::Index>(3 * perm[k] + j);
      permuted.params.stem.fc.weight.col(to) = ckpt.params.stem.fc.weight.col(from);
      for (std::size_t i = 0; i < data.size(); ++i) {
        permuted_data[i].x[static_cast<std::size_t>(to)] = data[i].x[static_cast<std::size_t>(from)];
      }
    }
  }
  const SaliencyReport a = saliency(ckpt, data);
  const SaliencyReport b = saliency(permuted, permuted_data);
  for (std::size_t k = 0; k < 17; ++k) {
    EXPECT_NEAR(b.impact[perm[k]], a.impact[k], 1e-12 * std::max(1.0, a.impact[k]));
  }
}

TEST(PredictTest, ChunkedPredictionMatchesSingleForward)
{
  const NetworkParams params = testing::random_params(NetworkArch{}, 10);
  const auto data = separable_set(1100, 11);
  const Matrix x = stack_features(data);
  const Vector chunked = predict_probs(params, x);
  const Vector direct = forward_eval(params, x);
  ASSERT_EQ(chunked.size(), direct.size());
  for (Eigen::Index i = 0; i < direct.size(); ++i) {
    EXPECT_EQ(chunked(i), direct(i));
  }
}

}  // namespace
}  // namespace looking
