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
#include <numeric>

#include "looking/net.hpp"
#include "oracles.hpp"

namespace looking
{
namespace
{

NetworkArch small_arch(std::size_t input_dim = 6, std::size_t hidden = 8)
{
  NetworkArch arch;
  arch.input_dim = input_dim;
  arch.hidden_dim = hidden;
  return arch;
}

Matrix random_batch(std::size_t rows, std::size_t cols, std::uint64_t seed)
{
  Rng rng(seed);
  Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    m.data()[i] = rng.normal();
  }
  return m;
}

void zero_all_trainable(NetworkParams & params)
{
  for_each_trainable(params, [](const std::string & name, std::span<double> values) {
    std::fill(values.begin(), values.end(), name.ends_with(".gamma") ? 1.0 : 0.0);
  });
}

TEST(ParamCountTest, EnumeratedArchitecture)
{
  // stem 51*256 + 256 + BN 2*256; per block 2 * (256*256 + 256 + 2*256); head 256 + 1
  EXPECT_EQ(param_count(NetworkArch::for_subset(KeypointSubset::Full)), 411905U);
  EXPECT_EQ(param_count(NetworkArch::for_subset(KeypointSubset::Head)), 402689U);
  EXPECT_EQ(param_count(NetworkArch::for_subset(KeypointSubset::Body)), 408065U);
}

TEST(ParamCountTest, WithinHalfPercentOfApproximately411K)
{
  const double n = static_cast<double>(param_count(NetworkArch{}));
  EXPECT_LT(std::abs(n - 411000.0) / 411000.0, 0.005);
}

TEST(ParamCountTest, MatchesInstantiatedParams)
{
  for (const auto s : {KeypointSubset::Full, KeypointSubset::Head, KeypointSubset::Body}) {
    const NetworkArch arch = NetworkArch::for_subset(s);
    EXPECT_EQ(count_trainable(init_network(arch, 1)), param_count(arch));
  }
  EXPECT_EQ(count_trainable(init_network(small_arch(), 1)), param_count(small_arch()));
}

TEST(ArchTest, ValidateRejectsBadFields)
{
  NetworkArch arch;
  EXPECT_NO_THROW(arch.validate());
  arch.dropout_rate = 1.0;
  EXPECT_THROW(arch.validate(), std::invalid_argument);
  arch = NetworkArch{};
  arch.bn_momentum = 0.0;
  EXPECT_THROW(arch.validate(), std::invalid_argument);
  arch = NetworkArch{};
  arch.hidden_dim = 0;
  EXPECT_THROW(arch.validate(), std::invalid_argument);
}

TEST(InitTest, DeterministicInSeed)
{
  const NetworkArch arch;
  const NetworkParams a = init_network(arch, 42);
  const NetworkParams b = init_network(arch, 42);
  const NetworkParams c = init_network(arch, 43);
  EXPECT_EQ(a.stem.fc.weight, b.stem.fc.weight);
  EXPECT_EQ(a.blocks[2].second.fc.weight, b.blocks[2].second.fc.weight);
  EXPECT_EQ(a.head.weight, b.head.weight);
  EXPECT_NE(a.stem.fc.weight, c.stem.fc.weight);
}

TEST(InitTest, BatchNormIdentityAndZeroBiases)
{
  const NetworkParams p = init_network(NetworkArch{}, 7);
  EXPECT_TRUE((p.stem.bn.gamma.array() == 1.0).all());
  EXPECT_TRUE((p.stem.bn.beta.array() == 0.0).all());
  EXPECT_TRUE((p.stem.bn.running_mean.array() == 0.0).all());
  EXPECT_TRUE((p.stem.bn.running_var.array() == 1.0).all());
  EXPECT_TRUE((p.stem.fc.bias.array() == 0.0).all());
  EXPECT_TRUE((p.head.bias.array() == 0.0).all());
  for (const auto & block : p.blocks) {
    EXPECT_TRUE((block.first.bn.gamma.array() == 1.0).all());
    EXPECT_TRUE((block.second.bn.running_var.array() == 1.0).all());
  }
}

TEST(InitTest, FanInScaledSymmetricUniform)
{
  const NetworkParams p = init_network(NetworkArch{}, 9);
  const double stem_bound = std::sqrt(6.0 / 51.0);
  EXPECT_LE(p.stem.fc.weight.cwiseAbs().maxCoeff(), stem_bound);
  EXPECT_GT(p.stem.fc.weight.cwiseAbs().maxCoeff(), 0.9 * stem_bound);
  EXPECT_NEAR(p.stem.fc.weight.mean(), 0.0, 0.01);
  const double hidden_bound = std::sqrt(6.0 / 256.0);
  EXPECT_LE(p.blocks[0].first.fc.weight.cwiseAbs().maxCoeff(), hidden_bound);
}

TEST(ForwardTest, ZeroNetworkGivesOneHalf)
{
  NetworkParams p = init_network(NetworkArch{}, 1);
  zero_all_trainable(p);
  const Vector probs = forward_eval(p, random_batch(5, 51, 2));
  for (Eigen::Index i = 0; i < probs.size(); ++i) {
    EXPECT_EQ(probs(i), 0.5);
  }
}

TEST(ForwardTest, EvalIsDeterministicAndRowIndependent)
{
  const NetworkParams p = testing::random_params(small_arch(), 3);
  const Matrix x = random_batch(7, 6, 4);
  const Vector a = forward_eval(p, x);
  EXPECT_EQ(a, forward_eval(p, x));
  const std::vector<Eigen::Index> perm{3, 0, 6, 1, 5, 2, 4};
  Matrix xp(x.rows(), x.cols());
  for (std::size_t i = 0; i < perm.size(); ++i) {
    xp.row(static_cast<Eigen::Index>(i)) = x.row(perm[i]);
  }
  const Vector b = forward_eval(p, xp);
  for (std::size_t i = 0; i < perm.size(); ++i) {
    EXPECT_EQ(b(static_cast<Eigen::Index>(i)), a(perm[i]));
  }
}

TEST(ForwardTest, ProbabilitiesStayInsideOpenInterval)
{
  NetworkParams p = init_network(small_arch(), 5);
  p.head.bias(0) = 1e4;
  EXPECT_EQ(forward_eval(p, random_batch(3, 6, 1))(0), 1.0 - kProbClamp);
  p.head.bias(0) = -1e4;
  EXPECT_EQ(forward_eval(p, random_batch(3, 6, 1))(0), kProbClamp);
}

TEST(ForwardTest, RejectsBadInput)
{
  NetworkParams p = init_network(small_arch(), 5);
  Rng rng(1);
  EXPECT_THROW(forward_eval(p, random_batch(2, 7, 1)), std::invalid_argument);
  EXPECT_THROW(forward_train(p, random_batch(1, 6, 1), rng), std::invalid_argument);
  EXPECT_THROW(forward(p, random_batch(4, 6, 1), Mode::Train, nullptr), std::invalid_argument);
  EXPECT_FALSE(forward(p, random_batch(4, 6, 1), Mode::Eval, nullptr).cache.has_value());
}

TEST(ForwardTest, TrainModeUsesDropoutMasks)
{
  NetworkParams p = init_network(small_arch(), 5);
  Rng rng(2);
  const ForwardResult r = forward_train(p, random_batch(6, 6, 1), rng);
  ASSERT_TRUE(r.cache.has_value());
  const Matrix & mask = r.cache->stem.mask;
  ASSERT_EQ(mask.rows(), 6);
  for (Eigen::Index i = 0; i < mask.size(); ++i) {
    const double m = mask.data()[i];
    EXPECT_TRUE(m == 0.0 || m == 1.0 / 0.8) << m;
  }
}

TEST(ResidualTest, ZeroedBlockIsIdentity)
{
  NetworkParams p = testing::random_params(small_arch(), 8);
  for (auto * layer : {&p.blocks[1].first, &p.blocks[1].second}) {
    layer->fc.weight.setZero();
    layer->fc.bias.setZero();
    layer->bn.gamma.setOnes();
    layer->bn.beta.setZero();
  }
  const Matrix x = random_batch(5, 6, 9);
  const ForwardResult eval = forward_eval_cached(p, x);
  EXPECT_EQ(eval.cache->block_layers[4].input, eval.cache->block_layers[2].input);

  Rng rng(4);
  const ForwardResult train = forward_train(p, x, rng);
  EXPECT_EQ(train.cache->block_layers[4].input, train.cache->block_layers[2].input);
}

TEST(BackwardTest, HeadGradientAtOneHalf)
{
  NetworkParams p = init_network(small_arch(), 1);
  zero_all_trainable(p);
  Rng rng(3);
  const ForwardResult r = forward_train(p, random_batch(4, 6, 2), rng);
  Vector y(4);
  y << 1, 0, 1, 1;
  const Gradients g = backward(p, *r.cache, y);
  // (p - y) / B summed over the batch: (-0.5 + 0.5 - 0.5 - 0.5) / 4
  EXPECT_DOUBLE_EQ(g.head.bias(0), -0.25);
}

TEST(BackwardTest, PerfectLabelsGiveZeroHeadBiasGradient)
{
  NetworkParams p = testing::random_params(small_arch(), 2);
  Rng rng(3);
  const Matrix x = random_batch(4, 6, 2);
  NetworkParams work = p;
  const ForwardResult r = forward_train(work, x, rng);
  const Gradients g = backward(p, *r.cache, r.probs);
  EXPECT_NEAR(g.head.bias(0), 0.0, 1e-17);
}

TEST(BackwardTest, RejectsMismatchedCache)
{
  NetworkParams p = init_network(small_arch(), 1);
  const ForwardResult eval = forward_eval_cached(p, random_batch(4, 6, 2));
  EXPECT_THROW(backward(p, *eval.cache, Vector::Zero(4)), std::invalid_argument);
  Rng rng(1);
  const ForwardResult train = forward_train(p, random_batch(4, 6, 2), rng);
  EXPECT_THROW(backward(p, *train.cache, Vector::Zero(3)), std::invalid_argument);
  const NetworkParams other = init_network(small_arch(6, 16), 1);
  EXPECT_THROW(backward(other, *train.cache, Vector::Zero(4)), std::invalid_argument);
}

TEST(GradientOracleTest, ParametersMatchFiniteDifferences)
{
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    const std::size_t batch = 2 + seed % 7;
    const auto r = testing::check_parameter_gradients(small_arch(6, 8), 100 + seed, batch);
    EXPECT_LT(r.max_rel_error, 1e-4) << "seed " << seed << " worst " << r.worst;
    EXPECT_EQ(r.n_checked, param_count(small_arch(6, 8)));
  }
}

TEST(GradientOracleTest, NoDropoutMatchesFiniteDifferences)
{
  NetworkArch arch = small_arch(5, 6);
  arch.dropout_rate = 0.0;
  const auto r = testing::check_parameter_gradients(arch, 7, 3);
  EXPECT_LT(r.max_rel_error, 1e-4) << r.worst;
}

TEST(GradientOracleTest, InputsMatchFiniteDifferences)
{
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    const auto r = testing::check_input_gradients(small_arch(9, 8), 200 + seed, 1 + seed);
    EXPECT_LT(r.max_rel_error, 1e-4) << "seed " << seed << " worst " << r.worst;
  }
}

TEST(RunningStatsTest, ConvergeToStreamMoments)
{
  NetworkArch arch = small_arch(3, 4);
  arch.dropout_rate = 0.0;
  NetworkParams p = init_network(arch, 11);
  Rng data(12);
  Rng dropout(13);
  const Eigen::RowVector3d mu(1.0, -2.0, 0.5);
  const Eigen::RowVector3d sigma(0.5, 1.0, 2.0);
  const std::size_t batch = 256;
  for (int step = 0; step < 400; ++step) {
    Matrix x(batch, 3);
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      for (Eigen::Index j = 0; j < 3; ++j) {
        x(i, j) = mu(j) + sigma(j) * data.normal();
      }
    }
    forward_train(p, x, dropout);
  }
  const Matrix & w = p.stem.fc.weight;
  for (Eigen::Index k = 0; k < 4; ++k) {
    const double mean = w.row(k).dot(mu) + p.stem.fc.bias(k);
    const double var = w.row(k).cwiseProduct(sigma).squaredNorm();
    // EMA of batch means: std ~ sqrt(var / B) * sqrt(m / (2 - m))
    const double tol = 6.0 * std::sqrt(var / batch) * std::sqrt(0.1 / 1.9);
    EXPECT_NEAR(p.stem.bn.running_mean(k), mean, tol);
    EXPECT_NEAR(p.stem.bn.running_var(k), var, 0.1 * var);
  }
}

TEST(BceTest, Examples)
{
  Vector p(3);
  p << 0.5, 0.5, 0.5;
  Vector y(3);
  y << 1, 0, 1;
  EXPECT_NEAR(bce_loss(p, y), std::log(2.0), 1e-15);

  Vector p2(2);
  p2 << 0.9, 0.2;
  Vector y2(2);
  y2 << 1, 0;
  EXPECT_NEAR(bce_loss(p2, y2), -(std::log(0.9) + std::log(0.8)) / 2.0, 1e-15);
  EXPECT_NEAR(bce_loss(p2, y2), 0.1643, 5e-5);

  Vector perfect(2);
  perfect << 1.0, 0.0;
  EXPECT_LE(bce_loss(perfect, perfect), 1e-11);
  EXPECT_THROW(bce_loss(p, y2), std::invalid_argument);
}

}  // namespace
}  // namespace looking
