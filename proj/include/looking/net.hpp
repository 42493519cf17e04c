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

/// \file net.hpp
/// \brief Residual fully-connected binary classifier with hand-written backprop.
///
/// Topology:
///   stem:   FC(input_dim -> H) -> BN -> ReLU -> dropout
///   blocks: x + [FC(H -> H) -> BN -> ReLU -> dropout] x 2, repeated n_residual_blocks times
///   head:   FC(H -> 1) -> sigmoid
///
/// Everything runs in double precision. Weights are stored (out x in), row-major,
/// so a batch (B x in) maps to B x out via X * W^T + b.

#ifndef LOOKING__NET_HPP_
#define LOOKING__NET_HPP_

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "looking/pose.hpp"
#include "looking/rng.hpp"

namespace looking
{

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

struct NetworkArch
{
  std::size_t input_dim{51};
  std::size_t hidden_dim{256};
  std::size_t n_residual_blocks{3};
  double dropout_rate{0.2};
  double bn_eps{1e-5};
  double bn_momentum{0.1};

  /// Default architecture for a keypoint subset.
  static NetworkArch for_subset(KeypointSubset subset);

  /// Throws std::invalid_argument on out-of-range fields.
  void validate() const;

  bool operator==(const NetworkArch &) const = default;
};

struct Linear
{
  Matrix weight;  ///< out x in
  Vector bias;    ///< out
};

struct BatchNorm
{
  Vector gamma;
  Vector beta;
  Vector running_mean;  ///< not trainable
  Vector running_var;   ///< not trainable
};

/// FC -> BN -> ReLU -> dropout.
struct DenseLayer
{
  Linear fc;
  BatchNorm bn;
};

struct ResidualBlock
{
  DenseLayer first;
  DenseLayer second;
};

struct NetworkParams
{
  NetworkArch arch;
  DenseLayer stem;
  std::vector<ResidualBlock> blocks;
  Linear head;
};

/// Gradients share the parameter layout; running statistics stay empty.
using Gradients = NetworkParams;

enum class Mode
{
  Train,
  Eval,
};

/// Count of trainable scalars (weights, biases, BN gamma and beta).
std::size_t param_count(const NetworkArch & arch);

NetworkParams init_network(const NetworkArch & arch, std::uint64_t seed);

/// Zero-filled gradient buffer for an architecture.
Gradients zero_gradients(const NetworkArch & arch);

namespace detail
{
template<typename P, typename F>
void visit_linear(P & linear, const std::string & prefix, F & f)
{
  f(prefix + ".weight", std::span(linear.weight.data(), static_cast<std::size_t>(linear.weight.size())));
  f(prefix + ".bias", std::span(linear.bias.data(), static_cast<std::size_t>(linear.bias.size())));
}

template<typename P, typename F>
void visit_bn(P & bn, const std::string & prefix, F & f)
{
  f(prefix + ".gamma", std::span(bn.gamma.data(), static_cast<std::size_t>(bn.gamma.size())));
  f(prefix + ".beta", std::span(bn.beta.data(), static_cast<std::size_t>(bn.beta.size())));
}

template<typename P, typename F>
void visit_running(P & bn, const std::string & prefix, F & f)
{
  f(prefix + ".running_mean",
    std::span(bn.running_mean.data(), static_cast<std::size_t>(bn.running_mean.size())));
  f(prefix + ".running_var",
    std::span(bn.running_var.data(), static_cast<std::size_t>(bn.running_var.size())));
}
}  // namespace detail

/// Calls f(name, span) for every trainable tensor in layer order. Works on
/// const and mutable params; the span element type follows constness.
template<typename P, typename F>
void for_each_trainable(P & params, F && f)
{
  detail::visit_linear(params.stem.fc, "stem.fc", f);
  detail::visit_bn(params.stem.bn, "stem.bn", f);
  for (std::size_t i = 0; i < params.blocks.size(); ++i) {
    const std::string prefix = "blocks." + std::to_string(i);
    detail::visit_linear(params.blocks[i].first.fc, prefix + ".first.fc", f);
    detail::visit_bn(params.blocks[i].first.bn, prefix + ".first.bn", f);
    detail::visit_linear(params.blocks[i].second.fc, prefix + ".second.fc", f);
    detail::visit_bn(params.blocks[i].second.bn, prefix + ".second.bn", f);
  }
  detail::visit_linear(params.head, "head", f);
}

/// Calls f(name, span) for every BN running statistic in layer order.
template<typename P, typename F>
void for_each_running_stat(P & params, F && f)
{
  detail::visit_running(params.stem.bn, "stem.bn", f);
  for (std::size_t i = 0; i < params.blocks.size(); ++i) {
    const std::string prefix = "blocks." + std::to_string(i);
    detail::visit_running(params.blocks[i].first.bn, prefix + ".first.bn", f);
    detail::visit_running(params.blocks[i].second.bn, prefix + ".second.bn", f);
  }
}

/// Number of trainable scalars actually held by params.
std::size_t count_trainable(const NetworkParams & params);

/// Activations kept by a forward pass for backprop through one DenseLayer.
struct DenseCache
{
  Matrix input;      ///< B x in
  Matrix xhat;       ///< normalized pre-activation, B x out
  Vector inv_std;    ///< 1 / sqrt(var + eps) actually used
  Matrix activated;  ///< ReLU output before dropout
  Matrix mask;       ///< dropout keep mask scaled by 1/(1-p); empty when dropout is off
};

struct ForwardCache
{
  Mode mode{Mode::Train};
  std::size_t batch_size{0};
  DenseCache stem;
  std::vector<DenseCache> block_layers;  ///< 2 per residual block
  Matrix head_input;                     ///< B x H
  Vector probs;
};

struct ForwardResult
{
  Vector probs;
  std::optional<ForwardCache> cache;
};

/// Probability clamp applied to network outputs and inside bce_loss.
inline constexpr double kProbClamp = 1e-12;

/// Train mode: batch statistics, dropout drawn from rng, running statistics
/// updated with momentum. Requires B >= 2.
ForwardResult forward_train(NetworkParams & params, const Matrix & batch, Rng & rng);

/// Eval mode: running statistics, no dropout. Pure.
Vector forward_eval(const NetworkParams & params, const Matrix & batch);

/// Eval-mode forward that also keeps the cache, for input gradients.
ForwardResult forward_eval_cached(const NetworkParams & params, const Matrix & batch);

/// Mode-dispatching entry point. Train mode needs rng.
ForwardResult forward(NetworkParams & params, const Matrix & batch, Mode mode, Rng * rng);

/// Gradients of mean binary cross-entropy w.r.t. every trainable tensor.
/// The cache must come from forward_train on the same params.
Gradients backward(const NetworkParams & params, const ForwardCache & cache, const Vector & labels);

/// Gradient of the per-sample loss L(y_j, f(x_j)) with respect to each input
/// row (no 1/B factor). Works with caches from either mode.
Matrix input_gradient(const NetworkParams & params, const ForwardCache & cache, const Vector & labels);

/// Mean binary cross-entropy with probabilities clamped to [1e-12, 1 - 1e-12].
double bce_loss(const Vector & probs, const Vector & labels);

}  // namespace looking

#endif  // LOOKING__NET_HPP_
