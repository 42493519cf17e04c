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

#include "looking/net.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace looking
{

NetworkArch NetworkArch::for_subset(KeypointSubset subset)
{
  NetworkArch arch;
  arch.input_dim = subset_width(subset);
  return arch;
}

void NetworkArch::validate() const
{
  if (input_dim == 0 || hidden_dim == 0) {
    throw std::invalid_argument("network dimensions must be positive");
  }
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) {
    throw std::invalid_argument("dropout rate must be in [0, 1)");
  }
  if (!(bn_eps > 0.0)) {
    throw std::invalid_argument("batch-norm eps must be positive");
  }
  if (!(bn_momentum > 0.0 && bn_momentum < 1.0)) {
    throw std::invalid_argument("batch-norm momentum must be in (0, 1)");
  }
}

std::size_t param_count(const NetworkArch & arch)
{
  const std::size_t h = arch.hidden_dim;
  const std::size_t fc_stem = arch.input_dim * h + h;
  const std::size_t bn = 2 * h;
  const std::size_t fc_hidden = h * h + h;
  const std::size_t head = h + 1;
  return fc_stem + bn + arch.n_residual_blocks * 2 * (fc_hidden + bn) + head;
}

std::size_t count_trainable(const NetworkParams & params)
{
  std::size_t n = 0;
  for_each_trainable(params, [&n](const std::string &, std::span<const double> values) {
    n += values.size();
  });
  return n;
}

namespace
{

Linear make_linear(std::size_t in, std::size_t out)
{
  return Linear{Matrix::Zero(static_cast<Eigen::Index>(out), static_cast<Eigen::Index>(in)),
                Vector::Zero(static_cast<Eigen::Index>(out))};
}

// Parameters get gamma 1 and running stats; gradients are all zero.
BatchNorm make_bn(std::size_t width, bool is_gradient)
{
  const auto n = static_cast<Eigen::Index>(width);
  BatchNorm bn{is_gradient ? Vector::Zero(n) : Vector::Ones(n), Vector::Zero(n), Vector(), Vector()};
  if (!is_gradient) {
    bn.running_mean = Vector::Zero(n);
    bn.running_var = Vector::Ones(n);
  }
  return bn;
}

NetworkParams make_params(const NetworkArch & arch, bool is_gradient)
{
  arch.validate();
  NetworkParams p;
  p.arch = arch;
  p.stem = DenseLayer{make_linear(arch.input_dim, arch.hidden_dim), make_bn(arch.hidden_dim, is_gradient)};
  p.blocks.reserve(arch.n_residual_blocks);
  for (std::size_t i = 0; i < arch.n_residual_blocks; ++i) {
    p.blocks.push_back(ResidualBlock{
      DenseLayer{make_linear(arch.hidden_dim, arch.hidden_dim), make_bn(arch.hidden_dim, is_gradient)},
      DenseLayer{make_linear(arch.hidden_dim, arch.hidden_dim), make_bn(arch.hidden_dim, is_gradient)}});
  }
  p.head = make_linear(arch.hidden_dim, 1);
  return p;
}

void fill_uniform(Matrix & w, double bound, Rng & rng)
{
  double * data = w.data();
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    data[i] = rng.uniform(-bound, bound);
  }
}

double sigmoid(double z)
{
  if (z >= 0.0) {
    return 1.0 / (1.0 + std::exp(-z));
  }
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double clamp_prob(double p) { return std::clamp(p, kProbClamp, 1.0 - kProbClamp); }

/// One DenseLayer forward. Writes the cache when requested.
Matrix dense_forward(
  const DenseLayer & layer, BatchNorm * running, const Matrix & x, Mode mode, const NetworkArch & arch,
  Rng * rng, DenseCache * cache)
{
  Matrix z = x * layer.fc.weight.transpose();
  z.rowwise() += layer.fc.bias.transpose();

  const auto batch = static_cast<double>(x.rows());
  Vector inv_std;
  Matrix xhat;
  if (mode == Mode::Train) {
    const Vector mean = z.colwise().mean().transpose();
    Matrix centered = z.rowwise() - mean.transpose();
    const Vector var = centered.array().square().colwise().sum().transpose() / batch;
    inv_std = (var.array() + arch.bn_eps).rsqrt().matrix();
    xhat = centered.array().rowwise() * inv_std.transpose().array();
    if (running != nullptr) {
      const double m = arch.bn_momentum;
      const Vector unbiased = var * (batch / (batch - 1.0));
      running->running_mean = (1.0 - m) * running->running_mean + m * mean;
      running->running_var = (1.0 - m) * running->running_var + m * unbiased;
    }
  } else {
    inv_std = (layer.bn.running_var.array() + arch.bn_eps).rsqrt().matrix();
    xhat = (z.rowwise() - layer.bn.running_mean.transpose()).array().rowwise() * inv_std.transpose().array();
  }

  Matrix y = xhat.array().rowwise() * layer.bn.gamma.transpose().array();
  y.rowwise() += layer.bn.beta.transpose();
  Matrix activated = y.cwiseMax(0.0);

  Matrix mask;
  Matrix out;
  if (mode == Mode::Train && arch.dropout_rate > 0.0) {
    const double keep = 1.0 - arch.dropout_rate;
    const double scale = 1.0 / keep;
    mask.resize(activated.rows(), activated.cols());
    double * m = mask.data();
    for (Eigen::Index i = 0; i < mask.size(); ++i) {
      m[i] = rng->bernoulli(keep) ? scale : 0.0;
    }
    out = activated.cwiseProduct(mask);
  } else {
    out = activated;
  }

  if (cache != nullptr) {
    cache->input = x;
    cache->xhat = std::move(xhat);
    cache->inv_std = std::move(inv_std);
    cache->activated = std::move(activated);
    cache->mask = std::move(mask);
  }
  return out;
}

/// Backprop through one DenseLayer. Accumulates parameter gradients into grad
/// when non-null and returns the gradient w.r.t. the layer input.
Matrix dense_backward(
  const DenseLayer & layer, const DenseCache & cache, Mode mode, const Matrix & d_out, DenseLayer * grad)
{
  Matrix d_act = cache.mask.size() > 0 ? Matrix(d_out.cwiseProduct(cache.mask)) : d_out;
  Matrix d_y = (cache.activated.array() > 0.0).select(d_act, 0.0);

  Matrix d_xhat = d_y.array().rowwise() * layer.bn.gamma.transpose().array();
  Matrix d_z;
  if (mode == Mode::Train) {
    const auto batch = static_cast<double>(d_y.rows());
    const Eigen::RowVectorXd sum_dxhat = d_xhat.colwise().sum();
    const Eigen::RowVectorXd sum_dxhat_xhat = d_xhat.cwiseProduct(cache.xhat).colwise().sum();
    Matrix t = (batch * d_xhat).rowwise() - sum_dxhat;
    t -= (cache.xhat.array().rowwise() * sum_dxhat_xhat.array()).matrix();
    d_z = (t.array().rowwise() * (cache.inv_std.transpose().array() / batch)).matrix();
  } else {
    d_z = d_xhat.array().rowwise() * cache.inv_std.transpose().array();
  }

  if (grad != nullptr) {
    grad->bn.gamma = d_y.cwiseProduct(cache.xhat).colwise().sum().transpose();
    grad->bn.beta = d_y.colwise().sum().transpose();
    grad->fc.weight = d_z.transpose() * cache.input;
    grad->fc.bias = d_z.colwise().sum().transpose();
  }
  return d_z * layer.fc.weight;
}

void check_batch(const NetworkParams & params, const Matrix & batch)
{
  if (static_cast<std::size_t>(batch.cols()) != params.arch.input_dim) {
    throw std::invalid_argument(
      "batch width " + std::to_string(batch.cols()) + " does not match network input dim " +
      std::to_string(params.arch.input_dim));
  }
}

ForwardResult run_forward(
  const NetworkParams & params, NetworkParams * running, const Matrix & batch, Mode mode, Rng * rng,
  bool keep_cache)
{
  check_batch(params, batch);
  if (mode == Mode::Train) {
    if (batch.rows() < 2) {
      throw std::invalid_argument("train-mode forward needs at least 2 samples for batch statistics");
    }
    if (rng == nullptr && params.arch.dropout_rate > 0.0) {
      throw std::invalid_argument("train-mode forward needs a random source for dropout");
    }
  }

  ForwardResult result;
  ForwardCache cache;
  cache.mode = mode;
  cache.batch_size = static_cast<std::size_t>(batch.rows());
  DenseCache * slot = keep_cache ? &cache.stem : nullptr;
  if (keep_cache) {
    cache.block_layers.resize(2 * params.blocks.size());
  }

  Matrix h = dense_forward(
    params.stem, running ? &running->stem.bn : nullptr, batch, mode, params.arch, rng, slot);
  for (std::size_t i = 0; i < params.blocks.size(); ++i) {
    const auto & block = params.blocks[i];
    BatchNorm * r1 = running ? &running->blocks[i].first.bn : nullptr;
    BatchNorm * r2 = running ? &running->blocks[i].second.bn : nullptr;
    DenseCache * c1 = keep_cache ? &cache.block_layers[2 * i] : nullptr;
    DenseCache * c2 = keep_cache ? &cache.block_layers[2 * i + 1] : nullptr;
    Matrix inner = dense_forward(block.first, r1, h, mode, params.arch, rng, c1);
    inner = dense_forward(block.second, r2, inner, mode, params.arch, rng, c2);
    h += inner;
  }

  Vector logits = h * params.head.weight.transpose();
  logits.array() += params.head.bias(0);
  result.probs = logits.unaryExpr([](double z) { return clamp_prob(sigmoid(z)); });

  if (keep_cache) {
    cache.head_input = std::move(h);
    cache.probs = result.probs;
    result.cache = std::move(cache);
  }
  return result;
}

void check_cache(const NetworkParams & params, const ForwardCache & cache, const Vector & labels)
{
  if (cache.block_layers.size() != 2 * params.blocks.size() ||
      static_cast<std::size_t>(cache.stem.input.cols()) != params.arch.input_dim ||
      static_cast<std::size_t>(cache.head_input.cols()) != params.arch.hidden_dim) {
    throw std::invalid_argument("forward cache does not match network parameters");
  }
  if (static_cast<std::size_t>(labels.size()) != cache.batch_size) {
    throw std::invalid_argument("label count does not match cached batch size");
  }
}

/// Shared backprop from d(loss)/d(logit) down to the input.
Matrix backprop(const NetworkParams & params, const ForwardCache & cache, const Vector & d_logits, Gradients * grads)
{
  if (grads != nullptr) {
    grads->head.weight = d_logits.transpose() * cache.head_input;
    grads->head.bias = Vector::Constant(1, d_logits.sum());
  }
  Matrix d_h = d_logits * params.head.weight;  // B x H

  for (std::size_t i = params.blocks.size(); i-- > 0;) {
    const auto & block = params.blocks[i];
    DenseLayer * g1 = grads ? &grads->blocks[i].first : nullptr;
    DenseLayer * g2 = grads ? &grads->blocks[i].second : nullptr;
    Matrix d_inner = dense_backward(block.second, cache.block_layers[2 * i + 1], cache.mode, d_h, g2);
    d_inner = dense_backward(block.first, cache.block_layers[2 * i], cache.mode, d_inner, g1);
    d_h += d_inner;  // skip path
  }
  return dense_backward(params.stem, cache.stem, cache.mode, d_h, grads ? &grads->stem : nullptr);
}

}  // namespace

NetworkParams init_network(const NetworkArch & arch, std::uint64_t seed)
{
  NetworkParams p = make_params(arch, false);
  Rng rng(derive_seed(seed, 0x1217));
  // He-style bound for layers feeding ReLU, LeCun-style for the sigmoid head.
  fill_uniform(p.stem.fc.weight, std::sqrt(6.0 / static_cast<double>(arch.input_dim)), rng);
  const double hidden_bound = std::sqrt(6.0 / static_cast<double>(arch.hidden_dim));
  for (auto & block : p.blocks) {
    fill_uniform(block.first.fc.weight, hidden_bound, rng);
    fill_uniform(block.second.fc.weight, hidden_bound, rng);
  }
  fill_uniform(p.head.weight, std::sqrt(3.0 / static_cast<double>(arch.hidden_dim)), rng);
  return p;
}

Gradients zero_gradients(const NetworkArch & arch) { return make_params(arch, true); }

ForwardResult forward_train(NetworkParams & params, const Matrix & batch, Rng & rng)
{
  return run_forward(params, &params, batch, Mode::Train, &rng, true);
}

Vector forward_eval(const NetworkParams & params, const Matrix & batch)
{
  return run_forward(params, nullptr, batch, Mode::Eval, nullptr, false).probs;
}

ForwardResult forward_eval_cached(const NetworkParams & params, const Matrix & batch)
{
  return run_forward(params, nullptr, batch, Mode::Eval, nullptr, true);
}

ForwardResult forward(NetworkParams & params, const Matrix & batch, Mode mode, Rng * rng)
{
  if (mode == Mode::Train) {
    if (rng == nullptr) {
      throw std::invalid_argument("train-mode forward needs a random source for dropout");
    }
    return forward_train(params, batch, *rng);
  }
  return ForwardResult{forward_eval(params, batch), std::nullopt};
}

Gradients backward(const NetworkParams & params, const ForwardCache & cache, const Vector & labels)
{
  if (cache.mode != Mode::Train) {
    throw std::invalid_argument("backward needs a train-mode forward cache");
  }
  check_cache(params, cache, labels);
  const auto batch = static_cast<double>(cache.batch_size);
  const Vector d_logits = (cache.probs - labels) / batch;
  Gradients grads = zero_gradients(params.arch);
  backprop(params, cache, d_logits, &grads);
  return grads;
}

Matrix input_gradient(const NetworkParams & params, const ForwardCache & cache, const Vector & labels)
{
  check_cache(params, cache, labels);
  // With a Train cache, batch statistics couple the rows and this becomes the
  // gradient of the summed loss instead of per-sample gradients.
  return backprop(params, cache, cache.probs - labels, nullptr);
}

double bce_loss(const Vector & probs, const Vector & labels)
{
  if (probs.size() != labels.size()) {
    throw std::invalid_argument("bce_loss: probs and labels differ in length");
  }
  if (probs.size() == 0) {
    throw std::invalid_argument("bce_loss: empty input");
  }
  double total = 0.0;
  for (Eigen::Index i = 0; i < probs.size(); ++i) {
    const double p = clamp_prob(probs(i));
    const double y = labels(i);
    total -= y * std::log(p) + (1.0 - y) * std::log(1.0 - p);
  }
  return total / static_cast<double>(probs.size());
}

}  // namespace looking
