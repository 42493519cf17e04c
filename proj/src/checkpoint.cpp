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

#include "looking/checkpoint.hpp"

#include <algorithm>
#include <fstream>

#include "looking/fileutil.hpp"

namespace looking
{

using nlohmann::ordered_json;

ordered_json checkpoint_to_json(const Checkpoint & checkpoint)
{
  const NetworkArch & arch = checkpoint.params.arch;
  ordered_json doc;
  doc["version"] = kCheckpointVersion;
  doc["arch"] = {
    {"input_dim", arch.input_dim},
    {"hidden_dim", arch.hidden_dim},
    {"n_residual_blocks", arch.n_residual_blocks},
    {"dropout_rate", arch.dropout_rate},
    {"bn_eps", arch.bn_eps},
    {"bn_momentum", arch.bn_momentum},
  };
  ordered_json params = ordered_json::object();
  for_each_trainable(checkpoint.params, [&](const std::string & name, std::span<const double> values) {
    params[name] = std::vector<double>(values.begin(), values.end());
  });
  ordered_json running = ordered_json::object();
  for_each_running_stat(checkpoint.params, [&](const std::string & name, std::span<const double> values) {
    running[name] = std::vector<double>(values.begin(), values.end());
  });
  doc["params"] = std::move(params);
  doc["bn_running"] = std::move(running);
  doc["subset"] = std::string(to_string(checkpoint.subset));
  doc["normalizer"] = checkpoint.normalizer;
  return doc;
}

namespace
{

void read_arrays(const ordered_json & section, const char * section_name, const std::string & name, std::span<double> out)
{
  const auto it = section.find(name);
  if (it == section.end()) {
    throw CheckpointError(std::string("checkpoint ") + section_name + " missing '" + name + "'");
  }
  if (!it->is_array() || it->size() != out.size()) {
    throw CheckpointError(
      std::string("checkpoint ") + section_name + " '" + name + "' must be a list of " +
      std::to_string(out.size()) + " numbers");
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    const auto & v = (*it)[i];
    if (!v.is_number()) {
      throw CheckpointError("checkpoint '" + name + "' has a non-numeric entry");
    }
    out[i] = v.get<double>();
  }
}

}  // namespace

Checkpoint checkpoint_from_json(const ordered_json & doc)
{
  if (!doc.is_object()) {
    throw CheckpointError("checkpoint must be a JSON object");
  }
  if (!doc.contains("version") || !doc["version"].is_number_integer()) {
    throw CheckpointError("checkpoint has no integer 'version'");
  }
  const int version = doc["version"].get<int>();
  if (version != kCheckpointVersion) {
    throw CheckpointError("unsupported checkpoint version " + std::to_string(version));
  }
  for (const char * key : {"arch", "params", "bn_running", "subset", "normalizer"}) {
    if (!doc.contains(key)) {
      throw CheckpointError(std::string("checkpoint missing '") + key + "'");
    }
  }

  Checkpoint ckpt;
  try {
    const auto & a = doc["arch"];
    NetworkArch arch;
    arch.input_dim = a.at("input_dim").get<std::size_t>();
    arch.hidden_dim = a.at("hidden_dim").get<std::size_t>();
    arch.n_residual_blocks = a.at("n_residual_blocks").get<std::size_t>();
    arch.dropout_rate = a.at("dropout_rate").get<double>();
    arch.bn_eps = a.at("bn_eps").get<double>();
    arch.bn_momentum = a.at("bn_momentum").get<double>();
    arch.validate();
    ckpt.subset = subset_from_string(doc["subset"].get<std::string>());
    ckpt.normalizer = doc["normalizer"].get<std::string>();
    if (subset_width(ckpt.subset) != arch.input_dim) {
      throw CheckpointError("checkpoint input_dim does not match its keypoint subset");
    }
    ckpt.params = init_network(arch, 0);
  } catch (const nlohmann::json::exception & e) {
    throw CheckpointError(std::string("malformed checkpoint: ") + e.what());
  } catch (const std::invalid_argument & e) {
    throw CheckpointError(std::string("malformed checkpoint: ") + e.what());
  }
  if (ckpt.normalizer != kNormalizerTag) {
    throw CheckpointError("unsupported normalizer '" + ckpt.normalizer + "'");
  }

  const auto & params = doc["params"];
  const auto & running = doc["bn_running"];
  std::size_t n_params = 0;
  for_each_trainable(ckpt.params, [&](const std::string & name, std::span<double> values) {
    read_arrays(params, "params", name, values);
    ++n_params;
  });
  std::size_t n_running = 0;
  for_each_running_stat(ckpt.params, [&](const std::string & name, std::span<double> values) {
    read_arrays(running, "bn_running", name, values);
    if (name.ends_with("running_var") &&
        std::any_of(values.begin(), values.end(), [](double v) { return v < 0.0; })) {
      throw CheckpointError("checkpoint '" + name + "' has negative variance");
    }
    ++n_running;
  });
  if (params.size() != n_params || running.size() != n_running) {
    throw CheckpointError("checkpoint carries tensors not in the architecture");
  }
  return ckpt;
}

void save_checkpoint(const Checkpoint & checkpoint, const std::filesystem::path & path)
{
  write_file_atomic(path, checkpoint_to_json(checkpoint).dump() + "\n");
}

Checkpoint load_checkpoint(const std::filesystem::path & path)
{
  std::ifstream in(path);
  if (!in) {
    throw CheckpointError("cannot open checkpoint " + path.string());
  }
  ordered_json doc;
  try {
    doc = ordered_json::parse(in);
  } catch (const nlohmann::json::parse_error & e) {
    throw CheckpointError("checkpoint " + path.string() + " is not valid JSON: " + e.what());
  }
  return checkpoint_from_json(doc);
}

}  // namespace looking
