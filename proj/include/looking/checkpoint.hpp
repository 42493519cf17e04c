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

#ifndef LOOKING__CHECKPOINT_HPP_
#define LOOKING__CHECKPOINT_HPP_

#include <filesystem>
#include <stdexcept>
#include <string>

#include "json.hpp"
#include "looking/net.hpp"
#include "looking/pose.hpp"

namespace looking
{

inline constexpr int kCheckpointVersion = 1;
inline constexpr const char * kNormalizerTag = "eq1-v1";

struct Checkpoint
{
  NetworkParams params;
  KeypointSubset subset{KeypointSubset::Full};
  std::string normalizer{kNormalizerTag};
};

class CheckpointError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

/// Versioned JSON document; arrays are flat lists in layer order, weights row-major.
nlohmann::ordered_json checkpoint_to_json(const Checkpoint & checkpoint);
Checkpoint checkpoint_from_json(const nlohmann::ordered_json & doc);

void save_checkpoint(const Checkpoint & checkpoint, const std::filesystem::path & path);
Checkpoint load_checkpoint(const std::filesystem::path & path);

}  // namespace looking

#endif  // LOOKING__CHECKPOINT_HPP_
