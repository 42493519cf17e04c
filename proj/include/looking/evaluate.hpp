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

#ifndef LOOKING__EVALUATE_HPP_
#define LOOKING__EVALUATE_HPP_

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "looking/checkpoint.hpp"
#include "looking/dataset.hpp"
#include "looking/metrics.hpp"

namespace looking
{

struct EvalOptions
{
  Split split{Split::Test};
  std::string dataset_tag{"dataset"};
  bool with_quartiles{true};
};

struct EvalReport
{
  std::string dataset_tag;
  double recall_iou50{0.0};
  double ap_mean{0.0};
  double ap_std{0.0};
  std::vector<double> ap_seeds;
  std::optional<QuartileReport> quartiles;
  std::size_t n_gt{0};       ///< labeled ground-truth instances
  std::size_t n_matched{0};  ///< of those, matched by a detection at IoU 0.3
};

/// Matched instances of one split, scored by the network. Detections are the
/// poses present in each image; they are matched against the labeled
/// ground-truth boxes at IoU 0.3, and only matched instances are scored.
struct ScoredSplit
{
  std::vector<ScoredInstance> items;
  std::size_t n_gt{0};
  std::size_t n_recalled{0};  ///< labeled GT recovered at IoU 0.5
};

ScoredSplit score_split(const Checkpoint & checkpoint, std::span<const ImageRecord> records, const EvalOptions & options);

/// Detection recall at IoU 0.5 on labeled ground truth, plus balanced AP over
/// ten negative resamplings of the matched instances.
EvalReport evaluate(const Checkpoint & checkpoint, std::span<const ImageRecord> records, const EvalOptions & options = {});

nlohmann::ordered_json report_to_json(const EvalReport & report);

/// Aligned text row(s): AP mean and std in percent with recall in brackets.
std::string render_report_table(std::span<const EvalReport> reports);

}  // namespace looking

#endif  // LOOKING__EVALUATE_HPP_
