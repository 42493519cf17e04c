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

#ifndef LOOKING__METRICS_HPP_
#define LOOKING__METRICS_HPP_

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "looking/dataset.hpp"
#include "looking/pose.hpp"

namespace looking
{

/// IoU a detection needs to count toward detection recall.
inline constexpr double kRecallIouThreshold = 0.5;

struct ScoredInstance
{
  double score{0.5};   ///< predicted probability
  int label{0};        ///< 1 looking, 0 not looking
  double gt_height{0}; ///< px
  std::string dataset_tag;
};

/// Step-interpolated AP: mean of precision at the rank of every positive,
/// ranking by descending score with ties kept in input order. Throws
/// std::invalid_argument unless both classes are present.
double average_precision(std::span<const double> scores, std::span<const int> labels);
double average_precision(std::span<const ScoredInstance> items);

struct BalancedAp
{
  std::vector<double> seeds;  ///< one AP per balanced resampling
  double mean{0.0};
  double std{0.0};            ///< population standard deviation over seeds
};

/// AP on each of the balanced_samples subsets.
BalancedAp balanced_average_precision(std::span<const ScoredInstance> items, std::size_t n_seeds = kBalancedSeeds);

/// Ground-truth boxes recovered one-to-one by a detection at IoU >= 0.5.
std::size_t count_recalled(std::span<const Box> gt, std::span<const Box> detections);

/// Fraction of ground-truth boxes recovered; throws on empty ground truth.
double detection_recall(std::span<const Box> gt, std::span<const Box> detections);

struct QuartileBucket
{
  double lo_px{0.0};                ///< exclusive, except the first bucket which starts at 0
  std::optional<double> hi_px;      ///< inclusive; nullopt for the open last bucket
  std::size_t n{0};
  std::optional<BalancedAp> ap;     ///< nullopt when undefined
  std::string note;                 ///< why ap is undefined
};

struct QuartileReport
{
  std::array<double, 3> boundaries{};  ///< 25th, 50th, 75th nearest-rank percentiles of gt_height
  bool degenerate{false};              ///< some boundaries coincide
  std::vector<QuartileBucket> buckets; ///< always four
};

/// Nearest-rank percentile: the value at rank ceil(p/100 * N) of the sorted data.
double nearest_rank_percentile(std::span<const double> values, double percent);

/// Splits items by gt_height at the quartile boundaries and computes balanced
/// AP per bucket. Buckets that are empty, single-class or cannot be balanced
/// are reported as undefined.
QuartileReport quartile_breakdown(std::span<const ScoredInstance> items, std::size_t n_seeds = kBalancedSeeds);

}  // namespace looking

#endif  // LOOKING__METRICS_HPP_
