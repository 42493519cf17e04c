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

#ifndef LOOKING__MATCHING_HPP_
#define LOOKING__MATCHING_HPP_

#include <cstddef>
#include <span>
#include <vector>

#include "looking/pose.hpp"

namespace looking
{

/// Intersection over union of two boxes, in [0, 1].
double iou(const Box & a, const Box & b);

struct Match
{
  std::size_t gt_index{0};
  std::size_t det_index{0};
  double iou{0.0};

  bool operator==(const Match &) const = default;
};

/// A detected pose together with the box it is matched by (normally its
/// enclosing box).
struct Detection
{
  Pose pose;
  Box box;
};

Detection make_detection(const Pose & pose);

/// One-to-one greedy assignment by descending IoU. Pairs with IoU below the
/// threshold never match. Equal IoUs resolve to the lower detection index,
/// then the lower ground-truth index. Result is ordered by gt_index.
std::vector<Match> match_boxes(std::span<const Box> gt, std::span<const Box> detections, double threshold);

std::vector<Match> match_instances(
  std::span<const Box> gt, std::span<const Detection> detections, double threshold);

}  // namespace looking

#endif  // LOOKING__MATCHING_HPP_
