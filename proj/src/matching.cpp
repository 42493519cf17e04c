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

#include "looking/matching.hpp"

#include <algorithm>

namespace looking
{

double iou(const Box & a, const Box & b)
{
  const double ix = std::max(0.0, std::min(a.x + a.w, b.x + b.w) - std::max(a.x, b.x));
  const double iy = std::max(0.0, std::min(a.y + a.h, b.y + b.h) - std::max(a.y, b.y));
  const double inter = ix * iy;
  const double uni = a.w * a.h + b.w * b.h - inter;
  if (uni <= 0.0) {
    return 0.0;
  }
  return std::clamp(inter / uni, 0.0, 1.0);
}

Detection make_detection(const Pose & pose) { return Detection{pose, enclosing_box(pose)}; }

std::vector<Match> match_boxes(std::span<const Box> gt, std::span<const Box> detections, double threshold)
{
  std::vector<Match> candidates;
  for (std::size_t g = 0; g < gt.size(); ++g) {
    for (std::size_t d = 0; d < detections.size(); ++d) {
      const double v = iou(gt[g], detections[d]);
      if (v >= threshold && v > 0.0) {
        candidates.push_back(Match{g, d, v});
      }
    }
  }
  std::sort(candidates.begin(), candidates.end(), [](const Match & a, const Match & b) {
    if (a.iou != b.iou) {
      return a.iou > b.iou;
    }
    if (a.det_index != b.det_index) {
      return a.det_index < b.det_index;
    }
    return a.gt_index < b.gt_index;
  });

  std::vector<bool> gt_used(gt.size(), false);
  std::vector<bool> det_used(detections.size(), false);
  std::vector<Match> matches;
  for (const auto & m : candidates) {
    if (gt_used[m.gt_index] || det_used[m.det_index]) {
      continue;
    }
    gt_used[m.gt_index] = true;
    det_used[m.det_index] = true;
    matches.push_back(m);
  }
  std::sort(matches.begin(), matches.end(), [](const Match & a, const Match & b) {
    return a.gt_index < b.gt_index;
  });
  return matches;
}

std::vector<Match> match_instances(
  std::span<const Box> gt, std::span<const Detection> detections, double threshold)
{
  std::vector<Box> boxes;
  boxes.reserve(detections.size());
  for (const auto & d : detections) {
    boxes.push_back(d.box);
  }
  return match_boxes(gt, boxes, threshold);
}

}  // namespace looking
