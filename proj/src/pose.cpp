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

#include "looking/pose.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace looking
{

const std::array<std::string_view, kNumKeypoints> kKeypointNames = {
  "nose",        "left_eye",       "right_eye",      "left_ear",    "right_ear",
  "left_shoulder", "right_shoulder", "left_elbow",   "right_elbow", "left_wrist",
  "right_wrist", "left_hip",       "right_hip",      "left_knee",   "right_knee",
  "left_ankle",  "right_ankle",
};

std::optional<std::size_t> keypoint_index(std::string_view name)
{
  const auto it = std::find(kKeypointNames.begin(), kKeypointNames.end(), name);
  if (it == kKeypointNames.end()) {
    return std::nullopt;
  }
  return static_cast<std::size_t>(it - kKeypointNames.begin());
}

Pose::Pose(const Keypoints & keypoints) : keypoints_(keypoints)
{
  bool any_visible = false;
  for (std::size_t i = 0; i < kNumKeypoints; ++i) {
    const auto & k = keypoints_[i];
    if (!std::isfinite(k.u) || !std::isfinite(k.v)) {
      throw std::invalid_argument(
        "keypoint " + std::string(kKeypointNames[i]) + " has non-finite coordinates");
    }
    if (!(k.c >= 0.0 && k.c <= 1.0)) {
      throw std::invalid_argument(
        "keypoint " + std::string(kKeypointNames[i]) + " confidence outside [0, 1]");
    }
    any_visible = any_visible || k.c > 0.0;
  }
  if (!any_visible) {
    throw DegeneratePose("degenerate pose: no keypoint with positive confidence");
  }
}

Pose Pose::from_vector(const std::vector<Keypoint> & keypoints)
{
  if (keypoints.size() != kNumKeypoints) {
    throw std::invalid_argument(
      "pose must have 17 keypoints, got " + std::to_string(keypoints.size()));
  }
  Keypoints fixed{};
  std::copy(keypoints.begin(), keypoints.end(), fixed.begin());
  return Pose(fixed);
}

std::string_view to_string(KeypointSubset subset)
{
  switch (subset) {
    case KeypointSubset::Full:
      return "full";
    case KeypointSubset::Head:
      return "head";
    case KeypointSubset::Body:
      return "body";
  }
  return "full";
}

KeypointSubset subset_from_string(std::string_view name)
{
  if (name == "full") {
    return KeypointSubset::Full;
  }
  if (name == "head") {
    return KeypointSubset::Head;
  }
  if (name == "body") {
    return KeypointSubset::Body;
  }
  throw std::invalid_argument("unknown keypoint subset '" + std::string(name) + "'");
}

std::size_t subset_size(KeypointSubset subset)
{
  switch (subset) {
    case KeypointSubset::Full:
      return kNumKeypoints;
    case KeypointSubset::Head:
      return 5;
    case KeypointSubset::Body:
      return 12;
  }
  return kNumKeypoints;
}

std::size_t subset_offset(KeypointSubset subset)
{
  return subset == KeypointSubset::Body ? 5 : 0;
}

Box enclosing_box(const Pose & pose)
{
  double x_min = std::numeric_limits<double>::infinity();
  double y_min = std::numeric_limits<double>::infinity();
  double x_max = -std::numeric_limits<double>::infinity();
  double y_max = -std::numeric_limits<double>::infinity();
  bool any = false;
  for (const auto & k : pose.keypoints()) {
    if (k.c <= 0.0) {
      continue;
    }
    any = true;
    x_min = std::min(x_min, k.u);
    y_min = std::min(y_min, k.v);
    x_max = std::max(x_max, k.u);
    y_max = std::max(y_max, k.v);
  }
  if (!any) {
    throw DegeneratePose("degenerate pose: no keypoint with positive confidence");
  }
  return Box{
    x_min, y_min, std::max(x_max - x_min, kMinBoxExtent), std::max(y_max - y_min, kMinBoxExtent)};
}

std::pair<double, double> hip_center(const Pose & pose)
{
  const auto & left = pose[Joint::LeftHip];
  const auto & right = pose[Joint::RightHip];
  if (left.c > 0.0 && right.c > 0.0) {
    return {0.5 * (left.u + right.u), 0.5 * (left.v + right.v)};
  }
  if (left.c > 0.0) {
    return {left.u, left.v};
  }
  if (right.c > 0.0) {
    return {right.u, right.v};
  }
  const Box box = enclosing_box(pose);
  return {box.x + 0.5 * box.w, box.y + 0.5 * box.h};
}

PoseGeometry pose_geometry(const Pose & pose, double image_width)
{
  if (!(image_width > 0.0) || !std::isfinite(image_width)) {
    throw std::invalid_argument("image width must be positive");
  }
  const Box box = enclosing_box(pose);
  const auto [u_hip, v_hip] = hip_center(pose);
  return PoseGeometry{u_hip, v_hip, box.w, box.h, image_width};
}

NormalizedPose normalize_pose(const Pose & pose, double image_width)
{
  const PoseGeometry g = pose_geometry(pose, image_width);
  NormalizedPose out;
  out.subset = KeypointSubset::Full;
  out.values.reserve(3 * kNumKeypoints);
  const double u_offset = g.u_hip / g.w_image;
  for (const auto & k : pose.keypoints()) {
    out.values.push_back((k.u - g.u_hip) / g.w_box + u_offset);
    out.values.push_back((k.v - g.v_hip) / g.h_box);
    out.values.push_back(k.c);
  }
  return out;
}

NormalizedPose select_subset(const NormalizedPose & full, KeypointSubset subset)
{
  if (full.subset != KeypointSubset::Full || full.values.size() != 3 * kNumKeypoints) {
    throw std::invalid_argument("select_subset expects a full 51-value normalized pose");
  }
  const auto begin = full.values.begin() + static_cast<std::ptrdiff_t>(3 * subset_offset(subset));
  const auto count = static_cast<std::ptrdiff_t>(subset_width(subset));
  return NormalizedPose{std::vector<double>(begin, begin + count), subset};
}

}  // namespace looking
