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

#ifndef LOOKING__POSE_HPP_
#define LOOKING__POSE_HPP_

#include <array>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace looking
{

inline constexpr std::size_t kNumKeypoints = 17;

/// COCO-17 keypoint indices.
enum class Joint : std::size_t
{
  Nose = 0,
  LeftEye,
  RightEye,
  LeftEar,
  RightEar,
  LeftShoulder,
  RightShoulder,
  LeftElbow,
  RightElbow,
  LeftWrist,
  RightWrist,
  LeftHip,
  RightHip,
  LeftKnee,
  RightKnee,
  LeftAnkle,
  RightAnkle,
};

inline constexpr std::size_t index_of(Joint j) { return static_cast<std::size_t>(j); }

extern const std::array<std::string_view, kNumKeypoints> kKeypointNames;

/// Index of a COCO keypoint name, if it is one.
std::optional<std::size_t> keypoint_index(std::string_view name);

struct Keypoint
{
  double u{0.0};  ///< px
  double v{0.0};  ///< px
  double c{0.0};  ///< detector confidence in [0, 1]

  bool operator==(const Keypoint &) const = default;
};

/// Axis-aligned box, top-left corner plus extent, in px.
struct Box
{
  double x{0.0};
  double y{0.0};
  double w{0.0};
  double h{0.0};

  bool operator==(const Box &) const = default;
};

/// Raised for poses with no usable keypoint.
class DegeneratePose : public std::invalid_argument
{
public:
  using std::invalid_argument::invalid_argument;
};

/// Exactly 17 keypoints in COCO order.
class Pose
{
public:
  using Keypoints = std::array<Keypoint, kNumKeypoints>;

  Pose() = default;
  /// Validates finiteness, confidence range and that at least one keypoint is visible.
  explicit Pose(const Keypoints & keypoints);
  /// Same, from a runtime-sized list; the size must be 17.
  static Pose from_vector(const std::vector<Keypoint> & keypoints);

  const Keypoints & keypoints() const { return keypoints_; }
  const Keypoint & operator[](std::size_t i) const { return keypoints_[i]; }
  const Keypoint & operator[](Joint j) const { return keypoints_[index_of(j)]; }

  bool operator==(const Pose &) const = default;

private:
  Keypoints keypoints_{};
};

struct PoseGeometry
{
  double u_hip{0.0};
  double v_hip{0.0};
  double w_box{1.0};
  double h_box{1.0};
  double w_image{1.0};
};

enum class KeypointSubset
{
  Full,
  Head,
  Body,
};

std::string_view to_string(KeypointSubset subset);
KeypointSubset subset_from_string(std::string_view name);

/// Number of keypoints kept by a subset (17, 5 or 12).
std::size_t subset_size(KeypointSubset subset);
/// First COCO index kept by a subset (subsets are contiguous ranges).
std::size_t subset_offset(KeypointSubset subset);
/// Network input width 3K for a subset.
inline std::size_t subset_width(KeypointSubset subset) { return 3 * subset_size(subset); }

struct NormalizedPose
{
  std::vector<double> values;  ///< (u_hat, v_hat, c) per keypoint
  KeypointSubset subset{KeypointSubset::Full};

  bool operator==(const NormalizedPose &) const = default;
};

/// Minimum box extent used by enclosing_box, in px.
inline constexpr double kMinBoxExtent = 1.0;

/// Tight box around keypoints with c > 0. Width and height are clamped to at
/// least kMinBoxExtent. Throws DegeneratePose when no keypoint is visible.
Box enclosing_box(const Pose & pose);

/// Mean of the two hips; falls back to the visible hip, then to the center
/// of the enclosing box.
std::pair<double, double> hip_center(const Pose & pose);

PoseGeometry pose_geometry(const Pose & pose, double image_width);

/// Hip-centered normalization of the full pose:
///   u_hat = (u - u_hip) / w_box + u_hip / w_image
///   v_hat = (v - v_hip) / h_box
/// Confidence is passed through.
NormalizedPose normalize_pose(const Pose & pose, double image_width);

/// Slice a Full normalized pose down to a subset. Throws std::invalid_argument
/// if the input is not Full.
NormalizedPose select_subset(const NormalizedPose & full, KeypointSubset subset);

/// normalize_pose followed by select_subset.
inline NormalizedPose pose_features(const Pose & pose, double image_width, KeypointSubset subset)
{
  return select_subset(normalize_pose(pose, image_width), subset);
}

}  // namespace looking

#endif  // LOOKING__POSE_HPP_
