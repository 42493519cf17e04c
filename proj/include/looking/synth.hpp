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

/// \file synth.hpp
/// \brief Parametric pedestrian generator with a known looking/not-looking rule.
///
/// Each pedestrian is a fixed skeleton template scaled to its pixel height.
/// The head is a rigid set of five 3D points (nose, eyes, ears) rotated by a
/// yaw angle and projected orthographically; confidence of a head keypoint
/// grows with how much it faces the camera. The label depends on the head yaw
/// only, so body keypoints carry no label information.

#ifndef LOOKING__SYNTH_HPP_
#define LOOKING__SYNTH_HPP_

#include <array>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <vector>

#include "looking/dataset.hpp"
#include "looking/pose.hpp"
#include "looking/rng.hpp"

namespace looking
{

struct SynthConfig
{
  std::size_t n_images{100};
  std::size_t peds_min{1};
  std::size_t peds_max{5};
  double yaw_threshold{std::numbers::pi / 8.0};  ///< radians; looking iff |yaw| < threshold
  double noise_sigma{2.0};                        ///< px
  std::uint64_t seed{0};
  int image_width{1920};
  int image_height{1080};
  double min_height_px{100.0};
  double max_height_px{400.0};

  void validate() const;
};

struct PedestrianParams
{
  double foot_u{0.0};     ///< px, horizontal position of the feet
  double foot_v{0.0};     ///< px, vertical position of the feet
  double height_px{200.0};
  double head_yaw{0.0};   ///< radians, 0 faces the camera, positive turns to the person's left
  double body_yaw{0.0};   ///< radians, narrows the shoulders and hips
  double head_lean{0.0};  ///< fraction of height, horizontal head offset
  double arm_swing{0.0};  ///< fraction of height
  double leg_stride{0.0}; ///< fraction of height
  std::array<double, 12> body_confidence{};  ///< for COCO keypoints 5..16
};

/// Draws the random parameters of one pedestrian.
PedestrianParams sample_pedestrian(const SynthConfig & cfg, Rng & rng);

/// Renders the 17 keypoints, adding isotropic Gaussian pixel noise.
Pose render_pedestrian(const PedestrianParams & params, double noise_sigma, Rng & rng);

/// Looking iff |yaw| < threshold.
Label label_for_yaw(double yaw, double threshold);

/// Generates images with split assignment by image index (70 / 15 / 15).
/// Each instance's box is the enclosing box of its own keypoints, so
/// detections match their ground truth at IoU 1.
std::vector<ImageRecord> synth_generate(const SynthConfig & cfg);

}  // namespace looking

#endif  // LOOKING__SYNTH_HPP_
