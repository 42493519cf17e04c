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

#include "looking/synth.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace looking
{

namespace
{

struct HeadPoint
{
  double x;  ///< right of the head center when facing the camera, in head radii
  double y;  ///< down
  double z;  ///< toward the camera
};

// nose, left eye, right eye, left ear, right ear. The person's left side is
// image-right when they face the camera.
constexpr std::array<HeadPoint, 5> kHeadTemplate = {{
  {0.0, 0.25, 1.0},
  {0.38, -0.10, 0.82},
  {-0.38, -0.10, 0.82},
  {0.98, 0.05, -0.15},
  {-0.98, 0.05, -0.15},
}};

constexpr double kHeadRadius = 0.06;       // fraction of height
constexpr double kHeadCenterHeight = 0.93; // above the feet, fraction of height

}  // namespace

void SynthConfig::validate() const
{
  if (!(yaw_threshold > 0.0 && yaw_threshold < std::numbers::pi / 2.0)) {
    throw std::invalid_argument("yaw_threshold must be in (0, pi/2)");
  }
  if (!(noise_sigma >= 0.0)) {
    throw std::invalid_argument("noise_sigma must be non-negative");
  }
  if (peds_min > peds_max) {
    throw std::invalid_argument("peds_min exceeds peds_max");
  }
  if (image_width <= 0 || image_height <= 0) {
    throw std::invalid_argument("image size must be positive");
  }
  if (!(min_height_px > 0.0 && min_height_px <= max_height_px)) {
    throw std::invalid_argument("invalid pedestrian height range");
  }
}

PedestrianParams sample_pedestrian(const SynthConfig & cfg, Rng & rng)
{
  const double half_pi = std::numbers::pi / 2.0;
  PedestrianParams p;
  p.height_px = rng.uniform(cfg.min_height_px, cfg.max_height_px);
  p.foot_u = rng.uniform(0.05, 0.95) * cfg.image_width;
  p.foot_v = rng.uniform(0.55, 0.98) * cfg.image_height;
  p.head_yaw = rng.uniform(-half_pi, half_pi);
  p.body_yaw = rng.uniform(-half_pi, half_pi);
  p.head_lean = rng.uniform(-0.02, 0.02);
  p.arm_swing = rng.uniform(-0.05, 0.05);
  p.leg_stride = rng.uniform(-0.06, 0.06);
  for (auto & c : p.body_confidence) {
    c = rng.uniform(0.5, 1.0);
  }
  return p;
}

Pose render_pedestrian(const PedestrianParams & params, double noise_sigma, Rng & rng)
{
  const double h = params.height_px;
  const double r = kHeadRadius * h;
  const double head_u = params.foot_u + params.head_lean * h;
  const double head_v = params.foot_v - kHeadCenterHeight * h;
  const double cos_yaw = std::cos(params.head_yaw);
  const double sin_yaw = std::sin(params.head_yaw);

  Pose::Keypoints kps{};
  for (std::size_t i = 0; i < kHeadTemplate.size(); ++i) {
    const auto & pt = kHeadTemplate[i];
    const double x = pt.x * cos_yaw + pt.z * sin_yaw;
    const double z = -pt.x * sin_yaw + pt.z * cos_yaw;
    kps[i] = Keypoint{head_u + r * x, head_v + r * pt.y, std::clamp(0.5 + 0.5 * z, 0.05, 1.0)};
  }

  // body template: (half-width, height above the feet) in fractions of height
  const double narrow = std::max(std::abs(std::cos(params.body_yaw)), 0.3);
  const double shoulder = 0.12 * narrow;
  const double hip = 0.07 * narrow;
  const double swing = params.arm_swing;
  const double stride = params.leg_stride;
  const std::array<std::pair<double, double>, 12> body = {{
    {shoulder, 0.82},
    {-shoulder, 0.82},
    {shoulder + 0.02 + swing, 0.64},
    {-shoulder - 0.02 - swing, 0.64},
    {shoulder + 0.03 + 1.5 * swing, 0.47},
    {-shoulder - 0.03 - 1.5 * swing, 0.47},
    {hip, 0.50},
    {-hip, 0.50},
    {hip + stride, 0.27},
    {-hip - stride, 0.27},
    {hip + 1.5 * stride, 0.03},
    {-hip - 1.5 * stride, 0.03},
  }};
  for (std::size_t i = 0; i < body.size(); ++i) {
    kps[5 + i] = Keypoint{
      params.foot_u + body[i].first * h, params.foot_v - body[i].second * h, params.body_confidence[i]};
  }

  if (noise_sigma > 0.0) {
    for (auto & k : kps) {
      k.u += noise_sigma * rng.normal();
      k.v += noise_sigma * rng.normal();
    }
  }
  return Pose(kps);
}

Label label_for_yaw(double yaw, double threshold)
{
  return std::abs(yaw) < threshold ? Label::Looking : Label::NotLooking;
}

std::vector<ImageRecord> synth_generate(const SynthConfig & cfg)
{
  cfg.validate();
  std::vector<ImageRecord> records;
  records.reserve(cfg.n_images);
  const auto n_train = static_cast<std::size_t>(std::llround(0.70 * static_cast<double>(cfg.n_images)));
  const auto n_trainval = static_cast<std::size_t>(std::llround(0.85 * static_cast<double>(cfg.n_images)));
  for (std::size_t img = 0; img < cfg.n_images; ++img) {
    // one stream per image so images are independent of generation order
    Rng rng(derive_seed(cfg.seed, 0x5000 + img));
    ImageRecord rec;
    rec.image_id = "synth_" + std::to_string(img);
    rec.width = cfg.image_width;
    rec.height = cfg.image_height;
    rec.split = img < n_train ? Split::Train : (img < n_trainval ? Split::Val : Split::Test);
    const std::size_t n_peds = cfg.peds_min + static_cast<std::size_t>(rng.below(cfg.peds_max - cfg.peds_min + 1));
    for (std::size_t k = 0; k < n_peds; ++k) {
      const PedestrianParams params = sample_pedestrian(cfg, rng);
      const Pose pose = render_pedestrian(params, cfg.noise_sigma, rng);
      AnnotatedInstance inst;
      inst.gt_box = enclosing_box(pose);
      inst.label = label_for_yaw(params.head_yaw, cfg.yaw_threshold);
      inst.track_id = rec.image_id + "_" + std::to_string(k);
      attach_pose(inst, pose);
      rec.instances.push_back(std::move(inst));
    }
    records.push_back(std::move(rec));
  }
  return records;
}

}  // namespace looking
