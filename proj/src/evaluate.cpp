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

#include "looking/evaluate.hpp"

#include <spdlog/fmt/fmt.h>

#include <stdexcept>

#include "looking/matching.hpp"
#include "looking/train.hpp"

namespace looking
{

using nlohmann::ordered_json;

ScoredSplit score_split(const Checkpoint & checkpoint, std::span<const ImageRecord> records, const EvalOptions & options)
{
  ScoredSplit out;
  std::vector<TrainSample> features;
  for (const auto & rec : records) {
    if (rec.split != options.split) {
      continue;
    }
    std::vector<Box> gt;
    std::vector<int> gt_labels;
    for (const auto & inst : rec.instances) {
      if (const auto y = binary_label(inst.label)) {
        gt.push_back(inst.gt_box);
        gt_labels.push_back(*y);
      }
    }
    std::vector<Detection> detections;
    std::vector<Box> det_boxes;
    for (const auto & inst : rec.instances) {
      if (inst.pose) {
        detections.push_back(make_detection(*inst.pose));
        det_boxes.push_back(detections.back().box);
      }
    }
    out.n_gt += gt.size();
    out.n_recalled += count_recalled(gt, det_boxes);
    for (const auto & m : match_instances(gt, detections, kMatchIouThreshold)) {
      features.push_back(TrainSample{
        pose_features(detections[m.det_index].pose, rec.width, checkpoint.subset).values, gt_labels[m.gt_index]});
      out.items.push_back(ScoredInstance{0.0, gt_labels[m.gt_index], gt[m.gt_index].h, options.dataset_tag});
    }
  }
  if (!features.empty()) {
    const Vector probs = predict_probs(checkpoint.params, stack_features(features));
    for (std::size_t i = 0; i < out.items.size(); ++i) {
      out.items[i].score = probs(static_cast<Eigen::Index>(i));
    }
  }
  return out;
}

EvalReport evaluate(const Checkpoint & checkpoint, std::span<const ImageRecord> records, const EvalOptions & options)
{
  const ScoredSplit scored = score_split(checkpoint, records, options);
  if (scored.n_gt == 0) {
    throw std::invalid_argument(
      "no labeled ground truth in the " + std::string(to_string(options.split)) + " split");
  }
  if (scored.items.empty()) {
    throw std::invalid_argument("no labeled instance is matched by a detection");
  }

  EvalReport report;
  report.dataset_tag = options.dataset_tag;
  report.n_gt = scored.n_gt;
  report.n_matched = scored.items.size();
  report.recall_iou50 = static_cast<double>(scored.n_recalled) / static_cast<double>(scored.n_gt);
  const BalancedAp ap = balanced_average_precision(scored.items, kBalancedSeeds);
  report.ap_seeds = ap.seeds;
  report.ap_mean = ap.mean;
  report.ap_std = ap.std;
  if (options.with_quartiles && scored.items.size() >= 4) {
    report.quartiles = quartile_breakdown(scored.items, kBalancedSeeds);
  }
  return report;
}

ordered_json report_to_json(const EvalReport & report)
{
  ordered_json quartiles = ordered_json::array();
  if (report.quartiles) {
    for (const auto & b : report.quartiles->buckets) {
      ordered_json q;
      q["lo_px"] = b.lo_px;
      q["hi_px"] = b.hi_px ? ordered_json(*b.hi_px) : ordered_json(nullptr);
      q["ap"] = b.ap ? ordered_json(b.ap->mean) : ordered_json(nullptr);
      q["ap_std"] = b.ap ? ordered_json(b.ap->std) : ordered_json(nullptr);
      q["n"] = b.n;
      if (!b.note.empty()) {
        q["note"] = b.note;
      }
      quartiles.push_back(std::move(q));
    }
  }
  ordered_json j;
  j["dataset"] = report.dataset_tag;
  j["recall_iou50"] = report.recall_iou50;
  j["ap_mean"] = report.ap_mean;
  j["ap_std"] = report.ap_std;
  j["ap_seeds"] = report.ap_seeds;
  j["quartiles"] = std::move(quartiles);
  j["n_gt"] = report.n_gt;
  j["n_matched"] = report.n_matched;
  return j;
}

std::string render_report_table(std::span<const EvalReport> reports)
{
  std::string out = fmt::format("{:<20} {:>16} {:>10} {:>10} {:>10}\n", "dataset", "AP [%]", "[recall]", "n_gt", "n_matched");
  for (const auto & r : reports) {
    out += fmt::format(
      "{:<20} {:>16} {:>10} {:>10} {:>10}\n", r.dataset_tag,
      fmt::format("{:.1f} +/- {:.1f}", 100.0 * r.ap_mean, 100.0 * r.ap_std),
      fmt::format("[{:.1f}]", 100.0 * r.recall_iou50), r.n_gt, r.n_matched);
    if (r.quartiles) {
      for (const auto & b : r.quartiles->buckets) {
        const std::string range =
          b.hi_px ? fmt::format("{:.0f}-{:.0f} px", b.lo_px, *b.hi_px) : fmt::format("{:.0f}+ px", b.lo_px);
        const std::string ap = b.ap ? fmt::format("{:.1f}", 100.0 * b.ap->mean) : std::string("n/a");
        out += fmt::format("  {:<18} {:>16} {:>10}\n", range, ap, b.n);
      }
    }
  }
  return out;
}

}  // namespace looking
