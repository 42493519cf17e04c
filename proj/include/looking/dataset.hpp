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

/// \file dataset.hpp
/// \brief Canonical annotation records, the JSONL schema, dataset adapters,
/// vote consensus and balanced negative sampling.

#ifndef LOOKING__DATASET_HPP_
#define LOOKING__DATASET_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "looking/pose.hpp"

namespace looking
{

enum class Label
{
  Looking,
  NotLooking,
  Ambiguous,
  Unlabeled,
};

enum class Vote
{
  Looking,
  NotLooking,
  Ambiguous,
};

enum class Consensus
{
  Looking,
  NotLooking,
  Discarded,
};

enum class Split
{
  Train,
  Val,
  Test,
};

std::string_view to_string(Vote vote);
std::string_view to_string(Split split);
std::string_view to_string(Consensus consensus);
/// "looking" / "not_looking" / "ambiguous"; Unlabeled has no string form.
std::optional<std::string_view> label_string(Label label);

std::optional<Vote> vote_from_string(std::string_view s);
std::optional<Split> split_from_string(std::string_view s);
std::optional<Label> label_from_string(std::string_view s);

/// Number of annotators per instance.
inline constexpr std::size_t kVotesPerInstance = 4;
/// Agreeing votes needed for a consensus label.
inline constexpr std::size_t kConsensusVotes = 3;
/// Detections must overlap their ground truth by at least this IoU.
inline constexpr double kMatchIouThreshold = 0.3;

/// 3-of-4 agreement on Looking or NotLooking; anything else is Discarded.
/// Throws std::invalid_argument unless exactly four votes are given.
Consensus consensus_label(std::span<const Vote> votes);

/// Label stored for a consensus outcome (Discarded maps to Ambiguous).
Label label_for(Consensus consensus);

/// 1 for Looking, 0 for NotLooking, nullopt otherwise.
std::optional<int> binary_label(Label label);

struct AnnotatedInstance
{
  Box gt_box;
  Label label{Label::Unlabeled};
  std::optional<std::vector<Vote>> votes;
  std::optional<Pose> pose;
  std::optional<double> match_iou;  ///< IoU(gt_box, enclosing_box(pose)) when pose is set
  std::optional<std::string> track_id;

  bool operator==(const AnnotatedInstance &) const = default;
};

/// Sets pose and match_iou together.
void attach_pose(AnnotatedInstance & instance, const Pose & pose);

struct ImageRecord
{
  std::string image_id;
  int width{0};
  int height{0};
  Split split{Split::Train};
  std::vector<AnnotatedInstance> instances;

  bool operator==(const ImageRecord &) const = default;
};

/// Schema violation with the offending location.
class SchemaError : public std::runtime_error
{
public:
  SchemaError(std::size_t line, const std::string & field, const std::string & message);

  std::size_t line() const { return line_; }
  const std::string & field() const { return field_; }

private:
  std::size_t line_;
  std::string field_;
};

struct ReadOptions
{
  /// Reject unknown fields instead of warning about them.
  bool strict{false};
  /// Optional sink for non-fatal diagnostics; logged when absent.
  std::vector<std::string> * warnings{nullptr};
};

nlohmann::json record_to_json(const ImageRecord & record);
/// Parses and validates one canonical record. Votes are resolved to a label
/// when the label is null and all four votes are present.
ImageRecord record_from_json(const nlohmann::json & j, std::size_t line, const ReadOptions & options = {});

std::string to_jsonl(std::span<const ImageRecord> records);
void write_jsonl(const std::filesystem::path & path, std::span<const ImageRecord> records);
std::vector<ImageRecord> read_jsonl(std::istream & in, const ReadOptions & options = {});
std::vector<ImageRecord> read_jsonl(const std::filesystem::path & path, const ReadOptions & options = {});

enum class DatasetLayout
{
  Canonical,
  JaadLike,
  LookLike,
};

DatasetLayout layout_from_string(std::string_view name);

/// Reads a dataset in one of the supported layouts into canonical records.
///
/// Canonical: `path` is a JSONL file.
///
/// JaadLike: `path` is a directory holding
///   annotations.csv  video_id,frame,width,height,track_id,x,y,w,h,looking
///                    (looking is 1, 0, or empty/-1 for unlabeled)
///   splits.csv       video_id,split  (whole videos go to one split)
///   keypoints/<video_id>_<frame>.json
///
/// LookLike: `path` is a directory holding
///   annotations.csv  image_id,width,height,split,x,y,w,h,vote1,vote2,vote3,vote4[,track_id]
///   keypoints/<image_id>.json
///
/// Keypoint files hold pose-detector output: a list of {"keypoints": [51 numbers]}
/// in COCO order, or {"keypoint_order": [names], "predictions": [...]} when the
/// detector uses another order, which is re-indexed to COCO-17. Detections are
/// matched to the annotated boxes with match_instances at IoU 0.3.
std::vector<ImageRecord> import_dataset(
  DatasetLayout layout, const std::filesystem::path & path, const ReadOptions & options = {});

/// For each seed s in [0, n_seeds), all positives plus as many negatives drawn
/// uniformly without replacement. Each set is sorted ascending. Throws
/// std::invalid_argument when there are no positives or fewer negatives than
/// positives.
std::vector<std::vector<std::size_t>> balanced_samples(std::span<const int> labels, std::size_t n_seeds = 10);

/// Number of resampling rounds for balanced evaluation.
inline constexpr std::size_t kBalancedSeeds = 10;

}  // namespace looking

#endif  // LOOKING__DATASET_HPP_
