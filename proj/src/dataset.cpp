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

#include "looking/dataset.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "looking/fileutil.hpp"
#include "looking/matching.hpp"
#include "looking/rng.hpp"

namespace looking
{

using nlohmann::json;

std::string_view to_string(Vote vote)
{
  switch (vote) {
    case Vote::Looking:
      return "looking";
    case Vote::NotLooking:
      return "not_looking";
    case Vote::Ambiguous:
      return "ambiguous";
  }
  return "ambiguous";
}

std::string_view to_string(Split split)
{
  switch (split) {
    case Split::Train:
      return "train";
    case Split::Val:
      return "val";
    case Split::Test:
      return "test";
  }
  return "train";
}

std::string_view to_string(Consensus consensus)
{
  switch (consensus) {
    case Consensus::Looking:
      return "looking";
    case Consensus::NotLooking:
      return "not_looking";
    case Consensus::Discarded:
      return "discarded";
  }
  return "discarded";
}

std::optional<std::string_view> label_string(Label label)
{
  switch (label) {
    case Label::Looking:
      return "looking";
    case Label::NotLooking:
      return "not_looking";
    case Label::Ambiguous:
      return "ambiguous";
    case Label::Unlabeled:
      return std::nullopt;
  }
  return std::nullopt;
}

std::optional<Vote> vote_from_string(std::string_view s)
{
  if (s == "looking") {
    return Vote::Looking;
  }
  if (s == "not_looking") {
    return Vote::NotLooking;
  }
  if (s == "ambiguous") {
    return Vote::Ambiguous;
  }
  return std::nullopt;
}

std::optional<Split> split_from_string(std::string_view s)
{
  if (s == "train") {
    return Split::Train;
  }
  if (s == "val") {
    return Split::Val;
  }
  if (s == "test") {
    return Split::Test;
  }
  return std::nullopt;
}

std::optional<Label> label_from_string(std::string_view s)
{
  if (s == "looking") {
    return Label::Looking;
  }
  if (s == "not_looking") {
    return Label::NotLooking;
  }
  if (s == "ambiguous") {
    return Label::Ambiguous;
  }
  return std::nullopt;
}

Consensus consensus_label(std::span<const Vote> votes)
{
  if (votes.size() != kVotesPerInstance) {
    throw std::invalid_argument(
      "consensus needs exactly 4 votes, got " + std::to_string(votes.size()));
  }
  const auto looking = std::count(votes.begin(), votes.end(), Vote::Looking);
  const auto not_looking = std::count(votes.begin(), votes.end(), Vote::NotLooking);
  if (static_cast<std::size_t>(looking) >= kConsensusVotes) {
    return Consensus::Looking;
  }
  if (static_cast<std::size_t>(not_looking) >= kConsensusVotes) {
    return Consensus::NotLooking;
  }
  return Consensus::Discarded;
}

Label label_for(Consensus consensus)
{
  switch (consensus) {
    case Consensus::Looking:
      return Label::Looking;
    case Consensus::NotLooking:
      return Label::NotLooking;
    case Consensus::Discarded:
      return Label::Ambiguous;
  }
  return Label::Ambiguous;
}

std::optional<int> binary_label(Label label)
{
  if (label == Label::Looking) {
    return 1;
  }
  if (label == Label::NotLooking) {
    return 0;
  }
  return std::nullopt;
}

void attach_pose(AnnotatedInstance & instance, const Pose & pose)
{
  instance.pose = pose;
  instance.match_iou = iou(instance.gt_box, enclosing_box(pose));
}

SchemaError::SchemaError(std::size_t line, const std::string & field, const std::string & message)
: std::runtime_error(
    "line " + std::to_string(line) + (field.empty() ? "" : ", field '" + field + "'") + ": " + message),
  line_(line),
  field_(field)
{
}

namespace
{

void warn(const ReadOptions & options, const std::string & message)
{
  if (options.warnings != nullptr) {
    options.warnings->push_back(message);
  } else {
    spdlog::warn("{}", message);
  }
}

void check_fields(
  const json & object, std::initializer_list<std::string_view> known, std::size_t line, const std::string & where,
  const ReadOptions & options)
{
  for (const auto & [key, value] : object.items()) {
    if (std::find(known.begin(), known.end(), key) != known.end()) {
      continue;
    }
    const std::string field = where.empty() ? key : where + "." + key;
    if (options.strict) {
      throw SchemaError(line, field, "unknown field");
    }
    warn(options, "line " + std::to_string(line) + ": ignoring unknown field '" + field + "'");
  }
}

double number_at(const json & array, std::size_t i, std::size_t line, const std::string & field)
{
  const auto & v = array[i];
  if (!v.is_number()) {
    throw SchemaError(line, field, "expected a number");
  }
  return v.get<double>();
}

Box parse_box(const json & j, std::size_t line, const std::string & field)
{
  if (!j.is_array() || j.size() != 4) {
    throw SchemaError(line, field, "expected [x, y, w, h]");
  }
  Box box{number_at(j, 0, line, field), number_at(j, 1, line, field), number_at(j, 2, line, field),
          number_at(j, 3, line, field)};
  if (!(box.w > 0.0) || !(box.h > 0.0)) {
    throw SchemaError(line, field, "box width and height must be positive");
  }
  return box;
}

Pose parse_keypoints(const json & j, std::size_t line, const std::string & field)
{
  if (!j.is_array() || j.size() != kNumKeypoints) {
    throw SchemaError(line, field, "expected 17 [u, v, c] triples");
  }
  Pose::Keypoints kps{};
  for (std::size_t i = 0; i < kNumKeypoints; ++i) {
    const auto & triple = j[i];
    const std::string sub = field + "[" + std::to_string(i) + "]";
    if (!triple.is_array() || triple.size() != 3) {
      throw SchemaError(line, sub, "expected [u, v, c]");
    }
    kps[i] = Keypoint{number_at(triple, 0, line, sub), number_at(triple, 1, line, sub), number_at(triple, 2, line, sub)};
  }
  try {
    return Pose(kps);
  } catch (const std::invalid_argument & e) {
    throw SchemaError(line, field, e.what());
  }
}

const json & required(const json & object, const char * key, std::size_t line, const std::string & where)
{
  const auto it = object.find(key);
  if (it == object.end()) {
    throw SchemaError(line, where.empty() ? key : where + "." + key, "missing required field");
  }
  return *it;
}

AnnotatedInstance parse_instance(const json & j, std::size_t line, const std::string & where, const ReadOptions & options)
{
  if (!j.is_object()) {
    throw SchemaError(line, where, "instance must be an object");
  }
  check_fields(j, {"bbox", "label", "votes", "keypoints", "track_id"}, line, where, options);

  AnnotatedInstance inst;
  inst.gt_box = parse_box(required(j, "bbox", line, where), line, where + ".bbox");

  if (const auto it = j.find("votes"); it != j.end() && !it->is_null()) {
    if (!it->is_array() || it->size() > kVotesPerInstance) {
      throw SchemaError(line, where + ".votes", "expected a list of at most 4 votes");
    }
    std::vector<Vote> votes;
    for (const auto & v : *it) {
      const auto vote = v.is_string() ? vote_from_string(v.get<std::string>()) : std::nullopt;
      if (!vote) {
        throw SchemaError(line, where + ".votes", "vote must be looking, not_looking or ambiguous");
      }
      votes.push_back(*vote);
    }
    inst.votes = std::move(votes);
  }

  std::optional<Label> explicit_label;
  if (const auto it = j.find("label"); it != j.end() && !it->is_null()) {
    explicit_label = it->is_string() ? label_from_string(it->get<std::string>()) : std::nullopt;
    if (!explicit_label) {
      throw SchemaError(line, where + ".label", "label must be looking, not_looking, ambiguous or null");
    }
  }
  if (inst.votes && inst.votes->size() == kVotesPerInstance) {
    const Label resolved = label_for(consensus_label(*inst.votes));
    if (explicit_label && *explicit_label != resolved) {
      throw SchemaError(line, where + ".label", "label contradicts the 3-of-4 vote consensus");
    }
    inst.label = resolved;
  } else {
    inst.label = explicit_label.value_or(Label::Unlabeled);
  }

  if (const auto it = j.find("keypoints"); it != j.end() && !it->is_null()) {
    const Pose pose = parse_keypoints(*it, line, where + ".keypoints");
    attach_pose(inst, pose);
    if (*inst.match_iou < kMatchIouThreshold) {
      throw SchemaError(
        line, where + ".keypoints", "pose box overlaps bbox with IoU " + std::to_string(*inst.match_iou) + " < 0.3");
    }
  }

  if (const auto it = j.find("track_id"); it != j.end() && !it->is_null()) {
    if (!it->is_string()) {
      throw SchemaError(line, where + ".track_id", "track_id must be a string or null");
    }
    inst.track_id = it->get<std::string>();
  }
  return inst;
}

int positive_int(const json & j, std::size_t line, const char * field)
{
  if (!j.is_number_integer() || j.get<long long>() <= 0 || j.get<long long>() > INT32_MAX) {
    throw SchemaError(line, field, "expected a positive integer");
  }
  return j.get<int>();
}

}  // namespace

json record_to_json(const ImageRecord & record)
{
  json instances = json::array();
  for (const auto & inst : record.instances) {
    json ji;
    ji["bbox"] = {inst.gt_box.x, inst.gt_box.y, inst.gt_box.w, inst.gt_box.h};
    const auto label = label_string(inst.label);
    ji["label"] = label ? json(std::string(*label)) : json(nullptr);
    if (inst.votes) {
      json votes = json::array();
      for (const auto v : *inst.votes) {
        votes.push_back(std::string(to_string(v)));
      }
      ji["votes"] = std::move(votes);
    } else {
      ji["votes"] = nullptr;
    }
    if (inst.pose) {
      json kps = json::array();
      for (const auto & k : inst.pose->keypoints()) {
        kps.push_back({k.u, k.v, k.c});
      }
      ji["keypoints"] = std::move(kps);
    } else {
      ji["keypoints"] = nullptr;
    }
    ji["track_id"] = inst.track_id ? json(*inst.track_id) : json(nullptr);
    instances.push_back(std::move(ji));
  }
  return json{
    {"image_id", record.image_id},
    {"width", record.width},
    {"height", record.height},
    {"split", std::string(to_string(record.split))},
    {"instances", std::move(instances)},
  };
}

ImageRecord record_from_json(const json & j, std::size_t line, const ReadOptions & options)
{
  if (!j.is_object()) {
    throw SchemaError(line, "", "record must be a JSON object");
  }
  check_fields(j, {"image_id", "width", "height", "split", "instances"}, line, "", options);

  ImageRecord rec;
  const auto & id = required(j, "image_id", line, "");
  if (!id.is_string() || id.get<std::string>().empty()) {
    throw SchemaError(line, "image_id", "expected a non-empty string");
  }
  rec.image_id = id.get<std::string>();
  rec.width = positive_int(required(j, "width", line, ""), line, "width");
  rec.height = positive_int(required(j, "height", line, ""), line, "height");
  const auto & split = required(j, "split", line, "");
  const auto parsed_split = split.is_string() ? split_from_string(split.get<std::string>()) : std::nullopt;
  if (!parsed_split) {
    throw SchemaError(line, "split", "split must be train, val or test");
  }
  rec.split = *parsed_split;
  const auto & instances = required(j, "instances", line, "");
  if (!instances.is_array()) {
    throw SchemaError(line, "instances", "expected a list");
  }
  for (std::size_t i = 0; i < instances.size(); ++i) {
    rec.instances.push_back(parse_instance(instances[i], line, "instances[" + std::to_string(i) + "]", options));
  }
  return rec;
}

std::string to_jsonl(std::span<const ImageRecord> records)
{
  std::string out;
  for (const auto & r : records) {
    out += record_to_json(r).dump();
    out += '\n';
  }
  return out;
}

void write_jsonl(const std::filesystem::path & path, std::span<const ImageRecord> records)
{
  write_file_atomic(path, to_jsonl(records));
}

std::vector<ImageRecord> read_jsonl(std::istream & in, const ReadOptions & options)
{
  std::vector<ImageRecord> records;
  std::unordered_set<std::string> seen;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (std::all_of(text.begin(), text.end(), [](unsigned char ch) { return std::isspace(ch); })) {
      continue;
    }
    json j;
    try {
      j = json::parse(text);
    } catch (const json::parse_error & e) {
      throw SchemaError(line, "", std::string("invalid JSON: ") + e.what());
    }
    ImageRecord rec = record_from_json(j, line, options);
    if (!seen.insert(rec.image_id).second) {
      throw SchemaError(line, "image_id", "duplicate image_id '" + rec.image_id + "'");
    }
    records.push_back(std::move(rec));
  }
  return records;
}

std::vector<ImageRecord> read_jsonl(const std::filesystem::path & path, const ReadOptions & options)
{
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open dataset " + path.string());
  }
  return read_jsonl(in, options);
}

DatasetLayout layout_from_string(std::string_view name)
{
  if (name == "canonical") {
    return DatasetLayout::Canonical;
  }
  if (name == "jaad") {
    return DatasetLayout::JaadLike;
  }
  if (name == "look") {
    return DatasetLayout::LookLike;
  }
  throw std::invalid_argument("unknown dataset layout '" + std::string(name) + "'");
}

namespace
{

struct CsvTable
{
  std::vector<std::string> header;
  std::vector<std::pair<std::size_t, std::vector<std::string>>> rows;  ///< (line, cells)

  std::optional<std::size_t> column(std::string_view name) const
  {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) {
      return std::nullopt;
    }
    return static_cast<std::size_t>(it - header.begin());
  }
};

std::string trim(std::string_view s)
{
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) {
    return {};
  }
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_csv_line(const std::string & line)
{
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    cells.push_back(trim(cell));
  }
  if (!line.empty() && line.back() == ',') {
    cells.emplace_back();
  }
  return cells;
}

CsvTable read_csv(const std::filesystem::path & path)
{
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open " + path.string());
  }
  CsvTable table;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (trim(line).empty()) {
      continue;
    }
    auto cells = split_csv_line(line);
    if (table.header.empty()) {
      table.header = std::move(cells);
      continue;
    }
    if (cells.size() < table.header.size()) {
      cells.resize(table.header.size());
    }
    if (cells.size() != table.header.size()) {
      throw SchemaError(n, "", path.filename().string() + ": expected " + std::to_string(table.header.size()) + " columns");
    }
    table.rows.emplace_back(n, std::move(cells));
  }
  return table;
}

std::size_t require_column(const CsvTable & t, std::string_view name, const std::filesystem::path & path)
{
  const auto c = t.column(name);
  if (!c) {
    throw SchemaError(1, std::string(name), path.filename().string() + ": missing column");
  }
  return *c;
}

double parse_double(const std::string & s, std::size_t line, std::string_view field)
{
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) {
      throw std::invalid_argument(s);
    }
    return v;
  } catch (const std::exception &) {
    throw SchemaError(line, std::string(field), "expected a number, got '" + s + "'");
  }
}

int parse_positive_int(const std::string & s, std::size_t line, std::string_view field)
{
  const double v = parse_double(s, line, field);
  if (!(v > 0.0) || v != static_cast<double>(static_cast<long long>(v)) || v > INT32_MAX) {
    throw SchemaError(line, std::string(field), "expected a positive integer, got '" + s + "'");
  }
  return static_cast<int>(v);
}

std::vector<Pose> read_detections(const std::filesystem::path & file, const ReadOptions & options)
{
  std::vector<Pose> poses;
  if (!std::filesystem::exists(file)) {
    warn(options, "no keypoint file " + file.string() + "; instances left without pose");
    return poses;
  }
  json doc;
  try {
    doc = json::parse(read_file(file));
  } catch (const json::parse_error & e) {
    throw SchemaError(1, file.filename().string(), std::string("invalid JSON: ") + e.what());
  }

  std::vector<std::optional<std::size_t>> remap(kNumKeypoints);
  json predictions = doc;
  std::size_t n_source = kNumKeypoints;
  if (doc.is_object()) {
    if (!doc.contains("keypoint_order") || !doc.contains("predictions")) {
      throw SchemaError(1, file.filename().string(), "expected keypoint_order and predictions");
    }
    const auto & order = doc["keypoint_order"];
    n_source = order.size();
    for (std::size_t src = 0; src < order.size(); ++src) {
      if (!order[src].is_string()) {
        throw SchemaError(1, file.filename().string(), "keypoint_order entries must be names");
      }
      if (const auto coco = keypoint_index(order[src].get<std::string>())) {
        remap[*coco] = src;
      }
    }
    predictions = doc["predictions"];
  } else {
    for (std::size_t i = 0; i < kNumKeypoints; ++i) {
      remap[i] = i;
    }
  }
  if (!predictions.is_array()) {
    throw SchemaError(1, file.filename().string(), "expected a list of predictions");
  }

  for (std::size_t p = 0; p < predictions.size(); ++p) {
    const std::string field = file.filename().string() + "[" + std::to_string(p) + "].keypoints";
    const auto & pred = predictions[p];
    if (!pred.is_object() || !pred.contains("keypoints") || !pred["keypoints"].is_array() ||
        pred["keypoints"].size() != 3 * n_source) {
      throw SchemaError(1, field, "expected " + std::to_string(3 * n_source) + " numbers");
    }
    const auto & flat = pred["keypoints"];
    Pose::Keypoints kps{};
    for (std::size_t i = 0; i < kNumKeypoints; ++i) {
      if (!remap[i]) {
        continue;  // not provided by the detector: stays invisible
      }
      const std::size_t s = *remap[i];
      kps[i] = Keypoint{number_at(flat, 3 * s, 1, field), number_at(flat, 3 * s + 1, 1, field),
                        std::clamp(number_at(flat, 3 * s + 2, 1, field), 0.0, 1.0)};
    }
    try {
      poses.emplace_back(kps);
    } catch (const std::invalid_argument & e) {
      warn(options, field + ": skipping detection: " + e.what());
    }
  }
  return poses;
}

void attach_detections(ImageRecord & record, const std::filesystem::path & file, const ReadOptions & options)
{
  const auto poses = read_detections(file, options);
  std::vector<Detection> detections;
  detections.reserve(poses.size());
  for (const auto & p : poses) {
    detections.push_back(make_detection(p));
  }
  std::vector<Box> gt;
  for (const auto & inst : record.instances) {
    gt.push_back(inst.gt_box);
  }
  for (const auto & m : match_instances(gt, detections, kMatchIouThreshold)) {
    attach_pose(record.instances[m.gt_index], detections[m.det_index].pose);
  }
}

Box csv_box(const std::vector<std::string> & cells, const std::array<std::size_t, 4> & cols, std::size_t line)
{
  Box b{parse_double(cells[cols[0]], line, "x"), parse_double(cells[cols[1]], line, "y"),
        parse_double(cells[cols[2]], line, "w"), parse_double(cells[cols[3]], line, "h")};
  if (!(b.w > 0.0) || !(b.h > 0.0)) {
    throw SchemaError(line, "w", "box width and height must be positive");
  }
  return b;
}

/// Adds a row to the image keyed by id, creating it on first sight and checking
/// that repeated rows agree on the image-level fields.
ImageRecord & image_for(
  std::vector<ImageRecord> & records, std::unordered_map<std::string, std::size_t> & index, const std::string & id,
  int width, int height, Split split, std::size_t line)
{
  const auto it = index.find(id);
  if (it == index.end()) {
    index.emplace(id, records.size());
    records.push_back(ImageRecord{id, width, height, split, {}});
    return records.back();
  }
  ImageRecord & rec = records[it->second];
  if (rec.width != width || rec.height != height || rec.split != split) {
    throw SchemaError(line, "image_id", "rows for image '" + id + "' disagree on width, height or split");
  }
  return rec;
}

std::vector<ImageRecord> import_look(const std::filesystem::path & dir, const ReadOptions & options)
{
  const auto csv_path = dir / "annotations.csv";
  const CsvTable t = read_csv(csv_path);
  const auto c_id = require_column(t, "image_id", csv_path);
  const auto c_w = require_column(t, "width", csv_path);
  const auto c_h = require_column(t, "height", csv_path);
  const auto c_split = require_column(t, "split", csv_path);
  const std::array<std::size_t, 4> c_box{
    require_column(t, "x", csv_path), require_column(t, "y", csv_path), require_column(t, "w", csv_path),
    require_column(t, "h", csv_path)};
  std::vector<std::size_t> c_votes;
  for (const char * v : {"vote1", "vote2", "vote3", "vote4"}) {
    if (const auto c = t.column(v)) {
      c_votes.push_back(*c);
    }
  }
  const auto c_track = t.column("track_id");

  std::vector<ImageRecord> records;
  std::unordered_map<std::string, std::size_t> index;
  for (const auto & [line, cells] : t.rows) {
    const auto split = split_from_string(cells[c_split]);
    if (!split) {
      throw SchemaError(line, "split", "split must be train, val or test");
    }
    if (cells[c_id].empty()) {
      throw SchemaError(line, "image_id", "empty image_id");
    }
    ImageRecord & rec = image_for(
      records, index, cells[c_id], parse_positive_int(cells[c_w], line, "width"),
      parse_positive_int(cells[c_h], line, "height"), *split, line);

    AnnotatedInstance inst;
    inst.gt_box = csv_box(cells, c_box, line);
    std::vector<Vote> votes;
    for (const auto c : c_votes) {
      if (cells[c].empty()) {
        continue;
      }
      const auto v = vote_from_string(cells[c]);
      if (!v) {
        throw SchemaError(line, t.header[c], "unknown vote '" + cells[c] + "'");
      }
      votes.push_back(*v);
    }
    if (!votes.empty()) {
      if (votes.size() == kVotesPerInstance) {
        inst.label = label_for(consensus_label(votes));
      }
      inst.votes = std::move(votes);
    }
    if (c_track && !cells[*c_track].empty()) {
      inst.track_id = cells[*c_track];
    }
    rec.instances.push_back(std::move(inst));
  }
  for (auto & rec : records) {
    attach_detections(rec, dir / "keypoints" / (rec.image_id + ".json"), options);
  }
  return records;
}

std::vector<ImageRecord> import_jaad(const std::filesystem::path & dir, const ReadOptions & options)
{
  const auto splits_path = dir / "splits.csv";
  const CsvTable splits = read_csv(splits_path);
  const auto s_video = require_column(splits, "video_id", splits_path);
  const auto s_split = require_column(splits, "split", splits_path);
  std::unordered_map<std::string, Split> video_split;
  for (const auto & [line, cells] : splits.rows) {
    const auto split = split_from_string(cells[s_split]);
    if (!split) {
      throw SchemaError(line, "split", "splits.csv: split must be train, val or test");
    }
    if (!video_split.emplace(cells[s_video], *split).second) {
      throw SchemaError(line, "video_id", "splits.csv: video listed twice");
    }
  }

  const auto csv_path = dir / "annotations.csv";
  const CsvTable t = read_csv(csv_path);
  const auto c_video = require_column(t, "video_id", csv_path);
  const auto c_frame = require_column(t, "frame", csv_path);
  const auto c_w = require_column(t, "width", csv_path);
  const auto c_h = require_column(t, "height", csv_path);
  const auto c_track = require_column(t, "track_id", csv_path);
  const auto c_looking = require_column(t, "looking", csv_path);
  const std::array<std::size_t, 4> c_box{
    require_column(t, "x", csv_path), require_column(t, "y", csv_path), require_column(t, "w", csv_path),
    require_column(t, "h", csv_path)};

  std::vector<ImageRecord> records;
  std::unordered_map<std::string, std::size_t> index;
  for (const auto & [line, cells] : t.rows) {
    const auto split = video_split.find(cells[c_video]);
    if (split == video_split.end()) {
      throw SchemaError(line, "video_id", "video '" + cells[c_video] + "' has no entry in splits.csv");
    }
    const std::string id = cells[c_video] + "_" + cells[c_frame];
    ImageRecord & rec = image_for(
      records, index, id, parse_positive_int(cells[c_w], line, "width"), parse_positive_int(cells[c_h], line, "height"),
      split->second, line);

    AnnotatedInstance inst;
    inst.gt_box = csv_box(cells, c_box, line);
    const std::string & looking = cells[c_looking];
    if (looking == "1") {
      inst.label = Label::Looking;
    } else if (looking == "0") {
      inst.label = Label::NotLooking;
    } else if (!looking.empty() && looking != "-1") {
      throw SchemaError(line, "looking", "expected 1, 0, -1 or empty, got '" + looking + "'");
    }
    if (!cells[c_track].empty()) {
      inst.track_id = cells[c_track];
    }
    rec.instances.push_back(std::move(inst));
  }
  for (auto & rec : records) {
    attach_detections(rec, dir / "keypoints" / (rec.image_id + ".json"), options);
  }
  return records;
}

}  // namespace

std::vector<ImageRecord> import_dataset(
  DatasetLayout layout, const std::filesystem::path & path, const ReadOptions & options)
{
  switch (layout) {
    case DatasetLayout::Canonical:
      return read_jsonl(path, options);
    case DatasetLayout::JaadLike:
      return import_jaad(path, options);
    case DatasetLayout::LookLike:
      return import_look(path, options);
  }
  throw std::invalid_argument("unknown dataset layout");
}

std::vector<std::vector<std::size_t>> balanced_samples(std::span<const int> labels, std::size_t n_seeds)
{
  std::vector<std::size_t> positives;
  std::vector<std::size_t> negatives;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    (labels[i] == 1 ? positives : negatives).push_back(i);
  }
  if (positives.empty()) {
    throw std::invalid_argument("balanced sampling needs at least one positive");
  }
  if (negatives.size() < positives.size()) {
    throw std::invalid_argument(
      "balanced sampling needs at least as many negatives (" + std::to_string(negatives.size()) +
      ") as positives (" + std::to_string(positives.size()) + ")");
  }

  std::vector<std::vector<std::size_t>> sets;
  sets.reserve(n_seeds);
  for (std::size_t seed = 0; seed < n_seeds; ++seed) {
    Rng rng(derive_seed(seed, 0xBA1A));
    std::vector<std::size_t> pool = negatives;
    // partial Fisher-Yates: the first P slots become a uniform sample
    for (std::size_t i = 0; i < positives.size(); ++i) {
      const auto j = i + static_cast<std::size_t>(rng.below(pool.size() - i));
      std::swap(pool[i], pool[j]);
    }
    std::vector<std::size_t> set = positives;
    set.insert(set.end(), pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(positives.size()));
    std::sort(set.begin(), set.end());
    sets.push_back(std::move(set));
  }
  return sets;
}

}  // namespace looking
