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

#include "looking/store.hpp"

#include <algorithm>
#include <map>
#include <mutex>
#include <set>

#include "looking/fileutil.hpp"

namespace looking
{

using nlohmann::json;

namespace
{
constexpr const char * kStoreFormat = "looking-annotation-store";
constexpr int kStoreVersion = 1;

void apply_vote(AnnotatedInstance & inst, Vote vote)
{
  if (!inst.votes) {
    inst.votes.emplace();
  }
  inst.votes->push_back(vote);
  if (inst.votes->size() == kVotesPerInstance) {
    inst.label = label_for(consensus_label(*inst.votes));
  }
}

std::unordered_map<std::string, std::size_t> build_index(std::span<const ImageRecord> records)
{
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (!index.emplace(records[i].image_id, i).second) {
      throw StoreError("duplicate image_id '" + records[i].image_id + "'");
    }
  }
  return index;
}
}  // namespace

std::string_view consensus_state(const AnnotatedInstance & instance)
{
  switch (instance.label) {
    case Label::Looking:
      return "looking";
    case Label::NotLooking:
      return "not_looking";
    case Label::Ambiguous:
      return "discarded";
    case Label::Unlabeled:
      return "pending";
  }
  return "pending";
}

std::vector<ImageRecord> replay_ledger(std::span<const ImageRecord> base, std::span<const VoteEntry> ledger)
{
  std::vector<ImageRecord> current(base.begin(), base.end());
  const auto index = build_index(current);
  std::set<std::tuple<std::string, std::size_t, std::string>> seen;
  std::uint64_t last_revision = 0;
  for (const auto & e : ledger) {
    const auto it = index.find(e.image_id);
    if (it == index.end()) {
      throw StoreError("ledger references unknown image '" + e.image_id + "'");
    }
    auto & rec = current[it->second];
    if (e.instance_index >= rec.instances.size()) {
      throw StoreError("ledger references unknown instance " + std::to_string(e.instance_index) + " of '" + e.image_id + "'");
    }
    if (e.annotator_id.empty()) {
      throw StoreError("ledger entry without annotator id");
    }
    if (!seen.emplace(e.image_id, e.instance_index, e.annotator_id).second) {
      throw StoreError("ledger has two votes by '" + e.annotator_id + "' on one instance");
    }
    if (e.revision <= last_revision) {
      throw StoreError("ledger revisions are not strictly increasing");
    }
    last_revision = e.revision;
    auto & inst = rec.instances[e.instance_index];
    if (inst.votes && inst.votes->size() >= kVotesPerInstance) {
      throw StoreError("ledger has more than four votes on one instance");
    }
    apply_vote(inst, e.vote);
  }
  return current;
}

AnnotationStore::AnnotationStore(
  std::filesystem::path path, std::vector<ImageRecord> base, std::vector<VoteEntry> ledger, std::uint64_t revision)
: path_(std::move(path)), base_(std::move(base)), ledger_(std::move(ledger)), revision_(revision)
{
  index_ = build_index(base_);
  current_ = replay_ledger(base_, ledger_);
  if (!ledger_.empty() && ledger_.back().revision > revision_) {
    throw StoreError("ledger revision exceeds store revision");
  }
}

std::unique_ptr<AnnotationStore> AnnotationStore::create(std::filesystem::path path, std::vector<ImageRecord> base)
{
  std::unique_ptr<AnnotationStore> store(new AnnotationStore(std::move(path), std::move(base), {}, 0));
  store->persist_locked();
  return store;
}

std::unique_ptr<AnnotationStore> AnnotationStore::open(const std::filesystem::path & path)
{
  json doc;
  try {
    doc = json::parse(read_file(path));
  } catch (const json::parse_error & e) {
    throw StoreError("store " + path.string() + " is not valid JSON: " + e.what());
  } catch (const std::runtime_error & e) {
    throw StoreError(e.what());
  }
  try {
    if (doc.at("format").get<std::string>() != kStoreFormat || doc.at("version").get<int>() != kStoreVersion) {
      throw StoreError("store " + path.string() + " has an unsupported format or version");
    }
    std::vector<ImageRecord> base;
    std::size_t n = 0;
    for (const auto & r : doc.at("base")) {
      base.push_back(record_from_json(r, ++n, ReadOptions{true, nullptr}));
    }
    std::vector<VoteEntry> ledger;
    for (const auto & e : doc.at("ledger")) {
      const auto vote = vote_from_string(e.at("vote").get<std::string>());
      if (!vote) {
        throw StoreError("ledger entry has an invalid vote");
      }
      ledger.push_back(VoteEntry{
        e.at("image_id").get<std::string>(), e.at("instance_index").get<std::size_t>(),
        e.at("annotator_id").get<std::string>(), *vote, e.at("revision").get<std::uint64_t>()});
    }
    return std::unique_ptr<AnnotationStore>(
      new AnnotationStore(path, std::move(base), std::move(ledger), doc.at("revision").get<std::uint64_t>()));
  } catch (const json::exception & e) {
    throw StoreError("store " + path.string() + " is malformed: " + e.what());
  } catch (const SchemaError & e) {
    throw StoreError("store " + path.string() + " has an invalid record: " + e.what());
  }
}

std::unique_ptr<AnnotationStore> AnnotationStore::open_or_create(
  const std::filesystem::path & path, std::vector<ImageRecord> base)
{
  if (std::filesystem::exists(path)) {
    return open(path);
  }
  return create(path, std::move(base));
}

std::size_t AnnotationStore::size() const
{
  std::shared_lock lock(mutex_);
  return current_.size();
}

std::uint64_t AnnotationStore::revision() const
{
  std::shared_lock lock(mutex_);
  return revision_;
}

Progress AnnotationStore::progress() const
{
  std::shared_lock lock(mutex_);
  Progress p;
  p.revision = revision_;
  for (const auto & rec : current_) {
    for (const auto & inst : rec.instances) {
      switch (inst.label) {
        case Label::Looking:
        case Label::NotLooking:
          ++p.labeled;
          break;
        case Label::Ambiguous:
          ++p.discarded;
          break;
        case Label::Unlabeled:
          ++p.pending;
          break;
      }
    }
  }
  return p;
}

std::optional<ImageRecord> AnnotationStore::record(const std::string & image_id) const
{
  std::shared_lock lock(mutex_);
  const auto it = index_.find(image_id);
  if (it == index_.end()) {
    return std::nullopt;
  }
  return current_[it->second];
}

std::vector<ImageRecord> AnnotationStore::records() const
{
  std::shared_lock lock(mutex_);
  return current_;
}

std::vector<VoteEntry> AnnotationStore::ledger() const
{
  std::shared_lock lock(mutex_);
  return ledger_;
}

VoteResult AnnotationStore::add_vote(
  const std::string & image_id, std::size_t instance_index, const std::string & annotator_id, Vote vote)
{
  if (annotator_id.empty()) {
    throw std::invalid_argument("annotator_id must not be empty");
  }
  std::unique_lock lock(mutex_);
  const auto it = index_.find(image_id);
  if (it == index_.end()) {
    throw NotFound("unknown image '" + image_id + "'");
  }
  auto & rec = current_[it->second];
  if (instance_index >= rec.instances.size()) {
    throw NotFound("image '" + image_id + "' has no instance " + std::to_string(instance_index));
  }
  for (const auto & e : ledger_) {
    if (e.image_id == image_id && e.instance_index == instance_index && e.annotator_id == annotator_id) {
      throw VoteConflict("annotator '" + annotator_id + "' already voted on this instance");
    }
  }
  auto & inst = rec.instances[instance_index];
  if (inst.votes && inst.votes->size() >= kVotesPerInstance) {
    throw VoteConflict("instance already has four votes");
  }

  const AnnotatedInstance before = inst;
  apply_vote(inst, vote);
  ledger_.push_back(VoteEntry{image_id, instance_index, annotator_id, vote, revision_ + 1});
  ++revision_;
  try {
    persist_locked();
  } catch (...) {
    inst = before;
    ledger_.pop_back();
    --revision_;
    throw;
  }
  return VoteResult{inst, revision_};
}

json AnnotationStore::to_json() const
{
  std::shared_lock lock(mutex_);
  return to_json_locked();
}

json AnnotationStore::to_json_locked() const
{
  json base = json::array();
  for (const auto & r : base_) {
    base.push_back(record_to_json(r));
  }
  json ledger = json::array();
  for (const auto & e : ledger_) {
    ledger.push_back({
      {"image_id", e.image_id},
      {"instance_index", e.instance_index},
      {"annotator_id", e.annotator_id},
      {"vote", std::string(to_string(e.vote))},
      {"revision", e.revision},
    });
  }
  return json{
    {"format", kStoreFormat}, {"version", kStoreVersion}, {"revision", revision_},
    {"base", std::move(base)}, {"ledger", std::move(ledger)},
  };
}

void AnnotationStore::persist_locked() const { write_file_atomic(path_, to_json_locked().dump() + "\n"); }

}  // namespace looking
