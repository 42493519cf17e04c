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

/// \file store.hpp
/// \brief Annotation store backing the review service.
///
/// The store keeps the dataset as loaded (the base) plus an append-only vote
/// ledger. The current records are always the base with the ledger replayed
/// on top, so labels can be reproduced from the ledger at any time. Every
/// write bumps the revision and rewrites the store file atomically.

#ifndef LOOKING__STORE_HPP_
#define LOOKING__STORE_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "json.hpp"
#include "looking/dataset.hpp"

namespace looking
{

struct VoteEntry
{
  std::string image_id;
  std::size_t instance_index{0};
  std::string annotator_id;
  Vote vote{Vote::Ambiguous};
  std::uint64_t revision{0};

  bool operator==(const VoteEntry &) const = default;
};

struct Progress
{
  std::size_t labeled{0};    ///< looking or not looking
  std::size_t discarded{0};  ///< ambiguous / no consensus
  std::size_t pending{0};    ///< unlabeled
  std::uint64_t revision{0};
};

/// "looking", "not_looking", "discarded" or "pending" for an instance.
std::string_view consensus_state(const AnnotatedInstance & instance);

class StoreError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

class NotFound : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

class VoteConflict : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

/// Replays ledger entries onto base records. Throws StoreError on entries that
/// reference unknown instances, repeat an (instance, annotator) pair, exceed
/// four votes per instance or have non-increasing revisions.
std::vector<ImageRecord> replay_ledger(std::span<const ImageRecord> base, std::span<const VoteEntry> ledger);

struct VoteResult
{
  AnnotatedInstance instance;
  std::uint64_t revision{0};  ///< revision assigned to this vote
};

class AnnotationStore
{
public:
  /// New store over a dataset; writes the store file immediately.
  static std::unique_ptr<AnnotationStore> create(std::filesystem::path path, std::vector<ImageRecord> base);

  /// Loads and validates an existing store file. Throws StoreError on any
  /// inconsistency.
  static std::unique_ptr<AnnotationStore> open(const std::filesystem::path & path);

  /// open() when the file exists, else create() from the dataset.
  static std::unique_ptr<AnnotationStore> open_or_create(
    const std::filesystem::path & path, std::vector<ImageRecord> base);

  AnnotationStore(const AnnotationStore &) = delete;
  AnnotationStore & operator=(const AnnotationStore &) = delete;

  std::size_t size() const;
  std::uint64_t revision() const;
  Progress progress() const;
  std::optional<ImageRecord> record(const std::string & image_id) const;
  std::vector<ImageRecord> records() const;
  std::vector<VoteEntry> ledger() const;

  /// Records one vote, recomputes the instance consensus, persists the store
  /// and returns the updated instance. Throws NotFound for unknown ids,
  /// VoteConflict for a repeated annotator or a fifth vote, and
  /// std::invalid_argument for an empty annotator id.
  VoteResult add_vote(
    const std::string & image_id, std::size_t instance_index, const std::string & annotator_id, Vote vote);

  nlohmann::json to_json() const;

private:
  AnnotationStore(std::filesystem::path path, std::vector<ImageRecord> base, std::vector<VoteEntry> ledger,
                  std::uint64_t revision);

  void persist_locked() const;
  nlohmann::json to_json_locked() const;

  std::filesystem::path path_;
  std::vector<ImageRecord> base_;
  std::vector<ImageRecord> current_;
  std::vector<VoteEntry> ledger_;
  std::unordered_map<std::string, std::size_t> index_;
  std::uint64_t revision_{0};
  mutable std::shared_mutex mutex_;
};

}  // namespace looking

#endif  // LOOKING__STORE_HPP_
