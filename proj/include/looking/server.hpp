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

/// \file server.hpp
/// \brief HTTP review service over an AnnotationStore.
///
/// Routes (JSON, UTF-8):
///   GET  /api/v1/images?split=S&offset=O&limit=L
///   GET  /api/v1/images/{image_id}                       record + pre-labels
///   POST /api/v1/images/{image_id}/instances/{idx}/votes {annotator_id, vote}
///   GET  /api/v1/progress                                {labeled, discarded, pending, revision}
///   GET  /api/v1/export                                  canonical JSONL
///   GET  /media/{image_id}                               file from the media directory
/// Errors: 400 malformed, 404 unknown id, 409 duplicate vote.

#ifndef LOOKING__SERVER_HPP_
#define LOOKING__SERVER_HPP_

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "json.hpp"
#include "looking/checkpoint.hpp"
#include "looking/store.hpp"

namespace httplib
{
class Server;
}

namespace looking
{

struct ServerOptions
{
  std::string host{"127.0.0.1"};
  int port{8080};  ///< 0 picks a free port
  std::optional<std::filesystem::path> media_dir;
  std::optional<std::filesystem::path> ui_dir;
  double prelabel_threshold{0.5};
};

/// "looking" when score >= threshold, else "not_looking".
std::string_view pre_label(double score, double threshold);

/// Model scores per (image, instance) for every instance with a pose.
using PreLabelScores = std::unordered_map<std::string, std::vector<std::optional<double>>>;
PreLabelScores compute_prelabel_scores(const Checkpoint & checkpoint, const std::vector<ImageRecord> & records);

/// JSON payload of one image as served by GET /api/v1/images/{id}.
nlohmann::json image_payload(
  const ImageRecord & record, const std::vector<std::optional<double>> * scores, double threshold,
  std::uint64_t revision);

class ReviewServer
{
public:
  ReviewServer(AnnotationStore & store, std::optional<Checkpoint> checkpoint, ServerOptions options);
  ~ReviewServer();

  ReviewServer(const ReviewServer &) = delete;
  ReviewServer & operator=(const ReviewServer &) = delete;

  /// Binds the listening socket; throws std::runtime_error when the port is taken.
  void bind();
  /// Port actually bound (useful with port 0).
  int port() const { return bound_port_; }
  /// Serves until stop(); call bind() first.
  void listen();
  void stop();

private:
  void install_routes();

  AnnotationStore & store_;
  ServerOptions options_;
  PreLabelScores scores_;
  std::unique_ptr<httplib::Server> http_;
  int bound_port_{-1};
};

}  // namespace looking

#endif  // LOOKING__SERVER_HPP_
