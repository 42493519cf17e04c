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

#include "looking/server.hpp"

#include <httplib.h>
#include <spdlog/spdlog.h>

#include <charconv>

#include "looking/fileutil.hpp"
#include "looking/train.hpp"

namespace looking
{

using nlohmann::json;

namespace
{

constexpr std::size_t kDefaultPageSize = 50;
constexpr std::size_t kMaxPageSize = 1000;

void send_json(httplib::Response & res, int status, const json & body)
{
  res.status = status;
  res.set_content(body.dump(), "application/json; charset=utf-8");
}

void send_error(httplib::Response & res, int status, const std::string & message)
{
  send_json(res, status, json{{"error", message}});
}

std::optional<std::size_t> parse_index(const std::string & s)
{
  std::size_t value = 0;
  const auto * end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, value);
  if (ec != std::errc() || ptr != end || s.empty()) {
    return std::nullopt;
  }
  return value;
}

std::string content_type_for(const std::filesystem::path & file)
{
  const std::string ext = file.extension().string();
  if (ext == ".jpg" || ext == ".jpeg") {
    return "image/jpeg";
  }
  if (ext == ".png") {
    return "image/png";
  }
  return "application/octet-stream";
}

bool safe_id(const std::string & id)
{
  return !id.empty() && id != "." && id != ".." && id.find('/') == std::string::npos &&
         id.find('\\') == std::string::npos && id.find('\0') == std::string::npos;
}

}  // namespace

std::string_view pre_label(double score, double threshold)
{
  return score >= threshold ? "looking" : "not_looking";
}

PreLabelScores compute_prelabel_scores(const Checkpoint & checkpoint, const std::vector<ImageRecord> & records)
{
  PreLabelScores scores;
  std::vector<TrainSample> features;
  std::vector<std::pair<std::string, std::size_t>> slots;
  for (const auto & rec : records) {
    auto & per_image = scores[rec.image_id];
    per_image.assign(rec.instances.size(), std::nullopt);
    for (std::size_t i = 0; i < rec.instances.size(); ++i) {
      if (rec.instances[i].pose) {
        features.push_back(TrainSample{pose_features(*rec.instances[i].pose, rec.width, checkpoint.subset).values, 0});
        slots.emplace_back(rec.image_id, i);
      }
    }
  }
  if (!features.empty()) {
    const Vector probs = predict_probs(checkpoint.params, stack_features(features));
    for (std::size_t k = 0; k < slots.size(); ++k) {
      scores[slots[k].first][slots[k].second] = probs(static_cast<Eigen::Index>(k));
    }
  }
  return scores;
}

json image_payload(
  const ImageRecord & record, const std::vector<std::optional<double>> * scores, double threshold,
  std::uint64_t revision)
{
  json j = record_to_json(record);
  j["revision"] = revision;
  auto & instances = j["instances"];
  for (std::size_t i = 0; i < record.instances.size(); ++i) {
    auto & ji = instances[i];
    const auto & inst = record.instances[i];
    ji["index"] = i;
    ji["consensus"] = std::string(consensus_state(inst));
    ji["vote_count"] = inst.votes ? inst.votes->size() : 0;
    const std::optional<double> score = scores != nullptr && i < scores->size() ? (*scores)[i] : std::nullopt;
    if (score) {
      ji["score"] = *score;
      ji["pre_label"] = std::string(pre_label(*score, threshold));
    } else {
      ji["score"] = nullptr;
      ji["pre_label"] = nullptr;
    }
  }
  return j;
}

ReviewServer::ReviewServer(AnnotationStore & store, std::optional<Checkpoint> checkpoint, ServerOptions options)
: store_(store), options_(std::move(options)), http_(std::make_unique<httplib::Server>())
{
  if (checkpoint) {
    scores_ = compute_prelabel_scores(*checkpoint, store_.records());
  }
  install_routes();
}

ReviewServer::~ReviewServer() { stop(); }

void ReviewServer::bind()
{
  if (options_.port == 0) {
    bound_port_ = http_->bind_to_any_port(options_.host);
  } else if (http_->bind_to_port(options_.host, options_.port)) {
    bound_port_ = options_.port;
  }
  if (bound_port_ <= 0) {
    throw std::runtime_error(
      "cannot bind " + options_.host + ":" + std::to_string(options_.port) + " (port in use?)");
  }
  spdlog::info("review service listening on {}:{}", options_.host, bound_port_);
}

void ReviewServer::listen() { http_->listen_after_bind(); }

void ReviewServer::stop()
{
  if (http_) {
    http_->stop();
  }
}

void ReviewServer::install_routes()
{
  auto & srv = *http_;

  srv.Get("/api/v1/images", [this](const httplib::Request & req, httplib::Response & res) {
    std::optional<Split> split;
    if (req.has_param("split")) {
      split = split_from_string(req.get_param_value("split"));
      if (!split) {
        send_error(res, 400, "split must be train, val or test");
        return;
      }
    }
    std::size_t offset = 0;
    std::size_t limit = kDefaultPageSize;
    if (req.has_param("offset")) {
      const auto v = parse_index(req.get_param_value("offset"));
      if (!v) {
        send_error(res, 400, "offset must be a non-negative integer");
        return;
      }
      offset = *v;
    }
    if (req.has_param("limit")) {
      const auto v = parse_index(req.get_param_value("limit"));
      if (!v || *v == 0 || *v > kMaxPageSize) {
        send_error(res, 400, "limit must be between 1 and 1000");
        return;
      }
      limit = *v;
    }
    const auto records = store_.records();
    json items = json::array();
    std::size_t total = 0;
    for (const auto & rec : records) {
      if (split && rec.split != *split) {
        continue;
      }
      if (total >= offset && items.size() < limit) {
        std::size_t pending = 0;
        for (const auto & inst : rec.instances) {
          pending += inst.label == Label::Unlabeled ? 1 : 0;
        }
        items.push_back({
          {"image_id", rec.image_id},
          {"width", rec.width},
          {"height", rec.height},
          {"split", std::string(to_string(rec.split))},
          {"n_instances", rec.instances.size()},
          {"n_pending", pending},
        });
      }
      ++total;
    }
    send_json(res, 200, json{{"total", total}, {"offset", offset}, {"limit", limit}, {"items", std::move(items)}});
  });

  srv.Get(R"(/api/v1/images/([^/]+))", [this](const httplib::Request & req, httplib::Response & res) {
    const std::string id = req.matches[1];
    const auto rec = store_.record(id);
    if (!rec) {
      send_error(res, 404, "unknown image '" + id + "'");
      return;
    }
    const auto it = scores_.find(id);
    send_json(
      res, 200,
      image_payload(*rec, it == scores_.end() ? nullptr : &it->second, options_.prelabel_threshold, store_.revision()));
  });

  srv.Post(
    R"(/api/v1/images/([^/]+)/instances/([^/]+)/votes)", [this](const httplib::Request & req, httplib::Response & res) {
      const std::string id = req.matches[1];
      const auto index = parse_index(req.matches[2]);
      if (!index) {
        send_error(res, 400, "instance index must be a non-negative integer");
        return;
      }
      json body;
      try {
        body = json::parse(req.body);
      } catch (const json::parse_error &) {
        send_error(res, 400, "body must be JSON");
        return;
      }
      if (!body.is_object() || !body.contains("annotator_id") || !body["annotator_id"].is_string() ||
          body["annotator_id"].get<std::string>().empty() || !body.contains("vote") || !body["vote"].is_string()) {
        send_error(res, 400, "body needs string fields annotator_id and vote");
        return;
      }
      const auto vote = vote_from_string(body["vote"].get<std::string>());
      if (!vote) {
        send_error(res, 400, "vote must be looking, not_looking or ambiguous");
        return;
      }
      try {
        const VoteResult result = store_.add_vote(id, *index, body["annotator_id"].get<std::string>(), *vote);
        const AnnotatedInstance & inst = result.instance;
        json votes = json::array();
        for (const auto v : inst.votes.value_or(std::vector<Vote>{})) {
          votes.push_back(std::string(to_string(v)));
        }
        const auto label = label_string(inst.label);
        send_json(
          res, 200,
          json{
            {"image_id", id},
            {"instance_index", *index},
            {"votes", std::move(votes)},
            {"label", label ? json(std::string(*label)) : json(nullptr)},
            {"consensus", std::string(consensus_state(inst))},
            {"revision", result.revision},
          });
      } catch (const NotFound & e) {
        send_error(res, 404, e.what());
      } catch (const VoteConflict & e) {
        send_error(res, 409, e.what());
      } catch (const std::invalid_argument & e) {
        send_error(res, 400, e.what());
      }
    });

  srv.Get("/api/v1/progress", [this](const httplib::Request &, httplib::Response & res) {
    const Progress p = store_.progress();
    send_json(
      res, 200,
      json{{"labeled", p.labeled}, {"discarded", p.discarded}, {"pending", p.pending}, {"revision", p.revision}});
  });

  srv.Get("/api/v1/export", [this](const httplib::Request &, httplib::Response & res) {
    const auto records = store_.records();
    res.status = 200;
    res.set_content(to_jsonl(records), "application/x-ndjson; charset=utf-8");
  });

  srv.Get(R"(/media/([^/]+))", [this](const httplib::Request & req, httplib::Response & res) {
    const std::string id = req.matches[1];
    if (!options_.media_dir || !safe_id(id)) {
      send_error(res, 404, "no media for '" + id + "'");
      return;
    }
    for (const char * ext : {"", ".jpg", ".jpeg", ".png"}) {
      const auto file = *options_.media_dir / (id + ext);
      if (std::filesystem::is_regular_file(file)) {
        res.status = 200;
        res.set_content(read_file(file), content_type_for(file));
        return;
      }
    }
    send_error(res, 404, "no media for '" + id + "'");
  });

  if (options_.ui_dir) {
    srv.set_mount_point("/", options_.ui_dir->string());
  }

  srv.set_exception_handler([](const httplib::Request &, httplib::Response & res, std::exception_ptr ep) {
    std::string what = "internal error";
    try {
      std::rethrow_exception(ep);
    } catch (const std::exception & e) {
      what = e.what();
    } catch (...) {
    }
    spdlog::error("request failed: {}", what);
    send_error(res, 500, what);
  });
}

}  // namespace looking
