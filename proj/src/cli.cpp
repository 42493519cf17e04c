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

#include "looking/cli.hpp"

#include <CLI11.hpp>
#include <spdlog/fmt/fmt.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <atomic>
#include <chrono>
#include <csignal>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "looking/checkpoint.hpp"
#include "looking/dataset.hpp"
#include "looking/evaluate.hpp"
#include "looking/fileutil.hpp"
#include "looking/server.hpp"
#include "looking/store.hpp"
#include "looking/synth.hpp"
#include "looking/train.hpp"

namespace looking
{

namespace
{

struct CommonFlags
{
  std::string log_level{"info"};
  bool strict{false};
};

struct ConvertFlags
{
  std::string layout{"canonical"};
  std::string input;
  std::string out;
};

struct SynthFlags
{
  SynthConfig cfg;
  std::string out;
};

struct TrainFlags
{
  std::string data;
  std::string out;
  std::string history;
  std::string subset{"full"};
  TrainConfig cfg;
};

struct EvalFlags
{
  std::string data;
  std::string ckpt;
  std::string report;
  std::string split{"test"};
  std::string tag{"dataset"};
  bool table{false};
  bool no_quartiles{false};
};

struct PredictFlags
{
  std::string data;
  std::string ckpt;
  std::string out;
  std::string split;
  double threshold{0.5};
};

struct SaliencyFlags
{
  std::string data;
  std::string ckpt;
  std::string out;
  std::string split{"train"};
};

struct ServeFlags
{
  std::string data;
  std::string store;
  std::string ckpt;
  std::string media_dir;
  std::string ui_dir;
  ServerOptions options;
};

void setup_logging(const std::string & level)
{
  auto logger = spdlog::get("looking");
  if (!logger) {
    logger = spdlog::stderr_color_mt("looking");
  }
  logger->set_pattern("%Y-%m-%dT%H:%M:%S.%e level=%l %v");
  logger->set_level(spdlog::level::from_str(level));
  spdlog::set_default_logger(logger);
}

Split parse_split(const std::string & s)
{
  const auto split = split_from_string(s);
  if (!split) {
    throw std::invalid_argument("split must be train, val or test, got '" + s + "'");
  }
  return *split;
}

std::vector<ImageRecord> load_records(const std::string & path, bool strict)
{
  std::vector<std::string> warnings;
  auto records = read_jsonl(std::filesystem::path(path), ReadOptions{strict, &warnings});
  for (const auto & w : warnings) {
    spdlog::warn("file={} {}", path, w);
  }
  spdlog::info("event=load file={} images={}", path, records.size());
  return records;
}

std::string format_double(double v) { return fmt::format("{:.17g}", v); }

int cmd_convert(const ConvertFlags & f, const CommonFlags & common)
{
  std::vector<std::string> warnings;
  const auto records =
    import_dataset(layout_from_string(f.layout), f.input, ReadOptions{common.strict, &warnings});
  for (const auto & w : warnings) {
    spdlog::warn("input={} {}", f.input, w);
  }
  write_jsonl(f.out, records);
  spdlog::info("event=convert layout={} images={} out={}", f.layout, records.size(), f.out);
  return kExitOk;
}

int cmd_synth(const SynthFlags & f)
{
  f.cfg.validate();
  const auto records = synth_generate(f.cfg);
  write_jsonl(f.out, records);
  std::size_t n = 0;
  for (const auto & r : records) {
    n += r.instances.size();
  }
  spdlog::info("event=synth images={} instances={} seed={} out={}", records.size(), n, f.cfg.seed, f.out);
  return kExitOk;
}

int cmd_train(TrainFlags f, const CommonFlags & common)
{
  f.cfg.subset = subset_from_string(f.subset);
  f.cfg.validate();
  const auto records = load_records(f.data, common.strict);
  const auto train_set = samples_from_records(records, Split::Train, f.cfg.subset);
  const auto val_set = samples_from_records(records, Split::Val, f.cfg.subset);
  spdlog::info(
    "event=train_start train={} val={} subset={} lr={} batch={} epochs={} seed={}", train_set.size(), val_set.size(),
    to_string(f.cfg.subset), f.cfg.learning_rate, f.cfg.batch_size, f.cfg.epochs, f.cfg.seed);
  const TrainResult result = train(train_set, val_set, f.cfg);
  for (const auto & h : result.history) {
    spdlog::info(
      "event=epoch epoch={} train_loss={:.6f} val_ap={} elapsed_ms={:.1f}", h.epoch, h.train_loss,
      h.val_ap ? fmt::format("{:.4f}", *h.val_ap) : std::string("null"), h.elapsed_ms);
  }
  save_checkpoint(result.checkpoint, f.out);
  if (!f.history.empty()) {
    std::string text;
    for (const auto & h : result.history) {
      nlohmann::ordered_json j;
      j["epoch"] = h.epoch;
      j["train_loss"] = h.train_loss;
      j["val_ap"] = h.val_ap ? nlohmann::ordered_json(*h.val_ap) : nlohmann::ordered_json(nullptr);
      j["elapsed_ms"] = h.elapsed_ms;
      if (h.saliency) {
        j["saliency"] = h.saliency->impact;
      }
      text += j.dump() + "\n";
    }
    write_file_atomic(f.history, text);
  }
  spdlog::info("event=train_done out={}", f.out);
  return kExitOk;
}

int cmd_eval(const EvalFlags & f, const CommonFlags & common)
{
  const Checkpoint ckpt = load_checkpoint(f.ckpt);
  const auto records = load_records(f.data, common.strict);
  EvalOptions opts;
  opts.split = parse_split(f.split);
  opts.dataset_tag = f.tag;
  opts.with_quartiles = !f.no_quartiles;
  const EvalReport report = evaluate(ckpt, records, opts);
  spdlog::info(
    "event=eval dataset={} ap_mean={:.4f} ap_std={:.4f} recall_iou50={:.4f} n_gt={} n_matched={}", report.dataset_tag,
    report.ap_mean, report.ap_std, report.recall_iou50, report.n_gt, report.n_matched);
  const std::string doc = report_to_json(report).dump(2) + "\n";
  if (!f.report.empty()) {
    write_file_atomic(f.report, doc);
  } else if (!f.table) {
    std::cout << doc;
  }
  if (f.table) {
    const std::vector<EvalReport> rows{report};
    std::cout << render_report_table(rows);
  }
  return kExitOk;
}

int cmd_predict(const PredictFlags & f, const CommonFlags & common)
{
  if (!(f.threshold > 0.0 && f.threshold < 1.0)) {
    throw std::invalid_argument("threshold must lie in (0, 1)");
  }
  const Checkpoint ckpt = load_checkpoint(f.ckpt);
  auto records = load_records(f.data, common.strict);
  if (!f.split.empty()) {
    const Split split = parse_split(f.split);
    std::erase_if(records, [split](const ImageRecord & r) { return r.split != split; });
  }
  const PreLabelScores scores = compute_prelabel_scores(ckpt, records);
  std::string text;
  std::size_t n = 0;
  for (const auto & rec : records) {
    const auto & per_image = scores.at(rec.image_id);
    for (std::size_t i = 0; i < per_image.size(); ++i) {
      if (!per_image[i]) {
        continue;
      }
      nlohmann::ordered_json j;
      j["image_id"] = rec.image_id;
      j["instance_index"] = i;
      j["score"] = *per_image[i];
      j["pre_label"] = std::string(pre_label(*per_image[i], f.threshold));
      text += j.dump() + "\n";
      ++n;
    }
  }
  if (f.out.empty()) {
    std::cout << text;
  } else {
    write_file_atomic(f.out, text);
  }
  spdlog::info("event=predict instances={}", n);
  return kExitOk;
}

int cmd_saliency(const SaliencyFlags & f, const CommonFlags & common)
{
  const Checkpoint ckpt = load_checkpoint(f.ckpt);
  const auto records = load_records(f.data, common.strict);
  const auto samples = samples_from_records(records, parse_split(f.split), ckpt.subset);
  const SaliencyReport report = saliency(ckpt, samples);
  std::string text = "keypoint_name,impact,impact_normalized\n";
  for (std::size_t k = 0; k < report.impact.size(); ++k) {
    text += report.keypoint_names[k] + "," + format_double(report.impact[k]) + "," +
            format_double(report.impact_normalized[k]) + "\n";
  }
  if (f.out.empty()) {
    std::cout << text;
  } else {
    write_file_atomic(f.out, text);
  }
  spdlog::info("event=saliency samples={} keypoints={}", samples.size(), report.impact.size());
  return kExitOk;
}

std::atomic<bool> g_stop_requested{false};

extern "C" void on_signal(int) { g_stop_requested.store(true); }

int cmd_serve(ServeFlags f, const CommonFlags & common)
{
  if (f.data.empty() && !std::filesystem::exists(f.store)) {
    throw std::invalid_argument("--data is required when the store file does not exist yet");
  }
  std::vector<ImageRecord> base;
  if (!std::filesystem::exists(f.store)) {
    base = load_records(f.data, common.strict);
  }
  std::unique_ptr<AnnotationStore> store;
  try {
    store = AnnotationStore::open_or_create(f.store, std::move(base));
  } catch (const StoreError & e) {
    spdlog::critical("event=store_corrupt file={} error=\"{}\"", f.store, e.what());
    return kExitRuntime;
  }
  std::optional<Checkpoint> ckpt;
  if (!f.ckpt.empty()) {
    ckpt = load_checkpoint(f.ckpt);
  }
  if (!f.media_dir.empty()) {
    f.options.media_dir = f.media_dir;
  }
  if (!f.ui_dir.empty()) {
    f.options.ui_dir = f.ui_dir;
  }
  ReviewServer server(*store, std::move(ckpt), f.options);
  server.bind();
  g_stop_requested.store(false);
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  std::thread worker([&server] { server.listen(); });
  while (!g_stop_requested.load()) {
    std::this_thread::sleep_for(std::chrono::milliseconds(100));
  }
  spdlog::info("event=shutdown revision={}", store->revision());
  server.stop();
  worker.join();
  return kExitOk;
}

}  // namespace

int run_cli(int argc, const char * const * argv)
{
  CLI::App app{"looking: eye-contact detection from 2D keypoints", "looking"};
  app.require_subcommand(1, 1);

  CommonFlags common;
  app.add_option("--log-level", common.log_level, "trace, debug, info, warn, error, critical or off")
    ->check(CLI::IsMember({"trace", "debug", "info", "warn", "error", "critical", "off"}));
  app.add_flag("--strict", common.strict, "Reject unknown fields in dataset files");

  ConvertFlags convert;
  auto * c_convert = app.add_subcommand("convert", "Import a dataset layout into canonical JSONL");
  c_convert->add_option("--layout", convert.layout, "canonical, jaad or look")
    ->check(CLI::IsMember({"canonical", "jaad", "look"}));
  c_convert->add_option("--input", convert.input, "Dataset file or directory")->required()->check(CLI::ExistingPath);
  c_convert->add_option("--out", convert.out, "Output JSONL")->required();

  SynthFlags synth;
  auto * c_synth = app.add_subcommand("synth", "Generate a synthetic labeled dataset");
  c_synth->add_option("--n-images", synth.cfg.n_images, "Number of images");
  c_synth->add_option("--seed", synth.cfg.seed, "Generator seed");
  c_synth->add_option("--noise", synth.cfg.noise_sigma, "Keypoint noise sigma in px");
  c_synth->add_option("--peds-min", synth.cfg.peds_min, "Minimum pedestrians per image");
  c_synth->add_option("--peds-max", synth.cfg.peds_max, "Maximum pedestrians per image");
  c_synth->add_option("--yaw-threshold", synth.cfg.yaw_threshold, "Looking iff |head yaw| < threshold (rad)");
  c_synth->add_option("--out", synth.out, "Output JSONL")->required();

  TrainFlags trainf;
  auto * c_train = app.add_subcommand("train", "Train the keypoint classifier");
  c_train->add_option("--data", trainf.data, "Canonical JSONL")->required()->check(CLI::ExistingFile);
  c_train->add_option("--out", trainf.out, "Checkpoint path")->required();
  c_train->add_option("--history", trainf.history, "Per-epoch history JSONL");
  c_train->add_option("--subset", trainf.subset, "full, head or body")
    ->check(CLI::IsMember({"full", "head", "body"}));
  c_train->add_option("--lr", trainf.cfg.learning_rate, "Learning rate");
  c_train->add_option("--batch-size", trainf.cfg.batch_size, "Mini-batch size");
  c_train->add_option("--epochs", trainf.cfg.epochs, "Epochs");
  c_train->add_option("--seed", trainf.cfg.seed, "Seed for init, shuffling and dropout");
  c_train->add_option("--dropout", trainf.cfg.dropout_rate, "Dropout rate");
  c_train->add_flag("--log-saliency", trainf.cfg.log_saliency, "Record saliency after every epoch");

  EvalFlags evalf;
  auto * c_eval = app.add_subcommand("eval", "Evaluate a checkpoint");
  c_eval->add_option("--data", evalf.data, "Canonical JSONL")->required()->check(CLI::ExistingFile);
  c_eval->add_option("--ckpt", evalf.ckpt, "Checkpoint")->required()->check(CLI::ExistingFile);
  c_eval->add_option("--report", evalf.report, "Report JSON (stdout when omitted and --table is not set)");
  c_eval->add_option("--split", evalf.split, "train, val or test");
  c_eval->add_option("--tag", evalf.tag, "Dataset tag in the report");
  c_eval->add_flag("--table", evalf.table, "Print an aligned text table to stdout instead of the JSON");
  c_eval->add_flag("--no-quartiles", evalf.no_quartiles, "Skip the height-quartile breakdown");

  PredictFlags predict;
  auto * c_predict = app.add_subcommand("predict", "Score every instance with a pose");
  c_predict->add_option("--data", predict.data, "Canonical JSONL")->required()->check(CLI::ExistingFile);
  c_predict->add_option("--ckpt", predict.ckpt, "Checkpoint")->required()->check(CLI::ExistingFile);
  c_predict->add_option("--out", predict.out, "Output JSONL (stdout when omitted)");
  c_predict->add_option("--split", predict.split, "Restrict to one split");
  c_predict->add_option("--threshold", predict.threshold, "Pre-label threshold");

  SaliencyFlags sal;
  auto * c_sal = app.add_subcommand("saliency", "Per-keypoint gradient impact");
  c_sal->add_option("--data", sal.data, "Canonical JSONL")->required()->check(CLI::ExistingFile);
  c_sal->add_option("--ckpt", sal.ckpt, "Checkpoint")->required()->check(CLI::ExistingFile);
  c_sal->add_option("--out", sal.out, "Output CSV (stdout when omitted)");
  c_sal->add_option("--split", sal.split, "train, val or test");

  ServeFlags serve;
  auto * c_serve = app.add_subcommand("serve", "Run the annotation review service");
  c_serve->add_option("--data", serve.data, "Canonical JSONL used to create a new store")->check(CLI::ExistingFile);
  c_serve->add_option("--store", serve.store, "Store file")->required();
  c_serve->add_option("--ckpt", serve.ckpt, "Checkpoint for pre-labels")->check(CLI::ExistingFile);
  c_serve->add_option("--media-dir", serve.media_dir, "Image directory served at /media")->check(CLI::ExistingDirectory);
  c_serve->add_option("--ui-dir", serve.ui_dir, "Static UI assets served at /")->check(CLI::ExistingDirectory);
  c_serve->add_option("--host", serve.options.host, "Listen address");
  c_serve->add_option("--port", serve.options.port, "TCP port (0 picks a free one)")->check(CLI::Range(0, 65535));
  c_serve->add_option("--threshold", serve.options.prelabel_threshold, "Pre-label threshold")
    ->check(CLI::Range(0.0, 1.0));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError & e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitValidation;
  }

  setup_logging(common.log_level);
  try {
    if (*c_convert) {
      return cmd_convert(convert, common);
    }
    if (*c_synth) {
      return cmd_synth(synth);
    }
    if (*c_train) {
      return cmd_train(trainf, common);
    }
    if (*c_eval) {
      return cmd_eval(evalf, common);
    }
    if (*c_predict) {
      return cmd_predict(predict, common);
    }
    if (*c_sal) {
      return cmd_saliency(sal, common);
    }
    if (*c_serve) {
      return cmd_serve(serve, common);
    }
  } catch (const SchemaError & e) {
    spdlog::error("event=invalid_input error=\"{}\"", e.what());
    return kExitValidation;
  } catch (const CheckpointError & e) {
    spdlog::error("event=invalid_checkpoint error=\"{}\"", e.what());
    return kExitValidation;
  } catch (const std::invalid_argument & e) {
    spdlog::error("event=invalid_input error=\"{}\"", e.what());
    return kExitValidation;
  } catch (const std::exception & e) {
    spdlog::error("event=failure error=\"{}\"", e.what());
    return kExitRuntime;
  }
  return kExitValidation;
}

}  // namespace looking
