// Command-line front end for the driving-scene risk analysis engine.
//
//   analyze  — per-frame risk reports from a manifest plus sidecar annotations
//   train    — fit one task-pair network on a records file
//   eval     — per-task precision/recall/F1 tables for a trained model
//   sample   — build a labeled frame-records file from video manifests
//   bench    — throughput statistics on a synthetic workload

#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "roadrisk/dataset.hpp"
#include "roadrisk/model_io.hpp"
#include "roadrisk/multinet.hpp"
#include "roadrisk/pipeline.hpp"

namespace {

using namespace roadrisk;

struct TrainFileConfig {
  TrainConfig config;
  ScaleProfile profile = ScaleProfile::full;
};

TrainFileConfig read_train_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(path.string() + ": invalid JSON: " + e.what());
  }

  TrainFileConfig out;
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "learning_rate") {
        out.config.learning_rate = value.get<double>();
      } else if (key == "batch_size") {
        out.config.batch_size = value.get<std::size_t>();
      } else if (key == "epochs_network1") {
        out.config.epochs_network1 = value.get<std::size_t>();
      } else if (key == "epochs_network2") {
        out.config.epochs_network2 = value.get<std::size_t>();
      } else if (key == "seed") {
        out.config.seed = value.get<std::uint32_t>();
      } else if (key == "crash_weight") {
        out.config.crash_weight = value.get<double>();
      } else if (key == "road_weight") {
        out.config.road_weight = value.get<double>();
      } else if (key == "weather_weight") {
        out.config.weather_weight = value.get<double>();
      } else if (key == "time_weight") {
        out.config.time_weight = value.get<double>();
      } else if (key == "profile") {
        const auto profile = parse_scale_profile(value.get<std::string>());
        if (!profile) {
          throw std::runtime_error(path.string() + ": unknown profile '" +
                                   value.get<std::string>() + "'");
        }
        out.profile = *profile;
      } else {
        throw std::runtime_error(path.string() + ": unknown config key '" + key + "'");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(path.string() + ": bad config value: " + e.what());
  }
  out.config.validate();
  return out;
}

/// --split semantics shared by train and eval: an explicit split filters
/// exactly; "all" disables filtering; "auto" prefers `preferred` when any
/// record carries it and falls back to everything otherwise.
std::vector<FrameRecord> select_records(std::vector<FrameRecord> records,
                                        const std::string& split_flag, Split preferred) {
  std::optional<Split> wanted;
  if (split_flag == "all") {
    return records;
  } else if (split_flag == "auto") {
    for (const FrameRecord& rec : records) {
      if (rec.split == preferred) {
        wanted = preferred;
        break;
      }
    }
    if (!wanted) return records;
  } else {
    wanted = parse_split(split_flag);
    if (!wanted) throw std::runtime_error("unknown split '" + split_flag + "'");
  }
  std::erase_if(records, [&](const FrameRecord& rec) { return rec.split != *wanted; });
  return records;
}

bool has_pair_labels(const FrameRecord& rec, TaskPair pair) {
  return pair == TaskPair::crash_road ? (rec.crash && rec.road)
                                      : (rec.weather && rec.time);
}

int cmd_analyze(const std::string& manifest, const std::string& model_path,
                const std::string& detections, const std::string& segmentation,
                const std::string& out, bool two_stage, std::string stage_file) {
  const std::vector<VideoManifest> manifests = read_manifests(manifest);
  const MultiNet model = load_model(model_path);
  const SidecarDetectionProvider detection_provider(detections);

  std::unique_ptr<SegmentationProvider> segmentation_provider;
  if (segmentation.empty()) {
    segmentation_provider = std::make_unique<NullSegmentationProvider>();
  } else {
    segmentation_provider = std::make_unique<SidecarSegmentationProvider>(segmentation);
  }

  RunOptions options;
  options.mode = two_stage ? RunMode::two_stage : RunMode::single_pass;
  options.report_path = out;
  if (two_stage) {
    if (stage_file.empty()) stage_file = out + ".lanes";
    options.stage_path = stage_file;
  }

  const RunSummary summary =
      run(manifests, detection_provider, *segmentation_provider, model, options);

  std::cout << "analyzed " << summary.frames_analyzed << " frames ("
            << summary.frames_skipped << " skipped) in " << summary.total_wall_seconds
            << " s\n";
  std::cout << "mean per-frame ms: classification " << summary.mean_classification_ms
            << ", detection " << summary.mean_detection_ms << ", segmentation "
            << summary.mean_segmentation_ms << "\n";
  if (summary.fps_defined) {
    std::cout << "effective fps: " << summary.fps << "\n";
  } else {
    std::cout << "effective fps: undefined (no frames analyzed)\n";
  }
  return 0;
}

int cmd_train(const std::string& dataset, const std::string& task_pair,
              const std::string& config_path, const std::string& out,
              const std::string& init, const std::string& split_flag) {
  const auto pair = parse_task_pair(task_pair);
  if (!pair) throw std::runtime_error("unknown task pair '" + task_pair + "'");
  const TrainFileConfig file_config = read_train_config(config_path);

  std::vector<FrameRecord> records =
      select_records(read_records(dataset), split_flag, Split::train);
  std::erase_if(records,
                [&](const FrameRecord& rec) { return !has_pair_labels(rec, *pair); });
  if (records.empty()) {
    throw std::runtime_error("no records carry both labels for task pair '" + task_pair +
                             "'");
  }
  const std::vector<TrainingSample> samples = load_training_samples(records);

  MultiNet model = init.empty() ? MultiNet::make(file_config.profile, file_config.config.seed)
                                : load_model(init);
  const TrainLog log = model.train(samples, file_config.config, *pair);
  save_model(model, out);

  const std::vector<double>& losses =
      *pair == TaskPair::crash_road ? log.network1_epoch_loss : log.network2_epoch_loss;
  for (std::size_t epoch = 0; epoch < losses.size(); ++epoch) {
    std::cout << "epoch " << (epoch + 1) << " mean_loss " << losses[epoch] << "\n";
  }
  std::cout << "trained " << task_pair << " on " << samples.size() << " samples for "
            << losses.size() << " epochs; model written to " << out << "\n";
  return 0;
}

int cmd_eval(const std::string& model_path, const std::string& dataset,
             const std::string& report_path, const std::string& json_path,
             const std::string& split_flag) {
  const MultiNet model = load_model(model_path);
  const std::vector<FrameRecord> records =
      select_records(read_records(dataset), split_flag, Split::test);
  if (records.empty()) throw std::runtime_error("no records selected for evaluation");

  const EvalResult result = evaluate(model, records);

  const std::pair<const char*, const ConfusionMatrix*> tables[4] = {
      {"crash_likelihood", &result.crash},
      {"road_function", &result.road},
      {"weather", &result.weather},
      {"time_of_day", &result.time}};

  std::string text;
  nlohmann::json all = nlohmann::json::object();
  for (const auto& [name, matrix] : tables) {
    const ClassReport rep = report(*matrix);
    text += render_report(name, rep);
    text += '\n';
    all[name] = nlohmann::json::parse(report_json(name, rep));
  }

  std::ofstream out(report_path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open report file for writing: " + report_path);
  out << text;
  if (!out) throw std::runtime_error("failed writing report file: " + report_path);
  std::cout << text;

  if (!json_path.empty()) {
    std::ofstream json_out(json_path, std::ios::trunc);
    if (!json_out) {
      throw std::runtime_error("cannot open JSON report file for writing: " + json_path);
    }
    json_out << all.dump() << '\n';
    if (!json_out) throw std::runtime_error("failed writing JSON report: " + json_path);
  }
  std::cout << "evaluated " << result.frames_evaluated << " frames\n";
  return 0;
}

int cmd_sample(const std::string& manifest, const std::string& out,
               const std::vector<double>& fractions, std::uint32_t seed) {
  const std::vector<VideoManifest> manifests = read_manifests(manifest);
  std::vector<FrameRecord> records = build_records(manifests);
  if (!fractions.empty()) {
    split_records(records, {fractions[0], fractions[1], fractions[2]}, seed);
  }
  write_records(records, out);

  std::size_t by_split[4] = {};
  for (const FrameRecord& rec : records) ++by_split[static_cast<int>(rec.split)];
  std::cout << "wrote " << records.size() << " records (train " << by_split[0] << " / val "
            << by_split[1] << " / test " << by_split[2] << " / unassigned " << by_split[3]
            << ") to " << out << "\n";
  return 0;
}

int cmd_bench(std::size_t frames, const std::string& model_path, std::uint32_t seed) {
  const MultiNet model = load_model(model_path);
  const BenchStats stats = bench(frames, model, seed);
  std::cout << "frames " << stats.frames << ": mean " << stats.mean_ms << " ms, median "
            << stats.median_ms << " ms, p95 " << stats.p95_ms << " ms, " << stats.fps
            << " fps\n";
  std::cout << "5 fps sampling reference: " << (stats.meets_sampling_reference ? "met" : "not met")
            << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Driving-scene risk analysis engine"};
  app.require_subcommand(1);

  auto* analyze = app.add_subcommand("analyze", "Analyze manifest frames into risk reports");
  std::string analyze_manifest, analyze_model, analyze_detections, analyze_segmentation;
  std::string analyze_out, analyze_stage;
  bool analyze_two_stage = false;
  analyze->add_option("--manifest", analyze_manifest, "Video manifest file (JSON lines)")
      ->required()
      ->check(CLI::ExistingFile);
  analyze->add_option("--model", analyze_model, "Trained model file")
      ->required()
      ->check(CLI::ExistingFile);
  analyze->add_option("--detections", analyze_detections, "Detection sidecar file")
      ->required()
      ->check(CLI::ExistingFile);
  analyze->add_option("--segmentation", analyze_segmentation, "Segmentation sidecar file")
      ->check(CLI::ExistingFile);
  analyze->add_option("--out", analyze_out, "Report output file (JSON lines)")->required();
  analyze->add_flag("--two-stage", analyze_two_stage,
                    "Persist the segmentation pass, then replay it");
  analyze->add_option("--stage-file", analyze_stage,
                      "Two-stage intermediate sidecar (default: <out>.lanes)");

  auto* train = app.add_subcommand("train", "Train one task-pair network");
  std::string train_dataset, train_pair, train_config, train_out, train_init;
  std::string train_split = "auto";
  train->add_option("--dataset", train_dataset, "Frame records file")
      ->required()
      ->check(CLI::ExistingFile);
  train->add_option("--task-pair", train_pair, "Which network to train")
      ->required()
      ->check(CLI::IsMember({"crash-road", "weather-time"}));
  train->add_option("--config", train_config, "Training config (JSON)")
      ->required()
      ->check(CLI::ExistingFile);
  train->add_option("--out", train_out, "Output model file")->required();
  train->add_option("--init", train_init, "Start from an existing model file")
      ->check(CLI::ExistingFile);
  train->add_option("--split", train_split,
                    "Record split to train on: train|val|test|all|auto (default auto)");

  auto* eval = app.add_subcommand("eval", "Evaluate a model on labeled records");
  std::string eval_model, eval_dataset, eval_report, eval_json;
  std::string eval_split = "auto";
  eval->add_option("--model", eval_model, "Trained model file")
      ->required()
      ->check(CLI::ExistingFile);
  eval->add_option("--dataset", eval_dataset, "Frame records file")
      ->required()
      ->check(CLI::ExistingFile);
  eval->add_option("--report", eval_report, "Text report output file")->required();
  eval->add_option("--json", eval_json, "Structured report output file");
  eval->add_option("--split", eval_split,
                   "Record split to evaluate: train|val|test|all|auto (default auto)");

  auto* sample = app.add_subcommand("sample", "Build frame records from manifests");
  std::string sample_manifest, sample_out;
  std::vector<double> sample_fractions;
  std::uint32_t sample_seed = 0;
  sample->add_option("--manifest", sample_manifest, "Video manifest file (JSON lines)")
      ->required()
      ->check(CLI::ExistingFile);
  sample->add_option("--out", sample_out, "Records output file")->required();
  sample->add_option("--split", sample_fractions,
                     "Train/val/test fractions, e.g. --split 0.8 0.1 0.1")
      ->expected(3);
  sample->add_option("--seed", sample_seed, "Split shuffle seed");

  auto* bench_cmd = app.add_subcommand("bench", "Measure per-frame throughput");
  std::size_t bench_frames = 0;
  std::string bench_model;
  std::uint32_t bench_seed = 0;
  bench_cmd->add_option("--frames", bench_frames, "Number of synthetic frames")
      ->required()
      ->check(CLI::PositiveNumber);
  bench_cmd->add_option("--model", bench_model, "Trained model file")
      ->required()
      ->check(CLI::ExistingFile);
  bench_cmd->add_option("--seed", bench_seed, "Workload generator seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (app.got_subcommand(analyze)) {
      return cmd_analyze(analyze_manifest, analyze_model, analyze_detections,
                         analyze_segmentation, analyze_out, analyze_two_stage, analyze_stage);
    }
    if (app.got_subcommand(train)) {
      return cmd_train(train_dataset, train_pair, train_config, train_out, train_init,
                       train_split);
    }
    if (app.got_subcommand(eval)) {
      return cmd_eval(eval_model, eval_dataset, eval_report, eval_json, eval_split);
    }
    if (app.got_subcommand(sample)) {
      return cmd_sample(sample_manifest, sample_out, sample_fractions, sample_seed);
    }
    if (app.got_subcommand(bench_cmd)) {
      return cmd_bench(bench_frames, bench_model, bench_seed);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
