#include "roadrisk/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <stdexcept>

#include "json.hpp"

#include "roadrisk/image.hpp"
#include "roadrisk/rng.hpp"

namespace roadrisk {

using nlohmann::json;

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

void check_detections(std::span<const Detection> detections, int frame_w, int frame_h) {
  for (std::size_t i = 0; i < detections.size(); ++i) {
    const Detection& det = detections[i];
    if (!box_valid(det.box)) {
      throw std::invalid_argument("detection " + std::to_string(i) +
                                  " has an invalid bounding box");
    }
    if (det.box.x_min < 0 || det.box.y_min < 0 || det.box.x_max >= frame_w ||
        det.box.y_max >= frame_h) {
      throw std::invalid_argument("detection " + std::to_string(i) +
                                  " lies outside the frame");
    }
    if (det.confidence < 0.0 || det.confidence > 1.0) {
      throw std::invalid_argument("detection " + std::to_string(i) +
                                  " has confidence outside [0, 1]");
    }
  }
}

}  // namespace

bool same_analysis(const RiskReport& a, const RiskReport& b) {
  return a.frame_id == b.frame_id && a.labels == b.labels &&
         a.area_present == b.area_present && a.pedestrians == b.pedestrians &&
         a.nearest_vehicle == b.nearest_vehicle;
}

RiskReport analyze_frame(const std::string& frame_id, const Tensor& image,
                         std::span<const Detection> detections,
                         const std::optional<DrivableArea>& area, const MultiNet& model,
                         const CameraModel& camera, const HeightTable& heights) {
  try {
    RiskReport report;
    report.frame_id = frame_id;

    auto started = Clock::now();
    report.labels = model.classify(image).labels;
    report.timings.classification_ms = ms_since(started);

    const int frame_w = static_cast<int>(image.dim(1));
    const int frame_h = static_cast<int>(image.dim(0));

    started = Clock::now();
    check_detections(detections, frame_w, frame_h);
    const RegionOfInterest roi = roi_for_frame(frame_w, frame_h);
    if (const auto nearest = nearest_vehicle(detections, roi, heights, camera)) {
      NearestVehicleReport nv;
      nv.detection_index = nearest->index;
      nv.distance_ft = nearest->distance_ft;
      if (area) nv.relation = lane_relation(detections[nearest->index].box, *area);
      report.nearest_vehicle = nv;
    }
    report.timings.detection_ms = ms_since(started);

    started = Clock::now();
    if (area) {
      report.area_present = true;
      report.pedestrians = detect_risky_pedestrians(detections, *area, heights, camera);
    }
    report.timings.segmentation_ms = ms_since(started);
    return report;
  } catch (const std::exception& e) {
    throw std::runtime_error("frame '" + frame_id + "': " + e.what());
  }
}

namespace {

json box_to_json(const PixelBox& box) {
  return json::array({box.x_min, box.y_min, box.x_max, box.y_max});
}

PixelBox box_from_json(const json& arr) {
  if (!arr.is_array() || arr.size() != 4) {
    throw std::runtime_error("report line: box must be [x_min, y_min, x_max, y_max]");
  }
  return {arr[0].get<int>(), arr[1].get<int>(), arr[2].get<int>(), arr[3].get<int>()};
}

}  // namespace

std::string report_json_line(const RiskReport& report, bool include_timings) {
  json j;
  j["frame_id"] = report.frame_id;
  j["labels"] = {{"crash_likelihood", std::string(to_string(report.labels.crash))},
                 {"road_function", std::string(to_string(report.labels.road))},
                 {"weather", std::string(to_string(report.labels.weather))},
                 {"time_of_day", std::string(to_string(report.labels.time))}};
  j["area_present"] = report.area_present;

  j["pedestrians"] = json::array();
  for (const PedestrianAssessment& ped : report.pedestrians) {
    json p = {{"detection_index", ped.detection_index},
              {"risky", ped.risky},
              {"lane_box", box_to_json(ped.lane_box)},
              {"pedestrian_box", box_to_json(ped.pedestrian_box)}};
    if (ped.distance_ft) p["distance_ft"] = *ped.distance_ft;
    j["pedestrians"].push_back(std::move(p));
  }

  if (report.nearest_vehicle) {
    json nv = {{"detection_index", report.nearest_vehicle->detection_index},
               {"distance_ft", report.nearest_vehicle->distance_ft}};
    if (report.nearest_vehicle->relation) {
      nv["lane_relation"] = std::string(to_string(*report.nearest_vehicle->relation));
    }
    j["nearest_vehicle"] = std::move(nv);
  } else {
    j["nearest_vehicle"] = nullptr;
  }

  if (include_timings) {
    j["timings_ms"] = {{"classification", report.timings.classification_ms},
                       {"detection", report.timings.detection_ms},
                       {"segmentation", report.timings.segmentation_ms}};
  }
  return j.dump();
}

RiskReport report_from_json_line(const std::string& line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("report line is not valid JSON: ") + e.what());
  }

  RiskReport report;
  try {
    report.frame_id = j.at("frame_id").get<std::string>();
    const json& labels = j.at("labels");
    auto parse_or_throw = [](auto parser, const std::string& text, const char* what) {
      const auto value = parser(text);
      if (!value) throw std::runtime_error(std::string("unknown ") + what + " '" + text + "'");
      return *value;
    };
    report.labels.crash = parse_or_throw(
        parse_crash_class, labels.at("crash_likelihood").get<std::string>(), "crash class");
    report.labels.road = parse_or_throw(
        parse_road_function, labels.at("road_function").get<std::string>(), "road function");
    report.labels.weather =
        parse_or_throw(parse_weather, labels.at("weather").get<std::string>(), "weather");
    report.labels.time = parse_or_throw(
        parse_time_of_day, labels.at("time_of_day").get<std::string>(), "time of day");
    report.area_present = j.at("area_present").get<bool>();

    for (const json& p : j.at("pedestrians")) {
      PedestrianAssessment ped;
      ped.detection_index = p.at("detection_index").get<std::size_t>();
      ped.risky = p.at("risky").get<bool>();
      if (p.contains("distance_ft")) ped.distance_ft = p["distance_ft"].get<double>();
      ped.lane_box = box_from_json(p.at("lane_box"));
      ped.pedestrian_box = box_from_json(p.at("pedestrian_box"));
      report.pedestrians.push_back(ped);
    }

    if (!j.at("nearest_vehicle").is_null()) {
      const json& nv = j["nearest_vehicle"];
      NearestVehicleReport nearest;
      nearest.detection_index = nv.at("detection_index").get<std::size_t>();
      nearest.distance_ft = nv.at("distance_ft").get<double>();
      if (nv.contains("lane_relation")) {
        nearest.relation = parse_or_throw(
            parse_lane_relation, nv["lane_relation"].get<std::string>(), "lane relation");
      }
      report.nearest_vehicle = nearest;
    }

    if (j.contains("timings_ms")) {
      const json& t = j["timings_ms"];
      report.timings.classification_ms = t.at("classification").get<double>();
      report.timings.detection_ms = t.at("detection").get<double>();
      report.timings.segmentation_ms = t.at("segmentation").get<double>();
    }
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("report line is malformed: ") + e.what());
  }
  return report;
}

std::vector<RiskReport> read_reports(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open report file: " + path.string());
  std::vector<RiskReport> reports;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) reports.push_back(report_from_json_line(line));
  }
  return reports;
}

RunSummary run(std::span<const VideoManifest> manifests, const DetectionProvider& detections,
               const SegmentationProvider& segmentation, const MultiNet& model,
               const RunOptions& options) {
  const auto run_started = Clock::now();

  // Two-stage: persist the segmentation pass, then replay it from disk.
  std::optional<SidecarSegmentationProvider> replay;
  if (options.mode == RunMode::two_stage) {
    if (options.stage_path.empty()) {
      throw std::invalid_argument("two-stage mode needs a stage_path");
    }
    std::ofstream stage(options.stage_path, std::ios::trunc);
    if (!stage) {
      throw std::runtime_error("cannot open stage file for writing: " +
                               options.stage_path.string());
    }
    for (const VideoManifest& manifest : manifests) {
      for (std::size_t index : sample_frames(manifest.frame_count)) {
        const std::string fid = frame_id(manifest.video_id, index);
        if (const auto area = segmentation.area_for(fid)) {
          append_area_sidecar(stage, fid, *area);
        }
      }
    }
    stage.flush();
    if (!stage) {
      throw std::runtime_error("failed writing stage file: " + options.stage_path.string());
    }
    replay.emplace(options.stage_path);
  }
  const SegmentationProvider& areas =
      replay ? static_cast<const SegmentationProvider&>(*replay) : segmentation;

  std::ofstream out(options.report_path, std::ios::trunc);
  if (!out) {
    throw std::runtime_error("cannot open report file for writing: " +
                             options.report_path.string());
  }

  RunSummary summary;
  double class_ms = 0.0, det_ms = 0.0, seg_ms = 0.0;
  for (const VideoManifest& manifest : manifests) {
    manifest.validate();
    for (std::size_t index : sample_frames(manifest.frame_count)) {
      const std::string fid = frame_id(manifest.video_id, index);
      const std::string image_path = frame_image_path(manifest, index);
      if (image_path.empty() || !std::filesystem::exists(image_path)) {
        std::cerr << "warning: skipping frame " << fid << ": image '" << image_path
                  << "' not found\n";
        ++summary.frames_skipped;
        continue;
      }

      const Tensor image = read_ppm(image_path);
      const RiskReport report = analyze_frame(fid, image, detections.detections_for(fid),
                                              areas.area_for(fid), model, options.camera,
                                              options.heights);
      out << report_json_line(report) << '\n';
      ++summary.frames_analyzed;
      class_ms += report.timings.classification_ms;
      det_ms += report.timings.detection_ms;
      seg_ms += report.timings.segmentation_ms;
    }
  }
  out.flush();
  if (!out) {
    throw std::runtime_error("failed writing report file: " + options.report_path.string());
  }

  summary.total_wall_seconds =
      std::chrono::duration<double>(Clock::now() - run_started).count();
  if (summary.frames_analyzed > 0) {
    const double n = static_cast<double>(summary.frames_analyzed);
    summary.mean_classification_ms = class_ms / n;
    summary.mean_detection_ms = det_ms / n;
    summary.mean_segmentation_ms = seg_ms / n;
    if (summary.total_wall_seconds > 0.0) {
      summary.fps = n / summary.total_wall_seconds;
      summary.fps_defined = true;
    }
  }
  return summary;
}

namespace {

/// Deterministic synthetic scene for throughput measurements: a noisy
/// gradient frame, one vehicle and one pedestrian, and a trapezoidal direct
/// lane at the bottom of the frame.
struct SyntheticScene {
  Tensor image;
  std::vector<Detection> detections;
  DrivableArea area;
};

SyntheticScene make_scene(std::uint32_t seed, std::size_t frame_number) {
  constexpr int kW = 160;
  constexpr int kH = 120;
  Rng rng(Rng::derive(seed, static_cast<std::uint32_t>(frame_number) * 2654435761u + 17u));

  SyntheticScene scene{Tensor({kH, kW, 3}), {}, {}};
  for (int y = 0; y < kH; ++y) {
    for (int x = 0; x < kW; ++x) {
      for (int c = 0; c < 3; ++c) {
        const float base = static_cast<float>(y) / (kH - 1) * 0.6f +
                           static_cast<float>(x) / (kW - 1) * 0.2f;
        scene.image.at(static_cast<std::size_t>(y), static_cast<std::size_t>(x),
                       static_cast<std::size_t>(c)) =
            std::clamp(base + rng.uniformf(-0.1f, 0.1f), 0.0f, 1.0f);
      }
    }
  }

  auto random_box = [&](int max_w, int max_h) {
    const int w = rng.int_range(8, max_w);
    const int h = rng.int_range(8, max_h);
    const int x = rng.int_range(0, kW - 1 - w);
    const int y = rng.int_range(0, kH - 1 - h);
    return PixelBox{x, y, x + w, y + h};
  };
  scene.detections.push_back({ObjectClass::car, random_box(60, 40), 0.9});
  scene.detections.push_back({ObjectClass::pedestrian, random_box(20, 40), 0.8});

  scene.area.direct_lane = {{kW / 2 - 12, kH / 2}, {kW / 2 + 12, kH / 2},
                            {kW - 20, kH - 1},     {20, kH - 1}};
  scene.area.alternative_lanes.push_back(
      {{10, kH / 2}, {kW / 2 - 16, kH / 2}, {kW / 2 - 4, kH - 1}, {1, kH - 1}});
  return scene;
}

}  // namespace

BenchStats bench(std::size_t n_frames, const MultiNet& model, std::uint32_t seed) {
  if (n_frames == 0) throw std::invalid_argument("bench needs at least one frame");

  std::vector<double> latencies_ms;
  latencies_ms.reserve(n_frames);
  for (std::size_t i = 0; i < n_frames; ++i) {
    const SyntheticScene scene = make_scene(seed, i);
    const auto started = Clock::now();
    const RiskReport report = analyze_frame("bench_" + std::to_string(i), scene.image,
                                            scene.detections, scene.area, model);
    latencies_ms.push_back(ms_since(started));
    (void)report;
  }

  std::vector<double> sorted = latencies_ms;
  std::sort(sorted.begin(), sorted.end());
  double total_ms = 0.0;
  for (double v : sorted) total_ms += v;

  BenchStats stats;
  stats.frames = n_frames;
  stats.mean_ms = total_ms / static_cast<double>(n_frames);
  stats.median_ms = (n_frames % 2 == 1)
                        ? sorted[n_frames / 2]
                        : 0.5 * (sorted[n_frames / 2 - 1] + sorted[n_frames / 2]);
  const std::size_t rank =
      static_cast<std::size_t>(std::ceil(0.95 * static_cast<double>(n_frames)));
  stats.p95_ms = sorted[std::max<std::size_t>(rank, 1) - 1];
  stats.fps = static_cast<double>(n_frames) / (total_ms / 1000.0);
  stats.meets_sampling_reference = stats.fps >= 5.0;
  return stats;
}

std::vector<TrainingSample> load_training_samples(std::span<const FrameRecord> records) {
  std::vector<TrainingSample> samples;
  samples.reserve(records.size());
  for (const FrameRecord& rec : records) {
    if (rec.image_path.empty()) {
      throw std::invalid_argument("record " + frame_id(rec.video_id, rec.frame_index) +
                                  " has no image path");
    }
    TrainingSample sample;
    sample.image = read_ppm(rec.image_path);
    if (rec.crash) sample.crash = static_cast<std::size_t>(*rec.crash);
    if (rec.road) sample.road = static_cast<std::size_t>(*rec.road);
    if (rec.weather) sample.weather = static_cast<std::size_t>(*rec.weather);
    if (rec.time) sample.time = static_cast<std::size_t>(*rec.time);
    samples.push_back(std::move(sample));
  }
  return samples;
}

EvalResult evaluate(const MultiNet& model, std::span<const FrameRecord> records) {
  std::vector<std::size_t> truth[4];
  std::vector<std::size_t> predicted[4];

  std::size_t evaluated = 0;
  for (const FrameRecord& rec : records) {
    if (rec.image_path.empty()) {
      throw std::invalid_argument("record " + frame_id(rec.video_id, rec.frame_index) +
                                  " has no image path");
    }
    const Classification result = model.classify(read_ppm(rec.image_path));
    ++evaluated;
    if (rec.crash) {
      truth[0].push_back(static_cast<std::size_t>(*rec.crash));
      predicted[0].push_back(static_cast<std::size_t>(result.labels.crash));
    }
    if (rec.road) {
      truth[1].push_back(static_cast<std::size_t>(*rec.road));
      predicted[1].push_back(static_cast<std::size_t>(result.labels.road));
    }
    if (rec.weather) {
      truth[2].push_back(static_cast<std::size_t>(*rec.weather));
      predicted[2].push_back(static_cast<std::size_t>(result.labels.weather));
    }
    if (rec.time) {
      truth[3].push_back(static_cast<std::size_t>(*rec.time));
      predicted[3].push_back(static_cast<std::size_t>(result.labels.time));
    }
  }

  auto matrix_for = [&](Task task, int slot) {
    std::vector<std::string> names;
    for (std::string_view name : class_names(task)) names.emplace_back(name);
    return confusion(truth[slot], predicted[slot], class_count(task), std::move(names));
  };
  EvalResult result{matrix_for(Task::crash_likelihood, 0), matrix_for(Task::road_function, 1),
                    matrix_for(Task::weather, 2), matrix_for(Task::time_of_day, 3),
                    evaluated};
  return result;
}

}  // namespace roadrisk
