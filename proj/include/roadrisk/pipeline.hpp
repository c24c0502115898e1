#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "roadrisk/dataset.hpp"
#include "roadrisk/geometry.hpp"
#include "roadrisk/metrics.hpp"
#include "roadrisk/multinet.hpp"
#include "roadrisk/providers.hpp"
#include "roadrisk/risk.hpp"

namespace roadrisk {

struct StageTimings {
  double classification_ms = 0.0;
  double detection_ms = 0.0;
  double segmentation_ms = 0.0;
};

struct NearestVehicleReport {
  std::size_t detection_index = 0;
  double distance_ft = 0.0;
  /// Lane relation of the vehicle's box; absent when no drivable area was
  /// available for the frame.
  std::optional<LaneRelation> relation;

  bool operator==(const NearestVehicleReport&) const = default;
};

/// Complete analysis of one frame.
struct RiskReport {
  std::string frame_id;
  SceneLabels labels;
  bool area_present = false;
  std::vector<PedestrianAssessment> pedestrians;
  std::optional<NearestVehicleReport> nearest_vehicle;
  StageTimings timings;
};

/// Field-wise equality ignoring the wall-time measurements.
bool same_analysis(const RiskReport& a, const RiskReport& b);

std::string report_json_line(const RiskReport& report, bool include_timings = true);
RiskReport report_from_json_line(const std::string& line);
std::vector<RiskReport> read_reports(const std::filesystem::path& path);

/// Runs the full per-frame analysis: scene classification, nearest-vehicle
/// search over the frame's region of interest, and — when a drivable area is
/// available — risky-pedestrian detection. Sub-module errors are rethrown as
/// std::runtime_error prefixed with the frame id.
RiskReport analyze_frame(const std::string& frame_id, const Tensor& image,
                         std::span<const Detection> detections,
                         const std::optional<DrivableArea>& area, const MultiNet& model,
                         const CameraModel& camera = {}, const HeightTable& heights = {});

/// single_pass queries the segmentation provider inline; two_stage first
/// sweeps segmentation for all frames into a polygon sidecar (stage_path),
/// then replays it during the classification+detection pass. Both modes
/// produce the same analysis for every frame.
enum class RunMode { single_pass, two_stage };

struct RunOptions {
  RunMode mode = RunMode::single_pass;
  std::filesystem::path report_path;  // JSONL output, one report per frame
  std::filesystem::path stage_path;   // two-stage intermediate sidecar
  CameraModel camera;
  HeightTable heights;
};

struct RunSummary {
  std::size_t frames_analyzed = 0;
  std::size_t frames_skipped = 0;  // unresolvable image references
  double mean_classification_ms = 0.0;
  double mean_detection_ms = 0.0;
  double mean_segmentation_ms = 0.0;
  double total_wall_seconds = 0.0;
  double fps = 0.0;          // frames_analyzed / total_wall_seconds
  bool fps_defined = false;  // false when no frame was analyzed
};

/// Analyzes every sampled frame of every manifest, in manifest order, one
/// report line per frame. Missing frame images are skipped with a warning on
/// stderr and counted; provider errors abort with context.
RunSummary run(std::span<const VideoManifest> manifests, const DetectionProvider& detections,
               const SegmentationProvider& segmentation, const MultiNet& model,
               const RunOptions& options);

struct BenchStats {
  std::size_t frames = 0;
  double mean_ms = 0.0;
  double median_ms = 0.0;
  double p95_ms = 0.0;  // nearest-rank percentile
  double fps = 0.0;     // frames / total latency seconds
  bool meets_sampling_reference = false;  // fps >= 5, the frame sampling rate
};

/// Times analyze_frame over a deterministic synthetic workload (images,
/// detections and lane polygons generated from the seed).
BenchStats bench(std::size_t n_frames, const MultiNet& model, std::uint32_t seed = 0);

/// Loads each record's image and carries its labels over as class indices.
/// Every record must reference a readable image.
std::vector<TrainingSample> load_training_samples(std::span<const FrameRecord> records);

struct EvalResult {
  ConfusionMatrix crash;
  ConfusionMatrix road;
  ConfusionMatrix weather;
  ConfusionMatrix time;
  std::size_t frames_evaluated = 0;
};

/// Classifies every record's image; each task's confusion matrix collects
/// the records labeled for that task.
EvalResult evaluate(const MultiNet& model, std::span<const FrameRecord> records);

}  // namespace roadrisk
