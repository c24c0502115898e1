#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "roadrisk/labels.hpp"

namespace roadrisk {

enum class Split { train, val, test, unassigned };

std::string_view to_string(Split split);
std::optional<Split> parse_split(std::string_view name);

/// One source video plus the labels that apply to every frame of it.
/// `frame_path_template` names frame images with a literal "{frame}"
/// placeholder for the frame index; it may be empty when records are used
/// without image files.
struct VideoManifest {
  std::string video_id;
  double fps = 0.0;
  std::size_t frame_count = 0;
  std::optional<double> crash_time;  // seconds from video start
  std::optional<RoadFunction> road_function;
  std::optional<Weather> weather;
  std::optional<TimeOfDay> time_of_day;
  std::string frame_path_template;

  double duration() const { return static_cast<double>(frame_count) / fps; }
  /// Throws std::invalid_argument: empty id, fps <= 0, crash_time outside
  /// [0, duration], or a non-empty path template without "{frame}".
  void validate() const;
};

/// One sampled frame with whatever labels its video provides.
struct FrameRecord {
  std::string video_id;
  std::size_t frame_index = 0;
  double timestamp = 0.0;  // frame_index / fps
  std::string image_path;
  std::optional<CrashClass> crash;
  std::optional<RoadFunction> road;
  std::optional<Weather> weather;
  std::optional<TimeOfDay> time;
  Split split = Split::unassigned;

  bool operator==(const FrameRecord&) const = default;
};

/// "frame_id" used across sidecar files and reports.
std::string frame_id(std::string_view video_id, std::size_t frame_index);

/// Keep one frame, skip five: indices 0, 6, 12, ... < frame_count.
std::vector<std::size_t> sample_frames(std::size_t frame_count);

/// Temporal crash window for a frame at `t` seconds:
///   t >= crash_time                      -> crash
///   crash_time - 2 <= t < crash_time     -> pre_crash
///   crash_time - 5 <= t < crash_time - 2 -> no_crash
///   otherwise                            -> nullopt (outside the windows)
std::optional<CrashClass> crash_window_label(double t, double crash_time);

/// Labels for every frame index of the manifest (not just sampled ones).
/// Throws std::invalid_argument when the manifest has no crash_time.
std::vector<std::optional<CrashClass>> label_crash_windows(const VideoManifest& manifest);

/// Samples every manifest and attaches labels. Frames of crash videos that
/// fall outside the three windows are dropped; videos without crash_time
/// keep all sampled frames with the crash label absent.
std::vector<FrameRecord> build_records(std::span<const VideoManifest> manifests);

/// Expands the "{frame}" placeholder.
std::string frame_image_path(const VideoManifest& manifest, std::size_t frame_index);

struct SplitFractions {
  double train = 0.0;
  double val = 0.0;
  double test = 0.0;
};

/// Assigns every record a split, keeping all frames of one video together.
/// Split sizes follow the fractions by largest-remainder targets; shuffled
/// videos are assigned greedily to the split with the largest remaining
/// deficit. Deterministic in `seed`. Fractions must be non-negative and sum
/// to 1 within 1e-9.
void split_records(std::vector<FrameRecord>& records, const SplitFractions& fractions,
                   std::uint32_t seed);

struct ClassBalance {
  std::vector<std::uint64_t> counts;  // per class of the task
  std::uint64_t total = 0;
  double ratio = 0.0;  // largest nonzero count / smallest nonzero count
};

/// Counts task labels over the records. Throws std::invalid_argument when no
/// record carries the label or fewer than two classes are populated (the
/// ratio would be meaningless).
ClassBalance class_balance(std::span<const FrameRecord> records, Task task);

/// Line-delimited JSON manifests; validates each entry.
/// Throws std::runtime_error with the offending line number on parse errors.
std::vector<VideoManifest> read_manifests(const std::filesystem::path& path);
void write_manifests(std::span<const VideoManifest> manifests,
                     const std::filesystem::path& path);

/// Records file: one JSON line per frame followed by one {"summary": ...}
/// line with per-split totals and per-task class counts.
void write_records(std::span<const FrameRecord> records, const std::filesystem::path& path);
std::vector<FrameRecord> read_records(const std::filesystem::path& path);

}  // namespace roadrisk
