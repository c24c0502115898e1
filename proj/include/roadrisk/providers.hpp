#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "roadrisk/geometry.hpp"
#include "roadrisk/mask.hpp"
#include "roadrisk/risk.hpp"

namespace roadrisk {

/// Source of per-frame object detections. Implementations must be
/// deterministic for a given frame id within one run.
class DetectionProvider {
 public:
  virtual ~DetectionProvider() = default;
  virtual std::vector<Detection> detections_for(const std::string& frame_id) const = 0;
};

/// Source of per-frame drivable areas; nullopt means "no segmentation for
/// this frame" and downstream pedestrian risk is skipped.
class SegmentationProvider {
 public:
  virtual ~SegmentationProvider() = default;
  virtual std::optional<DrivableArea> area_for(const std::string& frame_id) const = 0;
};

/// Detections from a sidecar file: one JSON object per line with fields
/// {frame_id, class, x_min, y_min, x_max, y_max, confidence}. Frames not
/// mentioned in the file simply have no detections.
class SidecarDetectionProvider final : public DetectionProvider {
 public:
  explicit SidecarDetectionProvider(const std::filesystem::path& path);

  std::vector<Detection> detections_for(const std::string& frame_id) const override;

 private:
  std::map<std::string, std::vector<Detection>> by_frame_;
};

/// Drivable areas from a sidecar file. Each line carries either a polygon
/// record {frame_id, lane_kind: direct|alternative, vertices: [[x,y],...]}
/// or a raster reference {frame_id, mask: <pgm path>} (resolved relative to
/// the sidecar's directory). A frame's area comes from its mask if present,
/// otherwise from its polygon records; a frame needs exactly one direct
/// lane.
class SidecarSegmentationProvider final : public SegmentationProvider {
 public:
  explicit SidecarSegmentationProvider(const std::filesystem::path& path);

  std::optional<DrivableArea> area_for(const std::string& frame_id) const override;

 private:
  std::map<std::string, DrivableArea> by_frame_;
};

/// Always returns no area.
class NullSegmentationProvider final : public SegmentationProvider {
 public:
  std::optional<DrivableArea> area_for(const std::string&) const override {
    return std::nullopt;
  }
};

/// Appends polygon sidecar lines describing one frame's area, in the format
/// SidecarSegmentationProvider reads. Used by the two-stage pipeline to
/// persist the segmentation pass.
void append_area_sidecar(std::ostream& out, const std::string& frame_id,
                         const DrivableArea& area);

}  // namespace roadrisk
