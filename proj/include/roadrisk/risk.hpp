#pragma once

#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "roadrisk/geometry.hpp"

namespace roadrisk {

/// Drivable area of one frame. The direct lane is the lane the ego vehicle
/// occupies; alternative lanes are reachable by lane change and may be empty.
struct DrivableArea {
  Polygon direct_lane;
  std::vector<Polygon> alternative_lanes;

  bool operator==(const DrivableArea&) const = default;
};

/// Verdict for one pedestrian detection. The lane/pedestrian box pair that
/// was tested is kept for audit. Distance is present exactly when risky.
struct PedestrianAssessment {
  std::size_t detection_index = 0;
  bool risky = false;
  std::optional<double> distance_ft;
  PixelBox lane_box;
  PixelBox pedestrian_box;

  bool operator==(const PedestrianAssessment&) const = default;
};

/// Flags every pedestrian whose bounding box overlaps the bounding rectangle
/// of the direct lane. The rectangle over-approximates the lane polygon on
/// purpose. Risky pedestrians carry an estimated distance; input order is
/// preserved and non-pedestrian detections never appear in the output.
std::vector<PedestrianAssessment> detect_risky_pedestrians(
    std::span<const Detection> detections, const DrivableArea& area,
    const HeightTable& heights, const CameraModel& camera = {});

enum class LaneRelation { direct, alternative, off_road };

std::string_view to_string(LaneRelation relation);
std::optional<LaneRelation> parse_lane_relation(std::string_view name);

/// Relates a box to the drivable area via lane bounding rectangles.
/// Direct-lane contact wins over alternative-lane contact.
LaneRelation lane_relation(const PixelBox& box, const DrivableArea& area);

}  // namespace roadrisk
