#include "roadrisk/risk.hpp"

namespace roadrisk {

std::vector<PedestrianAssessment> detect_risky_pedestrians(
    std::span<const Detection> detections, const DrivableArea& area,
    const HeightTable& heights, const CameraModel& camera) {
  const PixelBox lane_box = lane_bounding_box(area.direct_lane);

  std::vector<PedestrianAssessment> out;
  for (std::size_t i = 0; i < detections.size(); ++i) {
    const Detection& det = detections[i];
    if (det.cls != ObjectClass::pedestrian) continue;

    PedestrianAssessment a;
    a.detection_index = i;
    a.lane_box = lane_box;
    a.pedestrian_box = det.box;
    a.risky = boxes_intersect(lane_box, det.box);
    if (a.risky) {
      a.distance_ft = estimate_distance(box_height(det.box),
                                        heights.height_for(ObjectClass::pedestrian),
                                        camera);
    }
    out.push_back(std::move(a));
  }
  return out;
}

std::string_view to_string(LaneRelation relation) {
  switch (relation) {
    case LaneRelation::direct: return "direct";
    case LaneRelation::alternative: return "alternative";
    case LaneRelation::off_road: return "off_road";
  }
  return "off_road";
}

std::optional<LaneRelation> parse_lane_relation(std::string_view name) {
  if (name == "direct") return LaneRelation::direct;
  if (name == "alternative") return LaneRelation::alternative;
  if (name == "off_road") return LaneRelation::off_road;
  return std::nullopt;
}

LaneRelation lane_relation(const PixelBox& box, const DrivableArea& area) {
  if (boxes_intersect(box, lane_bounding_box(area.direct_lane))) {
    return LaneRelation::direct;
  }
  for (const Polygon& lane : area.alternative_lanes) {
    if (boxes_intersect(box, lane_bounding_box(lane))) {
      return LaneRelation::alternative;
    }
  }
  return LaneRelation::off_road;
}

}  // namespace roadrisk
