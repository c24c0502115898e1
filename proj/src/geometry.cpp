#include "roadrisk/geometry.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>
#include <string>

namespace roadrisk {

bool box_valid(const PixelBox& box) {
  return box.x_min < box.x_max && box.y_min < box.y_max;
}

int box_width(const PixelBox& box) { return box.x_max - box.x_min; }
int box_height(const PixelBox& box) { return box.y_max - box.y_min; }

bool is_vehicle(ObjectClass cls) {
  return cls == ObjectClass::car || cls == ObjectClass::suv || cls == ObjectClass::van;
}

std::string_view to_string(ObjectClass cls) {
  switch (cls) {
    case ObjectClass::car: return "car";
    case ObjectClass::suv: return "suv";
    case ObjectClass::van: return "van";
    case ObjectClass::pedestrian: return "pedestrian";
    case ObjectClass::other: return "other";
  }
  return "other";
}

std::optional<ObjectClass> parse_object_class(std::string_view name) {
  if (name == "car") return ObjectClass::car;
  if (name == "suv") return ObjectClass::suv;
  if (name == "van") return ObjectClass::van;
  if (name == "pedestrian") return ObjectClass::pedestrian;
  if (name == "other") return ObjectClass::other;
  return std::nullopt;
}

HeightTable::HeightTable() {
  heights_ft_ = {
      {ObjectClass::van, 7.0},
      {ObjectClass::suv, 6.0},
      {ObjectClass::car, 4.7},
      {ObjectClass::pedestrian, 5.6},
  };
}

double HeightTable::height_for(ObjectClass cls) const {
  auto it = heights_ft_.find(cls);
  if (it == heights_ft_.end()) {
    throw std::invalid_argument("no true height registered for class '" +
                                std::string(to_string(cls)) + "'");
  }
  return it->second;
}

bool HeightTable::has(ObjectClass cls) const { return heights_ft_.contains(cls); }

void HeightTable::set(ObjectClass cls, double feet) {
  if (!(feet > 0.0)) throw std::invalid_argument("object height must be positive");
  heights_ft_[cls] = feet;
}

RegionOfInterest roi_for_frame(int frame_width, int frame_height,
                               const GridWindow& window) {
  if (frame_width < 4 || frame_height < 4) {
    throw std::invalid_argument("frame smaller than 4x4 cannot be gridded");
  }
  if (window.col_begin < 0 || window.col_end > 4 || window.col_begin >= window.col_end ||
      window.row_begin < 0 || window.row_end > 4 || window.row_begin >= window.row_end) {
    throw std::invalid_argument("grid window must select a non-empty cell range in [0,4]");
  }
  PixelBox box{frame_width * window.col_begin / 4, frame_height * window.row_begin / 4,
               frame_width * window.col_end / 4, frame_height * window.row_end / 4};
  return RegionOfInterest{box};
}

double estimate_distance(int box_height_px, double true_height_ft,
                         const CameraModel& camera) {
  if (box_height_px <= 0) {
    throw std::invalid_argument("degenerate detection: box height must be positive");
  }
  if (!(true_height_ft > 0.0)) {
    throw std::invalid_argument("true object height must be positive");
  }
  return true_height_ft * camera.focal_pixels() / static_cast<double>(box_height_px);
}

bool boxes_intersect(const PixelBox& a, const PixelBox& b) {
  return a.x_min <= b.x_max && b.x_min <= a.x_max &&
         a.y_min <= b.y_max && b.y_min <= a.y_max;
}

std::optional<NearestVehicle> nearest_vehicle(std::span<const Detection> detections,
                                              const RegionOfInterest& roi,
                                              const HeightTable& heights,
                                              const CameraModel& camera) {
  std::optional<NearestVehicle> best;
  for (std::size_t i = 0; i < detections.size(); ++i) {
    const Detection& det = detections[i];
    if (!is_vehicle(det.cls)) continue;
    if (!boxes_intersect(det.box, roi.box)) continue;
    double d = estimate_distance(box_height(det.box), heights.height_for(det.cls), camera);
    if (!best || d < best->distance_ft) {
      best = NearestVehicle{i, d};
    }
  }
  return best;
}

PixelBox lane_bounding_box(const Polygon& polygon) {
  if (polygon.size() < 3) {
    throw std::invalid_argument("lane polygon needs at least 3 vertices");
  }
  PixelBox box{std::numeric_limits<int>::max(), std::numeric_limits<int>::max(),
               std::numeric_limits<int>::min(), std::numeric_limits<int>::min()};
  for (const PixelPoint& p : polygon) {
    box.x_min = std::min(box.x_min, p.x);
    box.y_min = std::min(box.y_min, p.y);
    box.x_max = std::max(box.x_max, p.x);
    box.y_max = std::max(box.y_max, p.y);
  }
  if (!box_valid(box)) {
    throw std::invalid_argument("lane polygon has zero extent in one axis");
  }
  return box;
}

}  // namespace roadrisk
