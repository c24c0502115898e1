#pragma once

#include <map>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace roadrisk {

/// Axis-aligned pixel rectangle, origin top-left. Treated as a closed set:
/// boxes touching only along an edge or corner still intersect.
struct PixelBox {
  int x_min = 0;
  int y_min = 0;
  int x_max = 0;
  int y_max = 0;

  bool operator==(const PixelBox&) const = default;
};

bool box_valid(const PixelBox& box);
int box_width(const PixelBox& box);
int box_height(const PixelBox& box);

struct PixelPoint {
  int x = 0;
  int y = 0;

  bool operator==(const PixelPoint&) const = default;
};

using Polygon = std::vector<PixelPoint>;

/// Pinhole model of the dash camera. The defaults give a focal length of
/// 250 px, which makes estimate_distance() return feet when object heights
/// are given in feet.
struct CameraModel {
  double focal_length_inches = 2.5;
  double pixels_per_inch = 100.0;

  double focal_pixels() const { return focal_length_inches * pixels_per_inch; }
};

enum class ObjectClass { car, suv, van, pedestrian, other };

bool is_vehicle(ObjectClass cls);
std::string_view to_string(ObjectClass cls);
std::optional<ObjectClass> parse_object_class(std::string_view name);

/// True object heights in feet, keyed by detected class. Distances are only
/// estimated for classes present in the table.
class HeightTable {
 public:
  /// van 7.0, suv 6.0, car 4.7, pedestrian 5.6.
  HeightTable();

  double height_for(ObjectClass cls) const;  // throws if the class is unknown
  bool has(ObjectClass cls) const;
  void set(ObjectClass cls, double feet);  // feet must be > 0

 private:
  std::map<ObjectClass, double> heights_ft_;
};

/// An object detection as delivered by the detection provider.
struct Detection {
  ObjectClass cls = ObjectClass::other;
  PixelBox box;
  double confidence = 0.0;
};

/// Cell window of the 4x4 frame grid, in grid units (0..4 on each axis).
/// The default selects the bottom two rows and middle two columns, the
/// region where the ego vehicle's travel path sits.
struct GridWindow {
  int col_begin = 1;
  int col_end = 3;
  int row_begin = 2;
  int row_end = 4;
};

struct RegionOfInterest {
  PixelBox box;
};

/// Selected cells of the 4x4 grid over a frame of the given size, as one
/// axis-aligned box with floor arithmetic. Frames must be at least 4x4.
RegionOfInterest roi_for_frame(int frame_width, int frame_height,
                               const GridWindow& window = {});

/// Distance in feet from the camera to an object of known true height whose
/// image occupies box_height_px vertical pixels: true_height * focal / height.
double estimate_distance(int box_height_px, double true_height_ft,
                         const CameraModel& camera = {});

/// Closed-box intersection test; edge and corner contact count as overlap.
bool boxes_intersect(const PixelBox& a, const PixelBox& b);

struct NearestVehicle {
  std::size_t index = 0;  // into the detections list
  double distance_ft = 0.0;
};

/// The vehicle detection (car/suv/van) intersecting the region of interest
/// with the smallest estimated distance. Ties go to the lowest index. Empty
/// result when no vehicle touches the region.
std::optional<NearestVehicle> nearest_vehicle(std::span<const Detection> detections,
                                              const RegionOfInterest& roi,
                                              const HeightTable& heights,
                                              const CameraModel& camera = {});

/// Minimum axis-aligned rectangle containing all polygon vertices. Requires
/// at least 3 vertices and positive extent on both axes.
PixelBox lane_bounding_box(const Polygon& polygon);

}  // namespace roadrisk
