#include "roadrisk/providers.hpp"

#include <fstream>
#include <ostream>
#include <stdexcept>

#include "json.hpp"

namespace roadrisk {

using nlohmann::json;

namespace {

[[noreturn]] void fail_line(const std::filesystem::path& path, std::size_t line,
                            const std::string& what) {
  throw std::runtime_error(path.string() + ":" + std::to_string(line) + ": " + what);
}

json parse_line(const std::filesystem::path& path, std::size_t line_no,
                const std::string& line) {
  try {
    return json::parse(line);
  } catch (const json::exception& e) {
    fail_line(path, line_no, std::string("invalid JSON: ") + e.what());
  }
}

Polygon vertices_from_json(const json& arr, const std::filesystem::path& path,
                           std::size_t line_no) {
  if (!arr.is_array()) fail_line(path, line_no, "vertices must be an array of [x, y] pairs");
  Polygon poly;
  for (const json& v : arr) {
    if (!v.is_array() || v.size() != 2) {
      fail_line(path, line_no, "each vertex must be an [x, y] pair");
    }
    poly.push_back({v[0].get<int>(), v[1].get<int>()});
  }
  return poly;
}

}  // namespace

SidecarDetectionProvider::SidecarDetectionProvider(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open detection sidecar: " + path.string());

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const json j = parse_line(path, line_no, line);

    Detection det;
    std::string frame;
    try {
      frame = j.at("frame_id").get<std::string>();
      const auto class_text = j.at("class").get<std::string>();
      const auto cls = parse_object_class(class_text);
      if (!cls) fail_line(path, line_no, "unknown object class '" + class_text + "'");
      det.cls = *cls;
      det.box.x_min = j.at("x_min").get<int>();
      det.box.y_min = j.at("y_min").get<int>();
      det.box.x_max = j.at("x_max").get<int>();
      det.box.y_max = j.at("y_max").get<int>();
      det.confidence = j.at("confidence").get<double>();
    } catch (const json::exception& e) {
      fail_line(path, line_no, std::string("bad detection fields: ") + e.what());
    }
    if (!box_valid(det.box)) fail_line(path, line_no, "invalid bounding box");
    if (det.confidence < 0.0 || det.confidence > 1.0) {
      fail_line(path, line_no, "confidence outside [0, 1]");
    }
    by_frame_[frame].push_back(det);
  }
}

std::vector<Detection> SidecarDetectionProvider::detections_for(
    const std::string& frame_id) const {
  const auto it = by_frame_.find(frame_id);
  return it == by_frame_.end() ? std::vector<Detection>{} : it->second;
}

SidecarSegmentationProvider::SidecarSegmentationProvider(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open segmentation sidecar: " + path.string());

  struct PendingArea {
    std::optional<Polygon> direct;
    std::vector<Polygon> alternatives;
    std::optional<std::filesystem::path> mask_path;
  };
  std::map<std::string, PendingArea> pending;

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const json j = parse_line(path, line_no, line);

    std::string frame;
    try {
      frame = j.at("frame_id").get<std::string>();
    } catch (const json::exception& e) {
      fail_line(path, line_no, std::string("bad segmentation fields: ") + e.what());
    }
    PendingArea& entry = pending[frame];

    if (j.contains("mask")) {
      if (entry.mask_path) fail_line(path, line_no, "duplicate mask for frame " + frame);
      std::filesystem::path mask_path = j["mask"].get<std::string>();
      if (mask_path.is_relative()) mask_path = path.parent_path() / mask_path;
      entry.mask_path = mask_path;
      continue;
    }

    std::string kind;
    try {
      kind = j.at("lane_kind").get<std::string>();
    } catch (const json::exception& e) {
      fail_line(path, line_no, std::string("bad segmentation fields: ") + e.what());
    }
    Polygon poly = vertices_from_json(j.value("vertices", json::array()), path, line_no);
    if (kind == "direct") {
      if (entry.direct) {
        fail_line(path, line_no, "multiple direct-lane polygons for frame " + frame);
      }
      entry.direct = std::move(poly);
    } else if (kind == "alternative") {
      entry.alternatives.push_back(std::move(poly));
    } else {
      fail_line(path, line_no, "unknown lane_kind '" + kind + "'");
    }
  }

  for (auto& [frame, entry] : pending) {
    if (entry.mask_path) {
      if (auto area = mask_to_drivable_area(read_pgm(*entry.mask_path))) {
        by_frame_[frame] = std::move(*area);
      }
      continue;
    }
    if (!entry.direct) {
      throw std::runtime_error(path.string() + ": frame " + frame +
                               " has lane polygons but no direct lane");
    }
    by_frame_[frame] =
        DrivableArea{std::move(*entry.direct), std::move(entry.alternatives)};
  }
}

std::optional<DrivableArea> SidecarSegmentationProvider::area_for(
    const std::string& frame_id) const {
  const auto it = by_frame_.find(frame_id);
  if (it == by_frame_.end()) return std::nullopt;
  return it->second;
}

void append_area_sidecar(std::ostream& out, const std::string& frame_id,
                         const DrivableArea& area) {
  auto polygon_line = [&](const Polygon& poly, const char* kind) {
    json vertices = json::array();
    for (const PixelPoint& p : poly) vertices.push_back({p.x, p.y});
    const json j = {{"frame_id", frame_id}, {"lane_kind", kind}, {"vertices", vertices}};
    out << j.dump() << '\n';
  };
  polygon_line(area.direct_lane, "direct");
  for (const Polygon& lane : area.alternative_lanes) polygon_line(lane, "alternative");
}

}  // namespace roadrisk
