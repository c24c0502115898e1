#include "roadrisk/mask.hpp"

#include <algorithm>
#include <utility>

namespace roadrisk {

namespace {

// Moore neighborhood in clockwise screen order (y grows downward),
// starting at the west neighbor.
constexpr int kMooreX[8] = {-1, -1, 0, 1, 1, 1, 0, -1};
constexpr int kMooreY[8] = {0, -1, -1, -1, 0, 1, 1, 1};

int direction_of(int dx, int dy) {
  for (int d = 0; d < 8; ++d) {
    if (kMooreX[d] == dx && kMooreY[d] == dy) return d;
  }
  return 0;
}

// Moore-neighbor border tracing with Jacob's stopping criterion, restricted
// to one labeled component. `start` must be the component's first pixel in
// row-major order (its west and north neighbors are outside the component).
Polygon trace_boundary(const std::vector<int>& labels, int component, std::size_t width,
                       std::size_t height, PixelPoint start) {
  auto inside = [&](int x, int y) {
    return x >= 0 && y >= 0 && x < static_cast<int>(width) && y < static_cast<int>(height) &&
           labels[static_cast<std::size_t>(y) * width + static_cast<std::size_t>(x)] ==
               component;
  };

  Polygon poly{start};
  const int start_backtrack = 0;  // entered scanning from the west
  int px = start.x;
  int py = start.y;
  int backtrack = start_backtrack;

  const std::size_t max_steps = 4 * width * height + 8;
  for (std::size_t step = 0; step < max_steps; ++step) {
    int found = -1;
    for (int k = 1; k <= 8; ++k) {
      const int d = (backtrack + k) % 8;
      if (inside(px + kMooreX[d], py + kMooreY[d])) {
        found = d;
        break;
      }
    }
    if (found < 0) return poly;  // isolated pixel

    // The neighbor scanned just before the hit becomes the new backtrack.
    const int prev = (found + 7) % 8;
    const int bx = px + kMooreX[prev];
    const int by = py + kMooreY[prev];
    px += kMooreX[found];
    py += kMooreY[found];
    backtrack = direction_of(bx - px, by - py);

    if (px == start.x && py == start.y && backtrack == start_backtrack) break;
    poly.push_back({px, py});
  }
  return poly;
}

struct TracedComponent {
  Polygon boundary;
  std::size_t pixels = 0;
};

std::vector<TracedComponent> trace_with_sizes(const Mask& mask, std::uint8_t value) {
  const std::size_t width = mask.width;
  const std::size_t height = mask.height;
  std::vector<int> labels(width * height, -1);
  std::vector<TracedComponent> components;
  int next_component = 0;

  for (std::size_t y = 0; y < height; ++y) {
    for (std::size_t x = 0; x < width; ++x) {
      if (mask.at(y, x) != value || labels[y * width + x] != -1) continue;

      const int component = next_component++;
      std::size_t pixel_count = 1;
      std::vector<std::pair<std::size_t, std::size_t>> stack{{x, y}};
      labels[y * width + x] = component;
      while (!stack.empty()) {
        const auto [cx, cy] = stack.back();
        stack.pop_back();
        const std::pair<long long, long long> neighbors[4] = {
            {static_cast<long long>(cx) - 1, static_cast<long long>(cy)},
            {static_cast<long long>(cx) + 1, static_cast<long long>(cy)},
            {static_cast<long long>(cx), static_cast<long long>(cy) - 1},
            {static_cast<long long>(cx), static_cast<long long>(cy) + 1}};
        for (const auto& [nx, ny] : neighbors) {
          if (nx < 0 || ny < 0 || nx >= static_cast<long long>(width) ||
              ny >= static_cast<long long>(height)) {
            continue;
          }
          const std::size_t idx =
              static_cast<std::size_t>(ny) * width + static_cast<std::size_t>(nx);
          if (mask.values[idx] != value || labels[idx] != -1) continue;
          labels[idx] = component;
          ++pixel_count;
          stack.push_back({static_cast<std::size_t>(nx), static_cast<std::size_t>(ny)});
        }
      }

      Polygon poly = trace_boundary(labels, component, width, height,
                                    {static_cast<int>(x), static_cast<int>(y)});
      int min_x = poly[0].x, max_x = poly[0].x, min_y = poly[0].y, max_y = poly[0].y;
      for (const PixelPoint& p : poly) {
        min_x = std::min(min_x, p.x);
        max_x = std::max(max_x, p.x);
        min_y = std::min(min_y, p.y);
        max_y = std::max(max_y, p.y);
      }
      if (max_x > min_x && max_y > min_y) {
        components.push_back({std::move(poly), pixel_count});
      }
    }
  }
  return components;
}

}  // namespace

std::vector<Polygon> trace_components(const Mask& mask, std::uint8_t value) {
  std::vector<Polygon> polygons;
  for (TracedComponent& component : trace_with_sizes(mask, value)) {
    polygons.push_back(std::move(component.boundary));
  }
  return polygons;
}

std::optional<DrivableArea> mask_to_drivable_area(const Mask& mask) {
  std::vector<TracedComponent> direct = trace_with_sizes(mask, 1);
  if (direct.empty()) return std::nullopt;

  std::size_t best = 0;
  for (std::size_t i = 1; i < direct.size(); ++i) {
    if (direct[i].pixels > direct[best].pixels) best = i;
  }

  DrivableArea area;
  area.direct_lane = std::move(direct[best].boundary);
  area.alternative_lanes = trace_components(mask, 2);
  return area;
}

}  // namespace roadrisk
