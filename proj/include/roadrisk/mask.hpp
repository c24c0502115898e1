#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "roadrisk/image.hpp"
#include "roadrisk/risk.hpp"

namespace roadrisk {

/// Outer boundaries of every 4-connected component of pixels equal to
/// `value`, one polygon per component in row-major discovery order. Polygon
/// vertices are boundary pixel coordinates produced by Moore-neighbor border
/// tracing. Components whose bounding box has zero width or height (single
/// rows, columns or pixels) are discarded — they cannot form a lane region.
std::vector<Polygon> trace_components(const Mask& mask, std::uint8_t value);

/// Interprets a lane mask (1 = direct lane, 2 = alternative lane) as a
/// DrivableArea. The largest value-1 component becomes the direct lane
/// (smaller value-1 fragments are dropped); every value-2 component becomes
/// an alternative lane. Returns nullopt when no usable direct-lane component
/// exists.
std::optional<DrivableArea> mask_to_drivable_area(const Mask& mask);

}  // namespace roadrisk
