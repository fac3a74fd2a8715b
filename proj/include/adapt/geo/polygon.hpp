#pragma once

#include <adapt/geo/camera.hpp>
#include <adapt/geo/geodesy.hpp>

#include <cstdint>
#include <vector>

namespace adapt::geo {

/// Closed ring: the last vertex repeats the first.
using PixelRing = std::vector<PixelPoint>;

/// One connected region of a class in image space, with even-odd holes.
struct PixelPolygon {
    std::uint8_t class_id = 0;
    PixelRing outer;
    std::vector<PixelRing> holes;
};

using GeoRing = std::vector<GeodeticPosition>;

struct GeoPolygon {
    std::uint8_t class_id = 0;
    GeoRing outer;
    std::vector<GeoRing> holes;
};

/// Georegistered analytics for one image.
struct GeoPolygonSet {
    std::uint64_t image_id = 0;
    std::vector<GeoPolygon> class_polygons;
    GeoRing footprint; ///< ground outline of the usable image area (may be empty)
    std::size_t encoded_bytes = 0;
    bool horizon_clipped = false;  ///< some ring was cut at the horizon threshold
    bool above_horizon = false;    ///< input had rings but every one lay above the horizon
};

template <typename Point>
[[nodiscard]] bool is_closed(const std::vector<Point>& ring) {
    return ring.size() >= 2 && ring.front().x == ring.back().x && ring.front().y == ring.back().y;
}

/// Shoelace area of a closed ring (positive when counter-clockwise in a
/// y-up frame).
[[nodiscard]] inline double signed_area(const PixelRing& ring) {
    double a = 0.0;
    for (std::size_t i = 0; i + 1 < ring.size(); ++i)
        a += ring[i].x * ring[i + 1].y - ring[i + 1].x * ring[i].y;
    return 0.5 * a;
}

[[nodiscard]] inline double signed_area_xy(const std::vector<Vec3>& ring) {
    double a = 0.0;
    for (std::size_t i = 0; i + 1 < ring.size(); ++i)
        a += ring[i].x() * ring[i + 1].y() - ring[i + 1].x() * ring[i].y();
    return 0.5 * a;
}

} // namespace adapt::geo
