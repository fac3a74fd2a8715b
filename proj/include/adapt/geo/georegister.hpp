#pragma once

#include <adapt/geo/camera.hpp>
#include <adapt/geo/polygon.hpp>
#include <adapt/geo/pose.hpp>

#include <algorithm>
#include <cmath>
#include <optional>

namespace adapt::geo {

/// Rays shallower than this relative to the ground plane are refused.
inline constexpr double kMinGrazingAngleRad = 0.5 * kDegToRad;

/// Camera placement in an ENU frame for one exposure.
class ViewGeometry {
public:
    ViewGeometry(const CameraModel& cam, const TimestampedPose& pose, const EnuFrame& frame)
        : ViewGeometry(cam, geodetic_to_enu(pose.position, frame).vec(), attitude_in_frame(pose, frame)) {}

    ViewGeometry(const CameraModel& cam, const Vec3& ins_position_enu, const UnitQuaternion& attitude)
        : cam_(&cam) {
        const Mat3 body_to_enu = attitude.matrix();
        cam_to_enu_ = body_to_enu * cam.boresight.matrix().transpose();
        center_ = ins_position_enu + body_to_enu * cam.lever_arm;
    }

    [[nodiscard]] const CameraModel& camera() const noexcept { return *cam_; }
    [[nodiscard]] const Mat3& cam_to_enu() const noexcept { return cam_to_enu_; }
    [[nodiscard]] const Vec3& center() const noexcept { return center_; }

    [[nodiscard]] Vec3 ray_enu(const Vec3& ray_cam) const { return cam_to_enu_ * ray_cam; }

    /// Depression angle of a camera-frame ray below the horizontal (radians).
    [[nodiscard]] double depression(const Vec3& ray_cam) const {
        const Vec3 d = ray_enu(ray_cam).normalized();
        return std::asin(std::clamp(-d.z(), -1.0, 1.0));
    }

    /// Intersection with the plane u = ground_u, or empty for a ray that is
    /// upward, grazing, or starts below the plane.
    [[nodiscard]] std::optional<Vec3> intersect(const Vec3& ray_cam, double ground_u) const {
        const Vec3 d = ray_enu(ray_cam);
        const double h = center_.z() - ground_u;
        if (!(h > 0.0))
            return std::nullopt;
        const double dn = d.norm();
        if (!(-d.z() / dn >= std::sin(kMinGrazingAngleRad)))
            return std::nullopt;
        const double s = h / -d.z();
        return Vec3(center_ + d * s);
    }

    [[nodiscard]] std::optional<PixelPoint> reproject(const Vec3& point_enu) const {
        return project(*cam_, cam_to_enu_.transpose() * (point_enu - center_));
    }

private:
    const CameraModel* cam_;
    Mat3 cam_to_enu_;
    Vec3 center_;
};

/// Ground point (ENU) under pixel `px`; throws HorizonError when the ray
/// misses the plane or meets it at less than 0.5 degrees.
[[nodiscard]] inline Vec3 georegister_pixel_enu(const ViewGeometry& view, double ground_u, const PixelPoint& px) {
    if (!(view.center().z() > ground_u))
        throw HorizonError("camera is not above the ground plane");
    const auto hit = view.intersect(pixel_to_ray(view.camera(), px), ground_u);
    if (!hit)
        throw HorizonError("ray through pixel (" + std::to_string(px.x) + ", " + std::to_string(px.y) +
                           ") does not meet the ground plane below the grazing limit");
    return *hit;
}

[[nodiscard]] inline GeodeticPosition georegister_pixel(const CameraModel& cam, const TimestampedPose& pose,
                                                        const EnuFrame& frame, double ground_u,
                                                        const PixelPoint& px) {
    const ViewGeometry view(cam, pose, frame);
    return enu_to_geodetic(EnuPoint::from(georegister_pixel_enu(view, ground_u, px)), frame);
}

namespace detail {

inline bool ground_visible(const ViewGeometry& view, const PixelPoint& px) {
    try {
        return view.depression(pixel_to_ray(view.camera(), px)) >= kMinGrazingAngleRad;
    } catch (const NumericError&) {
        return false;
    }
}

inline PixelPoint lerp(const PixelPoint& a, const PixelPoint& b, double s) {
    return {a.x + (b.x - a.x) * s, a.y + (b.y - a.y) * s};
}

// Point on segment a (visible) -> b (not visible) at the grazing limit.
inline PixelPoint horizon_crossing(const ViewGeometry& view, const PixelPoint& a, const PixelPoint& b) {
    double lo = 0.0, hi = 1.0;
    for (int i = 0; i < 40; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (ground_visible(view, lerp(a, b, mid)))
            lo = mid;
        else
            hi = mid;
    }
    return lerp(a, b, lo);
}

// Clips a closed pixel ring to the ground-visible half of the image.
// Returns an open ring (no closing vertex).
inline std::vector<PixelPoint> clip_to_horizon(const ViewGeometry& view, const PixelRing& ring, bool& clipped) {
    std::vector<PixelPoint> out;
    const std::size_t n = ring.size() - 1;
    std::vector<char> vis(n);
    for (std::size_t i = 0; i < n; ++i)
        vis[i] = ground_visible(view, ring[i]);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t j = (i + 1) % n;
        const PixelPoint& a = ring[i];
        const PixelPoint& b = ring[j];
        if (vis[i] && vis[j]) {
            out.push_back(b);
        } else if (vis[i] && !vis[j]) {
            out.push_back(horizon_crossing(view, a, b));
            clipped = true;
        } else if (!vis[i] && vis[j]) {
            out.push_back(horizon_crossing(view, b, a));
            out.push_back(b);
            clipped = true;
        } else {
            clipped = true;
        }
    }
    return out;
}

inline GeoRing to_geodetic_ring(std::vector<Vec3> ring, const EnuFrame& frame, bool counter_clockwise) {
    ring.push_back(ring.front());
    const double area = signed_area_xy(ring);
    if ((area > 0.0) != counter_clockwise)
        std::reverse(ring.begin(), ring.end());
    GeoRing out;
    out.reserve(ring.size());
    for (const auto& v : ring)
        out.push_back(enu_to_geodetic(EnuPoint::from(v), frame));
    return out;
}

inline std::optional<GeoRing> register_ring(const ViewGeometry& view, const EnuFrame& frame, double ground_u,
                                            const PixelRing& ring, bool outer, bool& clipped) {
    if (ring.size() < 4)
        return std::nullopt;
    const auto open = clip_to_horizon(view, ring, clipped);
    if (open.size() < 3)
        return std::nullopt;
    std::vector<Vec3> ground;
    ground.reserve(open.size());
    for (const auto& px : open) {
        const auto hit = view.intersect(pixel_to_ray(view.camera(), px), ground_u);
        if (hit)
            ground.push_back(*hit);
    }
    if (ground.size() < 3)
        return std::nullopt;
    ground.push_back(ground.front());
    if (std::abs(signed_area_xy(ground)) <= 0.0)
        return std::nullopt;
    ground.pop_back();
    return to_geodetic_ring(std::move(ground), frame, outer);
}

} // namespace detail

/// Maps pixel-space polygons onto the ground plane vertex by vertex.
/// Exterior rings come out counter-clockwise and holes clockwise (east-north
/// plane). Ring parts beyond the grazing limit are clipped in pixel space;
/// a ring entirely beyond it is dropped.
[[nodiscard]] inline GeoPolygonSet georegister_mask(const CameraModel& cam, const TimestampedPose& pose,
                                                    const EnuFrame& frame, double ground_u,
                                                    const std::vector<PixelPolygon>& polygons,
                                                    std::uint64_t image_id = 0) {
    const ViewGeometry view(cam, pose, frame);
    if (!(view.center().z() > ground_u))
        throw HorizonError("camera is not above the ground plane");
    GeoPolygonSet out;
    out.image_id = image_id;
    bool clipped = false;
    for (const auto& poly : polygons) {
        auto outer = detail::register_ring(view, frame, ground_u, poly.outer, true, clipped);
        if (!outer)
            continue;
        GeoPolygon g;
        g.class_id = poly.class_id;
        g.outer = std::move(*outer);
        for (const auto& hole : poly.holes) {
            if (auto h = detail::register_ring(view, frame, ground_u, hole, false, clipped))
                g.holes.push_back(std::move(*h));
        }
        out.class_polygons.push_back(std::move(g));
    }
    out.horizon_clipped = clipped;
    out.above_horizon = !polygons.empty() && out.class_polygons.empty();

    const double w = cam.width, h = cam.height;
    PixelRing frame_ring{{0, 0}, {w, 0}, {w, h}, {0, h}, {0, 0}};
    // Densify image edges so the footprint follows distortion.
    PixelRing dense;
    for (std::size_t i = 0; i + 1 < frame_ring.size(); ++i) {
        for (int k = 0; k < 8; ++k)
            dense.push_back(detail::lerp(frame_ring[i], frame_ring[i + 1], k / 8.0));
    }
    dense.push_back(dense.front());
    bool fp_clipped = false;
    if (auto fp = detail::register_ring(view, frame, ground_u, dense, true, fp_clipped))
        out.footprint = std::move(*fp);
    return out;
}

} // namespace adapt::geo
