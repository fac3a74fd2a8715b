#pragma once

#include <adapt/geo/rotation.hpp>

#include <cmath>
#include <optional>

namespace adapt::geo {

struct PixelPoint {
    double x = 0.0;
    double y = 0.0;
};

/// Pinhole camera with 4-parameter radial-tangential distortion.
///
/// Pixel coordinates are continuous with the centre of pixel (i, j) at
/// (i + 0.5, j + 0.5). The camera frame has x right, y down and z along the
/// optical axis. `boresight` maps INS-body vectors into the camera frame and
/// `lever_arm` is the camera position in the body frame.
struct CameraModel {
    int width = 0;
    int height = 0;
    double fx = 0.0;
    double fy = 0.0;
    double cx = 0.0;
    double cy = 0.0;
    double k1 = 0.0;
    double k2 = 0.0;
    double p1 = 0.0;
    double p2 = 0.0;
    UnitQuaternion boresight;
    Vec3 lever_arm = Vec3::Zero();

    void validate() const {
        if (width <= 0 || height <= 0)
            throw ContractError("camera dimensions must be positive");
        if (!(fx > 0.0 && fy > 0.0))
            throw ContractError("focal lengths must be positive");
        if (!(cx > 0.0 && cx < width && cy > 0.0 && cy < height))
            throw ContractError("principal point outside the image");
    }

    [[nodiscard]] bool has_distortion() const noexcept { return k1 != 0.0 || k2 != 0.0 || p1 != 0.0 || p2 != 0.0; }

    /// Same optics with every pixel dimension divided by `factor`.
    [[nodiscard]] CameraModel scaled(double factor) const {
        CameraModel c = *this;
        c.width = static_cast<int>(std::lround(width / factor));
        c.height = static_cast<int>(std::lround(height / factor));
        c.fx /= factor;
        c.fy /= factor;
        c.cx /= factor;
        c.cy /= factor;
        return c;
    }
};

/// Boresight for a camera looking straight down with image "up" pointing
/// along the body's forward axis.
[[nodiscard]] inline UnitQuaternion nadir_boresight() {
    Mat3 m;
    m << 0, -1, 0,
        -1, 0, 0,
         0, 0, -1;
    return UnitQuaternion::from_matrix(m);
}

/// Camera tilted from nadir towards the forward axis by `pitch_from_nadir_rad`
/// (0 = nadir, pi/2 = looking straight ahead).
[[nodiscard]] inline UnitQuaternion pitched_boresight(double pitch_from_nadir_rad) {
    // Tilting the view forward is a rotation about the camera x axis.
    return UnitQuaternion::from_axis_angle(Vec3::UnitX(), -pitch_from_nadir_rad) * nadir_boresight();
}

namespace detail {

struct Distorted {
    double x;
    double y;
};

inline Distorted distort(const CameraModel& c, double x, double y) {
    const double r2 = x * x + y * y;
    const double radial = 1.0 + c.k1 * r2 + c.k2 * r2 * r2;
    return {x * radial + 2.0 * c.p1 * x * y + c.p2 * (r2 + 2.0 * x * x),
            y * radial + c.p1 * (r2 + 2.0 * y * y) + 2.0 * c.p2 * x * y};
}

} // namespace detail

inline constexpr int kUndistortMaxIterations = 20;
inline constexpr double kUndistortTolerance = 1e-8;

namespace detail {

// A physical solution lies where the radial mapping r -> r * radial(r)
// is positive and increasing.
inline bool in_valid_lens_region(const CameraModel& c, double x, double y) {
    const double r2 = x * x + y * y;
    return 1.0 + c.k1 * r2 + c.k2 * r2 * r2 > 0.0 && 1.0 + 3.0 * c.k1 * r2 + 5.0 * c.k2 * r2 * r2 > 0.0;
}

} // namespace detail

/// Normalised image coordinates of a pixel with the lens distortion removed.
/// Fixed-point iteration; when it stalls (strong distortion near the image
/// corners) Newton's method restarts from the distorted coordinates. A
/// solution outside the orientation-preserving part of the lens model is
/// rejected along with non-convergence.
[[nodiscard]] inline Vec3 undistort_normalized(const CameraModel& c, const PixelPoint& px) {
    const double xd = (px.x - c.cx) / c.fx;
    const double yd = (px.y - c.cy) / c.fy;
    if (!c.has_distortion())
        return {xd, yd, 1.0};

    const auto accept = [&](double x, double y) {
        if (!detail::in_valid_lens_region(c, x, y))
            throw NumericError("undistortion converged outside the valid lens region", 2 * kUndistortMaxIterations);
        return Vec3(x, y, 1.0);
    };

    double x = xd, y = yd;
    for (int i = 0; i < kUndistortMaxIterations; ++i) {
        const double r2 = x * x + y * y;
        const double radial = 1.0 + c.k1 * r2 + c.k2 * r2 * r2;
        const double dx = 2.0 * c.p1 * x * y + c.p2 * (r2 + 2.0 * x * x);
        const double dy = c.p1 * (r2 + 2.0 * y * y) + 2.0 * c.p2 * x * y;
        const double nx = (xd - dx) / radial;
        const double ny = (yd - dy) / radial;
        const double step = std::hypot(nx - x, ny - y);
        x = nx;
        y = ny;
        if (!std::isfinite(step))
            break;
        if (step < kUndistortTolerance)
            return accept(x, y);
    }

    x = xd;
    y = yd;
    for (int i = 0; i < kUndistortMaxIterations; ++i) {
        const auto d = detail::distort(c, x, y);
        const double ex = d.x - xd;
        const double ey = d.y - yd;
        if (std::hypot(ex, ey) < kUndistortTolerance * 1e-2)
            return accept(x, y);
        const double h = 1e-7;
        const auto dxp = detail::distort(c, x + h, y), dxm = detail::distort(c, x - h, y);
        const auto dyp = detail::distort(c, x, y + h), dym = detail::distort(c, x, y - h);
        const double j11 = (dxp.x - dxm.x) / (2 * h), j21 = (dxp.y - dxm.y) / (2 * h);
        const double j12 = (dyp.x - dym.x) / (2 * h), j22 = (dyp.y - dym.y) / (2 * h);
        const double det = j11 * j22 - j12 * j21;
        if (!(std::abs(det) > 1e-12))
            break;
        x -= (j22 * ex - j12 * ey) / det;
        y -= (-j21 * ex + j11 * ey) / det;
    }
    const auto d = detail::distort(c, x, y);
    if (std::hypot(d.x - xd, d.y - yd) < kUndistortTolerance)
        return accept(x, y);
    throw NumericError("undistortion did not converge", 2 * kUndistortMaxIterations);
}

/// Unit viewing direction, in the camera frame, through pixel `px`.
[[nodiscard]] inline Vec3 pixel_to_ray(const CameraModel& c, const PixelPoint& px) {
    return undistort_normalized(c, px).normalized();
}

/// Projects a camera-frame point; empty when it is not in front of the camera.
[[nodiscard]] inline std::optional<PixelPoint> project(const CameraModel& c, const Vec3& p_cam) {
    if (!(p_cam.z() > 0.0))
        return std::nullopt;
    const double x = p_cam.x() / p_cam.z();
    const double y = p_cam.y() / p_cam.z();
    const auto d = detail::distort(c, x, y);
    return PixelPoint{c.fx * d.x + c.cx, c.fy * d.y + c.cy};
}

} // namespace adapt::geo
