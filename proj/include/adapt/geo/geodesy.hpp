#pragma once

#include <adapt/error.hpp>

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <string>

namespace adapt::geo {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

inline constexpr double kDegToRad = std::numbers::pi / 180.0;
inline constexpr double kRadToDeg = 180.0 / std::numbers::pi;

namespace wgs84 {
inline constexpr double a = 6378137.0;
inline constexpr double f = 1.0 / 298.257223563;
inline constexpr double b = a * (1.0 - f);
inline constexpr double e2 = f * (2.0 - f);
inline constexpr double ep2 = e2 / (1.0 - e2);
} // namespace wgs84

struct GeodeticPosition {
    double lat_deg = 0.0;
    double lon_deg = 0.0;
    double alt_m = 0.0;

    friend bool operator==(const GeodeticPosition&, const GeodeticPosition&) = default;
};

inline void validate(const GeodeticPosition& p) {
    if (!(p.lat_deg >= -90.0 && p.lat_deg <= 90.0))
        throw DomainError("latitude out of range: " + std::to_string(p.lat_deg));
    if (!(p.lon_deg >= -180.0 && p.lon_deg < 180.0))
        throw DomainError("longitude out of range: " + std::to_string(p.lon_deg));
    if (!std::isfinite(p.alt_m))
        throw DomainError("altitude not finite");
}

/// Wraps a longitude into [-180, 180).
[[nodiscard]] inline double wrap_longitude(double lon_deg) {
    double w = std::fmod(lon_deg + 180.0, 360.0);
    if (w < 0.0)
        w += 360.0;
    return w - 180.0;
}

[[nodiscard]] inline Vec3 geodetic_to_ecef(const GeodeticPosition& p) {
    const double lat = p.lat_deg * kDegToRad;
    const double lon = p.lon_deg * kDegToRad;
    const double sin_lat = std::sin(lat);
    const double cos_lat = std::cos(lat);
    const double n = wgs84::a / std::sqrt(1.0 - wgs84::e2 * sin_lat * sin_lat);
    return {(n + p.alt_m) * cos_lat * std::cos(lon),
            (n + p.alt_m) * cos_lat * std::sin(lon),
            (n * (1.0 - wgs84::e2) + p.alt_m) * sin_lat};
}

/// ECEF to geodetic by fixed-point iteration on latitude (converges to
/// sub-micrometre in a handful of steps anywhere near the surface).
[[nodiscard]] inline GeodeticPosition ecef_to_geodetic(const Vec3& x) {
    const double p = std::hypot(x.x(), x.y());
    const double lon = std::atan2(x.y(), x.x());
    double lat = std::atan2(x.z(), p * (1.0 - wgs84::e2));
    double alt = 0.0;
    for (int i = 0; i < 10; ++i) {
        const double sin_lat = std::sin(lat);
        const double n = wgs84::a / std::sqrt(1.0 - wgs84::e2 * sin_lat * sin_lat);
        alt = p / std::cos(lat) - n;
        const double next = std::atan2(x.z(), p * (1.0 - wgs84::e2 * n / (n + alt)));
        if (std::abs(next - lat) < 1e-14) {
            lat = next;
            break;
        }
        lat = next;
    }
    // Recompute altitude in the numerically safe form for the final latitude.
    const double sin_lat = std::sin(lat);
    const double cos_lat = std::cos(lat);
    const double n = wgs84::a / std::sqrt(1.0 - wgs84::e2 * sin_lat * sin_lat);
    alt = p * cos_lat + x.z() * sin_lat - wgs84::a * wgs84::a / n;
    return {lat * kRadToDeg, wrap_longitude(lon * kRadToDeg), alt};
}

/// Local east-north-up tangent frame anchored at a fixed geodetic origin.
class EnuFrame {
public:
    EnuFrame() : EnuFrame(GeodeticPosition{}) {}

    explicit EnuFrame(const GeodeticPosition& origin) : origin_(origin) {
        validate(origin);
        origin_ecef_ = geodetic_to_ecef(origin);
        const double lat = origin.lat_deg * kDegToRad;
        const double lon = origin.lon_deg * kDegToRad;
        const double sl = std::sin(lat), cl = std::cos(lat);
        const double so = std::sin(lon), co = std::cos(lon);
        ecef_to_enu_ << -so, co, 0.0,
                        -sl * co, -sl * so, cl,
                        cl * co, cl * so, sl;
    }

    [[nodiscard]] const GeodeticPosition& origin() const noexcept { return origin_; }
    [[nodiscard]] const Mat3& ecef_to_enu_rotation() const noexcept { return ecef_to_enu_; }

    [[nodiscard]] Vec3 from_ecef(const Vec3& ecef) const { return ecef_to_enu_ * (ecef - origin_ecef_); }
    [[nodiscard]] Vec3 to_ecef(const Vec3& enu) const {
        return origin_ecef_ + ecef_to_enu_.transpose() * enu;
    }

    friend bool operator==(const EnuFrame& a, const EnuFrame& b) { return a.origin_ == b.origin_; }

private:
    GeodeticPosition origin_;
    Vec3 origin_ecef_;
    Mat3 ecef_to_enu_;
};

/// Metres east, north and up in some EnuFrame.
struct EnuPoint {
    double e = 0.0;
    double n = 0.0;
    double u = 0.0;

    [[nodiscard]] Vec3 vec() const { return {e, n, u}; }
    [[nodiscard]] static EnuPoint from(const Vec3& v) { return {v.x(), v.y(), v.z()}; }
};

[[nodiscard]] inline EnuPoint geodetic_to_enu(const GeodeticPosition& p, const EnuFrame& frame) {
    validate(p);
    return EnuPoint::from(frame.from_ecef(geodetic_to_ecef(p)));
}

[[nodiscard]] inline GeodeticPosition enu_to_geodetic(const EnuPoint& p, const EnuFrame& frame) {
    if (!std::isfinite(p.e) || !std::isfinite(p.n) || !std::isfinite(p.u))
        throw DomainError("ENU point not finite");
    return ecef_to_geodetic(frame.to_ecef(p.vec()));
}

} // namespace adapt::geo
