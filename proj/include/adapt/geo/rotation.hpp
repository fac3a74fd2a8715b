#pragma once

#include <adapt/geo/geodesy.hpp>

#include <Eigen/Geometry>

#include <cmath>

namespace adapt::geo {

/// Rotation stored as a unit quaternion (w, x, y, z). Every constructor and
/// operation renormalises, so |q| stays within 1e-9 of one. q and -q denote
/// the same rotation; use angle_between() rather than == to compare.
class UnitQuaternion {
public:
    UnitQuaternion() = default;

    UnitQuaternion(double w, double x, double y, double z) : w_(w), x_(x), y_(y), z_(z) {
        const double n = std::sqrt(w * w + x * x + y * y + z * z);
        if (!(n > 0.0) || !std::isfinite(n))
            throw DomainError("quaternion norm must be positive and finite");
        w_ /= n;
        x_ /= n;
        y_ /= n;
        z_ /= n;
    }

    [[nodiscard]] static UnitQuaternion identity() { return {}; }

    /// Rotation of `angle_rad` about `axis` (need not be unit length).
    [[nodiscard]] static UnitQuaternion from_axis_angle(const Vec3& axis, double angle_rad) {
        const double n = axis.norm();
        if (!(n > 0.0))
            return identity();
        const Vec3 a = axis / n;
        const double s = std::sin(angle_rad / 2.0);
        return {std::cos(angle_rad / 2.0), a.x() * s, a.y() * s, a.z() * s};
    }

    /// Exponential map of a rotation vector (axis * angle).
    [[nodiscard]] static UnitQuaternion exp(const Vec3& rotvec) {
        return from_axis_angle(rotvec, rotvec.norm());
    }

    [[nodiscard]] static UnitQuaternion from_matrix(const Mat3& m) {
        const Eigen::Quaterniond q(m);
        return {q.w(), q.x(), q.y(), q.z()};
    }

    /// Z-Y-X (yaw, pitch, roll) composition: R = Rz(yaw) * Ry(pitch) * Rx(roll).
    [[nodiscard]] static UnitQuaternion from_ypr(double yaw, double pitch, double roll) {
        return from_axis_angle(Vec3::UnitZ(), yaw) * from_axis_angle(Vec3::UnitY(), pitch) *
               from_axis_angle(Vec3::UnitX(), roll);
    }

    [[nodiscard]] double w() const noexcept { return w_; }
    [[nodiscard]] double x() const noexcept { return x_; }
    [[nodiscard]] double y() const noexcept { return y_; }
    [[nodiscard]] double z() const noexcept { return z_; }
    [[nodiscard]] double norm() const noexcept { return std::sqrt(w_ * w_ + x_ * x_ + y_ * y_ + z_ * z_); }

    [[nodiscard]] UnitQuaternion conjugate() const { return raw(w_, -x_, -y_, -z_); }
    [[nodiscard]] UnitQuaternion inverse() const { return conjugate(); }
    [[nodiscard]] UnitQuaternion negated() const { return raw(-w_, -x_, -y_, -z_); }

    /// Representative with w >= 0 (x, y, z tie-break when w == 0).
    [[nodiscard]] UnitQuaternion canonical() const {
        const double lead = w_ != 0.0 ? w_ : (x_ != 0.0 ? x_ : (y_ != 0.0 ? y_ : z_));
        return lead < 0.0 ? negated() : *this;
    }

    [[nodiscard]] double dot(const UnitQuaternion& o) const noexcept {
        return w_ * o.w_ + x_ * o.x_ + y_ * o.y_ + z_ * o.z_;
    }

    friend UnitQuaternion operator*(const UnitQuaternion& a, const UnitQuaternion& b) {
        return {a.w_ * b.w_ - a.x_ * b.x_ - a.y_ * b.y_ - a.z_ * b.z_,
                a.w_ * b.x_ + a.x_ * b.w_ + a.y_ * b.z_ - a.z_ * b.y_,
                a.w_ * b.y_ - a.x_ * b.z_ + a.y_ * b.w_ + a.z_ * b.x_,
                a.w_ * b.z_ + a.x_ * b.y_ - a.y_ * b.x_ + a.z_ * b.w_};
    }

    [[nodiscard]] Vec3 rotate(const Vec3& v) const { return matrix() * v; }

    [[nodiscard]] Mat3 matrix() const {
        Mat3 m;
        const double ww = w_ * w_, xx = x_ * x_, yy = y_ * y_, zz = z_ * z_;
        const double xy = x_ * y_, xz = x_ * z_, yz = y_ * z_;
        const double wx = w_ * x_, wy = w_ * y_, wz = w_ * z_;
        m << ww + xx - yy - zz, 2 * (xy - wz), 2 * (xz + wy),
             2 * (xy + wz), ww - xx + yy - zz, 2 * (yz - wx),
             2 * (xz - wy), 2 * (yz + wx), ww - xx - yy + zz;
        return m;
    }

    /// Logarithm map; result has norm in [0, pi] (shortest representative).
    [[nodiscard]] Vec3 log() const {
        const UnitQuaternion c = w_ < 0.0 ? negated() : *this;
        const Vec3 v(c.x_, c.y_, c.z_);
        const double s = v.norm();
        if (s < 1e-300)
            return Vec3::Zero();
        const double angle = 2.0 * std::atan2(s, c.w_);
        return v * (angle / s);
    }

    /// Rotation angle (radians, in [0, pi]) of this relative to identity.
    [[nodiscard]] double angle() const { return log().norm(); }

    /// Geodesic distance between two rotations, sign-agnostic.
    [[nodiscard]] double angle_to(const UnitQuaternion& o) const { return (conjugate() * o).angle(); }

private:
    static UnitQuaternion raw(double w, double x, double y, double z) {
        UnitQuaternion q;
        q.w_ = w;
        q.x_ = x;
        q.y_ = y;
        q.z_ = z;
        return q;
    }

    double w_ = 1.0;
    double x_ = 0.0;
    double y_ = 0.0;
    double z_ = 0.0;
};

/// Spherical linear interpolation along the shorter arc. `u` outside [0, 1]
/// extrapolates at constant angular rate. An exactly antipodal-in-angle pair
/// (dot == 0) takes the q1 representative with non-negative w.
[[nodiscard]] inline UnitQuaternion slerp(const UnitQuaternion& q0, const UnitQuaternion& q1, double u) {
    UnitQuaternion target = q1;
    const double d = q0.dot(q1);
    if (d < 0.0)
        target = q1.negated();
    else if (d == 0.0)
        target = q1.canonical();
    if (u == 0.0)
        return q0;
    if (u == 1.0)
        return target;
    const UnitQuaternion rel = q0.conjugate() * target;
    // rel lies in the w >= 0 hemisphere by construction; log() keeps it there.
    return q0 * UnitQuaternion::exp(rel.log() * u);
}

} // namespace adapt::geo
