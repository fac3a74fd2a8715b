#pragma once

#include <adapt/geo/geodesy.hpp>
#include <adapt/geo/rotation.hpp>

#include <algorithm>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace adapt::geo {

namespace status {
inline constexpr std::uint32_t kFixValid = 0x1;
inline constexpr std::uint32_t kAttitudeValid = 0x2;
inline constexpr std::uint32_t kAllValid = kFixValid | kAttitudeValid;
} // namespace status

/// One INS record. `attitude` rotates body-frame vectors into ENU
/// (body axes: x forward, y left, z up).
struct TimestampedPose {
    double t = 0.0; ///< GPS seconds
    GeodeticPosition position;
    UnitQuaternion attitude;
    std::uint32_t status = status::kAllValid;

    [[nodiscard]] bool valid() const noexcept { return (status & status::kAllValid) == status::kAllValid; }
};

/// Samples further than this beyond either end of a trajectory are rejected.
inline constexpr double kExtrapolationWindowS = 0.050;

/// Non-empty pose list with strictly increasing timestamps.
class Trajectory {
public:
    Trajectory() = default;

    explicit Trajectory(std::vector<TimestampedPose> poses) : poses_(std::move(poses)) {
        if (poses_.empty())
            throw InsufficientDataError("trajectory is empty");
        for (std::size_t i = 1; i < poses_.size(); ++i) {
            if (!(poses_[i].t > poses_[i - 1].t))
                throw ContractError("trajectory timestamps not strictly increasing at index " +
                                    std::to_string(i));
        }
    }

    [[nodiscard]] std::span<const TimestampedPose> poses() const noexcept { return poses_; }
    [[nodiscard]] std::size_t size() const noexcept { return poses_.size(); }
    [[nodiscard]] bool empty() const noexcept { return poses_.empty(); }
    [[nodiscard]] const TimestampedPose& operator[](std::size_t i) const { return poses_[i]; }
    [[nodiscard]] double start() const { return poses_.front().t; }
    [[nodiscard]] double end() const { return poses_.back().t; }

private:
    std::vector<TimestampedPose> poses_;
};

namespace detail {

inline void require_valid(const TimestampedPose& p) {
    if (!p.valid())
        throw ValidityError("pose sample at t=" + std::to_string(p.t) + " has invalid status bits");
}

// Linear blend of two geodetic positions in the ENU frame of the first.
inline GeodeticPosition blend_positions(const GeodeticPosition& a, const GeodeticPosition& b, double u) {
    const EnuFrame local(a);
    const Vec3 pb = geodetic_to_enu(b, local).vec();
    return enu_to_geodetic(EnuPoint::from(pb * u), local);
}

} // namespace detail

/// Pose at GPS time `t`: position linear in ENU, attitude by slerp. Within
/// kExtrapolationWindowS of either end the nearest two samples are
/// extrapolated at constant velocity and angular rate.
[[nodiscard]] inline TimestampedPose interpolate_pose(const Trajectory& traj, double t) {
    if (traj.empty())
        throw InsufficientDataError("trajectory is empty");
    const auto poses = traj.poses();
    if (!std::isfinite(t) || t < traj.start() - kExtrapolationWindowS || t > traj.end() + kExtrapolationWindowS)
        throw RangeError("time " + std::to_string(t) + " outside trajectory [" + std::to_string(traj.start()) +
                         ", " + std::to_string(traj.end()) + "] plus extrapolation window");

    const auto it = std::lower_bound(poses.begin(), poses.end(), t,
                                     [](const TimestampedPose& p, double v) { return p.t < v; });
    if (it != poses.end() && it->t == t) {
        detail::require_valid(*it);
        return *it;
    }
    if (poses.size() == 1)
        throw RangeError("single-sample trajectory only answers its own timestamp");

    std::size_t hi = static_cast<std::size_t>(it - poses.begin());
    hi = std::clamp<std::size_t>(hi, 1, poses.size() - 1);
    const TimestampedPose& a = poses[hi - 1];
    const TimestampedPose& b = poses[hi];
    detail::require_valid(a);
    detail::require_valid(b);

    const double u = (t - a.t) / (b.t - a.t);
    TimestampedPose out;
    out.t = t;
    out.status = a.status & b.status;
    out.position = detail::blend_positions(a.position, b.position, u);
    out.attitude = slerp(a.attitude, b.attitude, u);
    return out;
}

/// Rotation taking vectors in the ENU frame at `at` into `frame`. Identity
/// when the two share an origin; about 0.009 degrees per km of separation.
[[nodiscard]] inline UnitQuaternion local_to_frame_rotation(const GeodeticPosition& at, const EnuFrame& frame) {
    const EnuFrame local(at);
    return UnitQuaternion::from_matrix(frame.ecef_to_enu_rotation() * local.ecef_to_enu_rotation().transpose());
}

/// Pose attitude (body -> local ENU at the pose) re-expressed as body -> `frame`.
[[nodiscard]] inline UnitQuaternion attitude_in_frame(const TimestampedPose& pose, const EnuFrame& frame) {
    return local_to_frame_rotation(pose.position, frame) * pose.attitude;
}

/// Inverse of attitude_in_frame: body -> local ENU from body -> `frame`.
[[nodiscard]] inline UnitQuaternion attitude_from_frame(const UnitQuaternion& body_to_frame,
                                                        const GeodeticPosition& at, const EnuFrame& frame) {
    return local_to_frame_rotation(at, frame).conjugate() * body_to_frame;
}

} // namespace adapt::geo
