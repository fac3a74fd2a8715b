#pragma once

#include <adapt/calib/boresight.hpp>
#include <adapt/geo/pose.hpp>
#include <adapt/timebase/clock.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace adapt::calib {

/// Camera orientation at an image time: rotates world (ENU frame) vectors
/// into the camera frame.
struct TruthAttitude {
    double t = 0.0;
    UnitQuaternion world_to_camera;
};

struct OffsetSample {
    double offset_s = 0.0;
    double residual_rad = 0.0;
};

struct OffsetScan {
    double offset_s = 0.0;            ///< INS clock minus camera clock
    double residual_rad = 0.0;        ///< boresight RMS at the optimum
    std::vector<OffsetSample> curve;  ///< coarse grid, ascending offset
};

inline constexpr double kMaxOffsetWindowS = 2.0;
inline constexpr double kCoarseStepS = 0.010;
inline constexpr double kRefineToleranceS = 0.001;
/// A residual curve whose spread is below this floor, or below this fraction
/// of its minimum, carries no timing information.
inline constexpr double kFlatCurveFloorRad = 1e-6;
inline constexpr double kFlatCurveRelative = 0.25;

/// Boresight RMS residual when INS timestamps are corrected by `offset_s`
/// (INS poses looked up at t_image + offset_s).
[[nodiscard]] inline double offset_residual(const geo::Trajectory& traj, const geo::EnuFrame& frame,
                                            std::span<const TruthAttitude> truth, double offset_s) {
    const geo::Trajectory shifted = timebase::apply_time_offset(traj, -offset_s);
    std::vector<UnitQuaternion> cam, ins;
    cam.reserve(truth.size());
    ins.reserve(truth.size());
    for (const auto& t : truth) {
        const auto pose = geo::interpolate_pose(shifted, t.t);
        cam.push_back(t.world_to_camera);
        ins.push_back(geo::attitude_in_frame(pose, frame).conjugate());
    }
    return fit_boresight(cam, ins).rms_rad;
}

/// Coarse 10 ms grid over [-window, window] followed by golden-section
/// refinement to 1 ms around the best grid point.
[[nodiscard]] inline OffsetScan scan_time_offset(const geo::Trajectory& traj, const geo::EnuFrame& frame,
                                                 std::span<const TruthAttitude> truth, double window_s) {
    if (!(window_s > 0.0) || window_s > kMaxOffsetWindowS)
        throw ContractError("offset search window must be in (0, 2] s");
    if (truth.empty())
        throw InsufficientDataError("no truth attitudes for the offset scan");

    OffsetScan scan;
    const int steps = static_cast<int>(std::floor(window_s / kCoarseStepS + 1e-9));
    for (int k = -steps; k <= steps; ++k) {
        const double off = k * kCoarseStepS;
        scan.curve.push_back({off, offset_residual(traj, frame, truth, off)});
    }
    const auto [lo_it, hi_it] = std::minmax_element(
        scan.curve.begin(), scan.curve.end(),
        [](const OffsetSample& a, const OffsetSample& b) { return a.residual_rad < b.residual_rad; });
    const double spread = hi_it->residual_rad - lo_it->residual_rad;
    if (spread < std::max(kFlatCurveFloorRad, kFlatCurveRelative * lo_it->residual_rad))
        throw UnobservableError("time offset unobservable: residual varies by only " + std::to_string(spread) +
                                " rad across the window (no attitude dynamics?)");

    const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = std::max(-window_s, lo_it->offset_s - kCoarseStepS);
    double b = std::min(window_s, lo_it->offset_s + kCoarseStepS);
    double c = b - phi * (b - a);
    double d = a + phi * (b - a);
    double fc = offset_residual(traj, frame, truth, c);
    double fd = offset_residual(traj, frame, truth, d);
    while (b - a > kRefineToleranceS) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = offset_residual(traj, frame, truth, c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = offset_residual(traj, frame, truth, d);
        }
    }
    scan.offset_s = 0.5 * (a + b);
    scan.residual_rad = offset_residual(traj, frame, truth, scan.offset_s);
    if (lo_it->residual_rad < scan.residual_rad) {
        scan.offset_s = lo_it->offset_s;
        scan.residual_rad = lo_it->residual_rad;
    }
    return scan;
}

} // namespace adapt::calib
