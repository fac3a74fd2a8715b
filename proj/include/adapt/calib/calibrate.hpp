#pragma once

#include <adapt/calib/boresight.hpp>
#include <adapt/calib/similarity.hpp>
#include <adapt/calib/time_offset.hpp>
#include <adapt/geo/pose.hpp>

#include <string>
#include <vector>

namespace adapt::calib {

/// One image of a structure-from-motion reconstruction.
struct SfmPose {
    std::string image_name;
    double t_image = 0.0;          ///< GPS seconds, joined from the capture-time sidecar
    Vec3 position = Vec3::Zero();  ///< camera centre in SfM coordinates
    UnitQuaternion rotation;       ///< SfM world -> camera
};

struct CalibrationResult {
    SimilarityTransform similarity;  ///< SfM coordinates -> mission ENU
    UnitQuaternion boresight;        ///< INS body -> camera
    double time_offset_s = 0.0;      ///< INS clock minus camera clock
    double position_rms_m = 0.0;
    double attitude_rms_deg = 0.0;
    std::vector<OffsetSample> offset_curve;
    std::vector<std::string> warnings;
};

struct CalibrationOptions {
    double window_s = 0.5;
    int max_rounds = 3;
    double position_warn_m = 1.0;
    double attitude_warn_deg = 1.0;
};

namespace detail {

inline std::vector<Vec3> ins_positions(const geo::Trajectory& traj, const geo::EnuFrame& frame,
                                       std::span<const SfmPose> sfm, double offset_s) {
    std::vector<Vec3> out;
    out.reserve(sfm.size());
    for (const auto& s : sfm)
        out.push_back(geo::geodetic_to_enu(geo::interpolate_pose(traj, s.t_image + offset_s).position, frame).vec());
    return out;
}

} // namespace detail

/// Full calibration: similarity from positions, SfM rotations mapped into
/// the ENU frame, time offset from the boresight residual, boresight at the
/// chosen offset. The similarity is re-fitted at each new offset estimate
/// until the offset settles (at most `max_rounds` passes).
[[nodiscard]] inline CalibrationResult calibrate(std::span<const SfmPose> sfm, const geo::Trajectory& traj,
                                                 const geo::EnuFrame& frame, const CalibrationOptions& opt = {}) {
    if (sfm.size() < 3)
        throw InsufficientDataError("calibration needs at least three images");
    std::vector<Vec3> sfm_centres;
    sfm_centres.reserve(sfm.size());
    for (const auto& s : sfm)
        sfm_centres.push_back(s.position);

    CalibrationResult result;
    double offset = 0.0;
    OffsetScan scan;
    std::vector<TruthAttitude> truth(sfm.size());
    for (int round = 0; round < std::max(1, opt.max_rounds); ++round) {
        const auto enu = detail::ins_positions(traj, frame, sfm, offset);
        try {
            result.similarity = fit_similarity(sfm_centres, enu);
        } catch (const DegenerateGeometryError& e) {
            throw UnobservableError(std::string("SfM-to-ENU transform is unobservable: ") + e.what());
        }
        result.position_rms_m = similarity_rms(result.similarity, sfm_centres, enu);
        const UnitQuaternion to_enu_inv = result.similarity.rotation.conjugate();
        for (std::size_t i = 0; i < sfm.size(); ++i)
            truth[i] = {sfm[i].t_image, sfm[i].rotation * to_enu_inv};
        scan = scan_time_offset(traj, frame, truth, opt.window_s);
        const double change = std::abs(scan.offset_s - offset);
        offset = scan.offset_s;
        if (change < 0.5 * kRefineToleranceS)
            break;
    }

    std::vector<UnitQuaternion> cam, ins;
    for (const auto& t : truth) {
        cam.push_back(t.world_to_camera);
        ins.push_back(geo::attitude_in_frame(geo::interpolate_pose(traj, t.t + offset), frame).conjugate());
    }
    const auto fit = fit_boresight(cam, ins);
    result.boresight = fit.boresight;
    result.time_offset_s = offset;
    result.attitude_rms_deg = fit.rms_rad * geo::kRadToDeg;
    result.offset_curve = std::move(scan.curve);
    if (result.position_rms_m > opt.position_warn_m)
        result.warnings.push_back("position RMS " + std::to_string(result.position_rms_m) + " m exceeds " +
                                  std::to_string(opt.position_warn_m) + " m");
    if (result.attitude_rms_deg > opt.attitude_warn_deg)
        result.warnings.push_back("attitude RMS " + std::to_string(result.attitude_rms_deg) + " deg exceeds " +
                                  std::to_string(opt.attitude_warn_deg) + " deg");
    return result;
}

} // namespace adapt::calib
