#pragma once

#include <adapt/calib/calibrate.hpp>
#include <adapt/flightsim/ins.hpp>
#include <adapt/flightsim/plan.hpp>

#include <string>
#include <vector>

namespace adapt::flightsim {

/// A calibration flight with known answers: the payload flies a figure
/// eight, a structure-from-motion solver reports camera poses in its own
/// arbitrarily scaled and rotated coordinates, and the INS log carries
/// optional noise. Camera timestamps lag the INS clock by `time_shift_s`.
struct CalibrationScenario {
    MissionPlan plan = [] {
        MissionPlan p;
        p.pattern = Pattern::figure_eight;
        p.camera_pitch_deg = 45.0;
        p.altitude_span_m = 5.0;
        p.duration_s = 60.0;
        return p;
    }();
    double sfm_scale = 3.7;
    UnitQuaternion sfm_rotation = UnitQuaternion::from_ypr(0.7, -0.3, 1.1);
    Vec3 sfm_translation{12.0, -40.0, 5.0};
    double time_shift_s = 0.0;
    InsNoise noise;
    geo::GeodeticPosition origin{64.84, -147.71, 130.0};
};

struct CalibrationFixture {
    geo::EnuFrame frame;
    geo::Trajectory ins;
    std::vector<calib::SfmPose> sfm;
    UnitQuaternion boresight;            ///< truth, body -> camera
    calib::SimilarityTransform sfm_to_enu;
    double time_shift_s = 0.0;
};

[[nodiscard]] inline CalibrationFixture make_calibration_fixture(const CalibrationScenario& sc) {
    CalibrationFixture fx{geo::EnuFrame(sc.origin), {}, {}, sc.plan.boresight(), {}, sc.time_shift_s};
    fx.sfm_to_enu.scale = sc.sfm_scale;
    fx.sfm_to_enu.rotation = sc.sfm_rotation;
    fx.sfm_to_enu.translation = sc.sfm_translation;

    const auto truth = generate_trajectory(sc.plan, fx.frame);
    fx.ins = geo::Trajectory(apply_ins_noise(truth, fx.frame, sc.noise));

    const geo::Mat3 r = sc.sfm_rotation.matrix();
    // Keep clear of the ends so every offset in the scan window has INS data.
    const double margin = 2.5;
    int k = 0;
    for (double t : trigger_times(sc.plan)) {
        if (t < margin || t > plan_duration(sc.plan) - margin)
            continue;
        const auto i = static_cast<std::size_t>(std::llround(t * sc.plan.ins_hz));
        const auto& pose = truth[i];
        const Vec3 centre = geo::geodetic_to_enu(pose.position, fx.frame).vec();
        const UnitQuaternion world_to_cam = fx.boresight * geo::attitude_in_frame(pose, fx.frame).conjugate();
        calib::SfmPose s;
        s.image_name = "img_" + std::to_string(k++) + ".jpg";
        s.t_image = pose.t - sc.time_shift_s;
        s.position = r.transpose() * (centre - sc.sfm_translation) / sc.sfm_scale;
        s.rotation = world_to_cam * sc.sfm_rotation;
        fx.sfm.push_back(s);
    }
    return fx;
}

} // namespace adapt::flightsim
