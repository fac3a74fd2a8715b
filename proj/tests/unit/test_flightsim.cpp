#include <adapt/flightsim/calibration.hpp>
#include <adapt/flightsim/mission.hpp>

#include <gtest/gtest.h>

#include <random>

using namespace adapt;
using namespace adapt::flightsim;

namespace {

SceneConfig small_scene() {
    SceneConfig c;
    c.extent_e_m = 220;
    c.extent_n_m = 160;
    c.resolution_m = 0.2;
    return c;
}

MissionPlan short_lawnmower() {
    MissionPlan p;
    p.area_e_m = 60;
    p.area_n_m = 40;
    return p;
}

/// Full-resolution optics behind a small sensor window: 1 cm pixels at 30 m.
geo::CameraModel window_camera(int side = 256) {
    geo::CameraModel c;
    c.width = c.height = side;
    c.fx = c.fy = SensorSpec{}.focal_px();
    c.cx = c.cy = side / 2.0;
    c.boresight = geo::nadir_boresight();
    return c;
}

geo::TimestampedPose level_pose(const geo::EnuFrame& frame, double e, double n, double alt, double yaw = 0.0) {
    geo::TimestampedPose p;
    p.t = 1.4e9;
    p.position = geo::enu_to_geodetic({e, n, alt}, frame);
    p.attitude = geo::attitude_from_frame(geo::UnitQuaternion::from_ypr(yaw, 0, 0), p.position, frame);
    return p;
}

} // namespace

TEST(Plan, GroundSampleDistance) {
    const SensorSpec s;
    EXPECT_NEAR(ground_sample_distance(30, s.focal_mm, s.pixel_pitch_um) * 100, 1.00, 0.005);
    EXPECT_NEAR(ground_sample_distance(60, s.focal_mm, s.pixel_pitch_um) * 100, 2.00, 0.005);
    EXPECT_THROW((void)ground_sample_distance(0, 8, 2.667), ContractError);
}

TEST(Plan, JsonRoundTripAndValidation) {
    MissionPlan p;
    p.pattern = Pattern::figure_eight;
    p.exposure = {{0, 500}, {20, 1500}};
    const auto q = MissionPlan::from_json(p.to_json());
    EXPECT_EQ(q.to_json(), p.to_json());
    EXPECT_DOUBLE_EQ(q.exposure_at(25), 1500);
    EXPECT_DOUBLE_EQ(q.exposure_at(5), 500);
    auto j = p.to_json();
    j["overlap"] = 0.95;
    EXPECT_THROW((void)MissionPlan::from_json(j), PlanError);
    j = p.to_json();
    j["pattern"] = "spiral";
    EXPECT_THROW((void)MissionPlan::from_json(j), ParseError);
}

TEST(Trajectory, HoverIsConstant) {
    MissionPlan p;
    p.pattern = Pattern::hover;
    p.duration_s = 10;
    const geo::EnuFrame frame({64.84, -147.71, 130});
    const auto traj = generate_trajectory(p, frame);
    for (const auto& s : traj) {
        EXPECT_EQ(s.position.lat_deg, traj.front().position.lat_deg);
        EXPECT_EQ(s.position.lon_deg, traj.front().position.lon_deg);
        EXPECT_EQ(s.position.alt_m, traj.front().position.alt_m);
        EXPECT_LT(s.attitude.angle_to(traj.front().attitude), 1e-12);
    }
}

TEST(Trajectory, SampleCountFollowsInsRate) {
    MissionPlan p;
    p.pattern = Pattern::figure_eight;
    p.duration_s = 60;
    const geo::EnuFrame frame({64.84, -147.71, 130});
    const auto traj = generate_trajectory(p, frame);
    ASSERT_EQ(traj.size(), 6001u);
    EXPECT_NEAR(traj.back().t - traj.front().t, 60.0, 1e-6);
}

TEST(Trajectory, LawnmowerGeometry) {
    const MissionPlan p;
    const double swath = swath_width(p);
    EXPECT_NEAR(swath, 0.0100013 * 5320, 0.01);
    const detail::LawnmowerPath path(p, swath);
    EXPECT_NEAR(path.spacing(), 0.8 * swath, 1e-9);
    // Outer passes put the swath edges at or beyond the area edges.
    EXPECT_GE((path.lines() - 1) * path.spacing() + swath, p.area_e_m);
    EXPECT_LT((path.lines() - 2) * path.spacing() + swath, p.area_e_m);
    // Turns are flown within the turn-rate limit and the speed is constant.
    const double limit = p.max_turn_rate_dps * geo::kDegToRad;
    for (double t = 0; t < path.duration(); t += 0.05) {
        const auto s = path.at(t);
        EXPECT_LE(std::abs(s.yaw_rate), limit * (1 + 1e-9));
        EXPECT_NEAR(s.velocity.norm(), p.speed_mps, 1e-9);
    }
    // The path is continuous.
    for (double t = 0.01; t < path.duration(); t += 0.01)
        EXPECT_LT((path.at(t).position - path.at(t - 0.01).position).norm(), p.speed_mps * 0.01 + 1e-6);
}

TEST(Trajectory, LawnmowerSpacingTighterThanTurnIsRejected) {
    MissionPlan p;
    p.overlap = 0.6; // spacing 21 m against a 38 m minimum U-turn
    EXPECT_THROW((void)plan_duration(p), PlanError);
}

TEST(Trajectory, FigureEightRespectsTurnLimit) {
    MissionPlan p;
    p.pattern = Pattern::figure_eight;
    p.altitude_span_m = 5;
    const detail::FigureEightPath path(p);
    double peak = 0, vmax = 0;
    for (double t = 0; t < 60; t += 0.01) {
        const auto s = path.at(t);
        peak = std::max(peak, std::abs(s.yaw_rate));
        vmax = std::max(vmax, std::hypot(s.velocity.x(), s.velocity.y()));
    }
    EXPECT_LE(peak, p.max_turn_rate_dps * geo::kDegToRad * 1.001);
    EXPECT_GT(peak, p.max_turn_rate_dps * geo::kDegToRad * 0.99);
    EXPECT_NEAR(vmax, p.speed_mps, 1e-3);
}

TEST(Trajectory, CoordinatedTurnBanksIntoTheTurn) {
    PathState s;
    s.velocity = {10, 0, 0};
    s.yaw_rate = 0.5; // turning left
    const auto q = flight_attitude(s);
    // Left wing (body +y) dips below the horizon.
    EXPECT_LT(q.rotate(geo::Vec3::UnitY()).z(), 0.0);
    EXPECT_NEAR(std::asin(-q.rotate(geo::Vec3::UnitY()).z()), std::atan(10 * 0.5 / kGravity), 1e-12);
}

TEST(Trajectory, TriggersAreLockedToInsSamplesAndSkipTurns) {
    const MissionPlan p;
    const auto trig = trigger_times(p);
    ASSERT_FALSE(trig.empty());
    for (double t : trig) {
        EXPECT_NEAR(t * p.ins_hz, std::round(t * p.ins_hz), 1e-9);
        EXPECT_TRUE(path_state(p, t).imaging);
    }
    const detail::LawnmowerPath path(p, swath_width(p));
    const double per_line = p.area_n_m / p.speed_mps * p.fps;
    EXPECT_NEAR(static_cast<double>(trig.size()), path.lines() * per_line, path.lines() * 1.0 + 1);
}

TEST(Render, BlurLengthArithmetic) {
    // 2 ms at 10 m/s over 1 cm pixels is a 2 px kernel.
    EXPECT_NEAR(blur_length_px(10, 2000, 30, SensorSpec{}.focal_px()), 2.0, 0.001);
    EXPECT_NEAR(blur_length_px(10, 500, 30, SensorSpec{}.focal_px()), 0.5, 0.001);
}

TEST(Render, SubPixelBlurIsIdentity) {
    analytics::Image img(16, 16, 3);
    std::mt19937 rng(3);
    for (auto& v : img.pixels)
        v = static_cast<std::uint8_t>(rng());
    EXPECT_EQ(motion_blur_y(img, 0.0), img);
    EXPECT_EQ(motion_blur_y(img, 0.99), img);
    const auto b = motion_blur_y(img, 2.0);
    EXPECT_NE(b, img);
    // Columns blur independently: a single bright row spreads only along y.
    analytics::Image line(5, 9, 1);
    for (int x = 0; x < 5; ++x)
        line.at(x, 4) = 200;
    const auto s = motion_blur_y(line, 2.0);
    EXPECT_EQ(s.at(2, 4), 100);
    EXPECT_EQ(s.at(2, 3), 50);
    EXPECT_EQ(s.at(2, 5), 50);
    EXPECT_EQ(s.at(2, 2), 0);
}

TEST(Render, SharpnessFallsWithExposure) {
    SceneConfig sc;
    sc.extent_e_m = sc.extent_n_m = 12;
    sc.resolution_m = 0.01;
    sc.finest_m = 0.05;
    sc.feature_m = 4;
    const SimScene scene(sc);
    const RayTable rays(window_camera());
    const auto pose = level_pose(scene.frame(), 0, 0, 30, std::numbers::pi / 2);
    double prev = std::numeric_limits<double>::infinity();
    std::vector<double> scores;
    for (double us : {250.0, 500.0, 1000.0, 2000.0, 4000.0}) {
        const auto f = render_frame(scene, rays, pose, 10.0, us);
        const double s = analytics::sharpness(f.image, 64, static_cast<std::uint32_t>(us)).global_score;
        scores.push_back(s);
        EXPECT_LE(s, prev);
        prev = s;
    }
    EXPECT_EQ(scores[0], scores[1]); // both below one pixel
    EXPECT_LT(scores[3], 0.5 * scores[1]);
}

TEST(Render, TruthMaskMatchesScene) {
    const SimScene scene(small_scene());
    const auto cam = SensorSpec{}.camera(8.0);
    const RayTable rays(cam);
    const auto pose = level_pose(scene.frame(), 5, -3, 30, 0.3);
    const auto f = render_frame(scene, rays, pose, 0, 0);
    const geo::ViewGeometry view(cam, pose, scene.frame());
    for (int j = 0; j < cam.height; j += 37)
        for (int i = 0; i < cam.width; i += 41) {
            const auto hit = view.intersect(rays.ray(i, j), 0.0);
            ASSERT_TRUE(hit);
            EXPECT_EQ(f.truth.at(i, j), scene.class_at(hit->x(), hit->y()));
        }
}

TEST(Render, ReferenceSegmenterAgreesWithTruth) {
    const SimScene scene(small_scene());
    const auto cam = SensorSpec{}.camera(8.0);
    const RayTable rays(cam);
    const auto f = render_frame(scene, rays, level_pose(scene.frame(), -10, 4, 30, 1.0), 10, 500);
    const analytics::ReferenceSegmenter seg(1);
    const auto mask = analytics::segment(seg, f.image);
    EXPECT_GE(analytics::mask_iou(mask, f.truth, analytics::kFrozenWater), 0.95);
    EXPECT_GE(analytics::mask_iou(mask, f.truth, analytics::kBackground), 0.95);
}

TEST(Render, FootprintOutsideSceneThrows) {
    const SimScene scene(small_scene());
    const RayTable rays(SensorSpec{}.camera(8.0));
    EXPECT_THROW((void)render_frame(scene, rays, level_pose(scene.frame(), 100, 0, 30), 0, 0), RangeError);
    auto forward = SensorSpec{}.camera(8.0, geo::pitched_boresight(80 * geo::kDegToRad));
    const RayTable fwd(forward);
    EXPECT_THROW((void)render_frame(scene, fwd, level_pose(scene.frame(), 0, 0, 30), 0, 0), RangeError);
}

TEST(Render, TruthGeoregistrationReproducesScene) {
    const SimScene scene(small_scene());
    const auto cam = SensorSpec{}.camera(8.0);
    const RayTable rays(cam);
    std::vector<geo::GeoPolygonSet> sets;
    for (int k = 0; k < 3; ++k) {
        const auto pose = level_pose(scene.frame(), -20.0 + 20 * k, 10.0 - 7 * k, 30 + 5 * k, 0.4 * k);
        const auto f = render_frame(scene, rays, pose, 0, 0);
        const auto exact = analytics::vectorize_at(f.truth, 0.0);
        sets.push_back(geo::georegister_mask(cam, pose, scene.frame(), 0, exact.polygons, k));
    }
    const auto score = score_against_scene(scene, sets);
    EXPECT_GE(score.iou, 0.99);
    EXPECT_GT(score.footprint_m2, 1500);
}

TEST(Render, AdjacentPassOverlapMatchesPlan) {
    const SimScene scene(SceneConfig{});
    const MissionPlan p;
    const auto cam = SensorSpec{}.camera(1.0);
    const detail::LawnmowerPath path(p, swath_width(p));
    // Mid-line frames of the first two passes.
    const double t0 = 0.5 * path.line_length() / p.speed_mps;
    const double t1 = t0 + (path.line_length() + (path.total_length() - path.lines() * path.line_length()) /
                                                      (path.lines() - 1)) /
                               p.speed_mps;
    double e_max0 = -1e9, e_min1 = 1e9, width = 0;
    for (int pass = 0; pass < 2; ++pass) {
        const auto s = path_state(p, pass ? t1 : t0);
        geo::TimestampedPose pose;
        pose.position = geo::enu_to_geodetic(geo::EnuPoint::from(s.position), scene.frame());
        pose.attitude = geo::attitude_from_frame(flight_attitude(s), pose.position, scene.frame());
        const auto set = geo::georegister_mask(cam, pose, scene.frame(), 0, {});
        double lo = 1e9, hi = -1e9;
        for (const auto& v : set.footprint) {
            const double e = geo::geodetic_to_enu(v, scene.frame()).e;
            lo = std::min(lo, e), hi = std::max(hi, e);
        }
        width = hi - lo;
        if (pass == 0)
            e_max0 = hi;
        else
            e_min1 = lo;
    }
    EXPECT_NEAR((e_max0 - e_min1) / width, p.overlap, 0.02);
}

TEST(Ins, NoiseHasRequestedSpread) {
    MissionPlan p;
    p.pattern = Pattern::hover;
    p.duration_s = 30;
    const geo::EnuFrame frame({64.84, -147.71, 130});
    const auto truth = generate_trajectory(p, frame);
    InsNoise n;
    n.enabled = true;
    n.clock_offset_s = 0.004;
    const auto noisy = apply_ins_noise(truth, frame, n);
    double pos2 = 0, att2 = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        EXPECT_NEAR(noisy[i].t - truth[i].t, 0.004, 1e-6);
        pos2 += (geo::geodetic_to_enu(noisy[i].position, frame).vec() - geo::geodetic_to_enu(truth[i].position, frame).vec())
                    .squaredNorm();
        const double a = noisy[i].attitude.angle_to(truth[i].attitude);
        att2 += a * a;
    }
    const double m = static_cast<double>(truth.size());
    EXPECT_NEAR(std::sqrt(pos2 / m / 3), 0.02, 0.002);
    EXPECT_NEAR(std::sqrt(att2 / m / 3) * geo::kRadToDeg, 0.02, 0.002);
    n.enabled = false;
    n.clock_offset_s = 0;
    const auto clean = apply_ins_noise(truth, frame, n);
    EXPECT_EQ(clean.front().position.lat_deg, truth.front().position.lat_deg);
}

TEST(Calibration, NoiselessFigureEightIsExact) {
    const auto fx = make_calibration_fixture({});
    const auto r = calib::calibrate(fx.sfm, fx.ins, fx.frame);
    EXPECT_LT(r.boresight.angle_to(fx.boresight) * geo::kRadToDeg, 0.01);
    EXPECT_NEAR(r.similarity.scale, 3.7, 3.7e-6);
    EXPECT_LT(std::abs(r.time_offset_s), 0.005);
}

TEST(Calibration, InsNoiseStaysWithinTolerance) {
    CalibrationScenario sc;
    sc.noise.enabled = true;
    const auto fx = make_calibration_fixture(sc);
    const auto r = calib::calibrate(fx.sfm, fx.ins, fx.frame);
    EXPECT_LT(r.boresight.angle_to(fx.boresight) * geo::kRadToDeg, 0.2);
    EXPECT_LT(std::abs(r.time_offset_s), 0.015);
}

TEST(Calibration, RecoversInjectedClockShift) {
    CalibrationScenario sc;
    sc.time_shift_s = 0.25;
    const auto fx = make_calibration_fixture(sc);
    const auto r = calib::calibrate(fx.sfm, fx.ins, fx.frame);
    EXPECT_NEAR(r.time_offset_s, 0.25, 0.010);
}

TEST(Mission, FrameProcessingIsDeterministicAcrossThreads) {
    const SimScene scene(small_scene());
    const auto plan = short_lawnmower();
    const auto truth = generate_trajectory(plan, scene.frame());
    const geo::Trajectory ins(truth);
    MissionOptions a, b;
    a.threads = 1;
    b.threads = 3;
    const auto fa = process_frames(plan, scene, truth, ins, a);
    const auto fb = process_frames(plan, scene, truth, ins, b);
    ASSERT_EQ(fa.size(), fb.size());
    ASSERT_GT(fa.size(), 10u);
    for (std::size_t k = 0; k < fa.size(); ++k) {
        EXPECT_EQ(fa[k].analytics, fb[k].analytics);
        EXPECT_EQ(fa[k].thumbnail, fb[k].thumbnail);
        EXPECT_LE(fa[k].geo_bytes, kAnalyticsBudgetBytes);
    }
}

TEST(Mission, EndToEndCoverageAndOutputs) {
    const SimScene scene(small_scene());
    MissionOptions opt;
    opt.out_dir = fs::temp_directory_path() / "adapt_flightsim_e2e";
    fs::remove_all(opt.out_dir);
    const auto r = run_mission(short_lawnmower(), scene, {}, opt);
    EXPECT_EQ(r.session.analytics_outstanding, 0u);
    EXPECT_EQ(r.report["analytics_frames"].get<std::size_t>(), r.frames.size());
    EXPECT_GE(r.summary["coverage_iou"].get<double>(), 0.95);
    for (const char* name : {"ins.csv", "truth.jsonl", "summary.json"})
        EXPECT_TRUE(fs::exists(opt.out_dir / name)) << name;
    EXPECT_TRUE(fs::exists(r.mission_dir / station::kAnalyticsLog));
    // The INS log reads back as a trajectory of the right length.
    const auto ins = geo::load_ins_csv((opt.out_dir / "ins.csv").string());
    EXPECT_EQ(ins.size(), generate_trajectory(short_lawnmower(), scene.frame()).size());
}

TEST(Mission, BlackoutLeavesAnalyticsLogUnchanged) {
    const SimScene scene(small_scene());
    MissionOptions clean, dark;
    clean.out_dir = fs::temp_directory_path() / "adapt_flightsim_clean";
    dark.out_dir = fs::temp_directory_path() / "adapt_flightsim_dark";
    dl::LinkProfile link;
    link.blackouts = {{3.0, 9.0}};
    const auto a = run_mission(short_lawnmower(), scene, {}, clean);
    const auto b = run_mission(short_lawnmower(), scene, link, dark);
    const auto lost = std::count_if(b.session.downlink.begin(), b.session.downlink.end(), [](const auto& r) {
        return r.delivery.dropped == dl::DropReason::blackout;
    });
    EXPECT_GT(lost, 0);
    EXPECT_EQ(b.session.analytics_outstanding, 0u);
    EXPECT_EQ(a.summary["analytics_log_crc32"], b.summary["analytics_log_crc32"]);
}
