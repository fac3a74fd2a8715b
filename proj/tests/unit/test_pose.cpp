#include <adapt/geo/pose.hpp>

#include <gtest/gtest.h>

using namespace adapt::geo;

namespace {

const EnuFrame kFrame({64.84, -147.71, 120.0});

TimestampedPose make_pose(double t, const Vec3& enu, double yaw) {
    TimestampedPose p;
    p.t = t;
    p.position = enu_to_geodetic(EnuPoint::from(enu), kFrame);
    p.attitude = attitude_from_frame(UnitQuaternion::from_axis_angle(Vec3::UnitZ(), yaw), p.position, kFrame);
    return p;
}

// Circle of radius r at angular rate w; heading tangent to the circle.
struct Circle {
    double r = 80.0;
    double w = 0.2;
    Vec3 at(double t) const { return {r * std::cos(w * t), r * std::sin(w * t), 30.0}; }
    double yaw(double t) const { return w * t + std::numbers::pi / 2; }
};

Trajectory sample_circle(const Circle& c, double hz, double duration) {
    std::vector<TimestampedPose> poses;
    const int n = static_cast<int>(duration * hz);
    for (int i = 0; i <= n; ++i) {
        const double t = 1000.0 + i / hz;
        poses.push_back(make_pose(t, c.at(t - 1000.0), c.yaw(t - 1000.0)));
    }
    return Trajectory(std::move(poses));
}

} // namespace

TEST(InterpolatePose, ExactAtSampleTimes) {
    const Circle c;
    const auto traj = sample_circle(c, 100.0, 5.0);
    const auto& s = traj[137];
    const auto p = interpolate_pose(traj, s.t);
    EXPECT_EQ(p.position, s.position);
    EXPECT_EQ(p.attitude.w(), s.attitude.w());
    EXPECT_EQ(p.t, s.t);
}

TEST(InterpolatePose, MidpointOfStraightSegment) {
    const Trajectory traj({make_pose(10.0, {0, 0, 50}, 0.0), make_pose(10.01, {1, 0, 50}, 0.0)});
    const auto p = interpolate_pose(traj, 10.005);
    const auto enu = geodetic_to_enu(p.position, kFrame);
    EXPECT_NEAR(enu.e, 0.5, 1e-9);
    EXPECT_NEAR(enu.n, 0.0, 1e-9);
    EXPECT_NEAR(enu.u, 50.0, 1e-9);
    EXPECT_EQ(p.t, 10.005);
}

TEST(InterpolatePose, CircleWithinSecondOrderBound) {
    const Circle c;
    const double hz = 100.0, dt = 1.0 / hz;
    const auto traj = sample_circle(c, hz, 20.0);
    // Chord sagitta: r * (1 - cos(w dt / 2)) ~ r w^2 dt^2 / 8.
    const double bound = c.r * (1.0 - std::cos(c.w * dt / 2.0)) + 1e-6;
    for (int i = 0; i < 997; ++i) {
        const double tr = 0.013 + i * 0.0197;
        const auto p = interpolate_pose(traj, 1000.0 + tr);
        const auto enu = geodetic_to_enu(p.position, kFrame).vec();
        EXPECT_LT((enu - c.at(tr)).norm(), bound) << tr;
        const auto truth = UnitQuaternion::from_axis_angle(Vec3::UnitZ(), c.yaw(tr));
        EXPECT_LT(attitude_in_frame(p, kFrame).angle_to(truth), 1e-6);
    }
}

TEST(InterpolatePose, ContinuousAcrossSamples) {
    const auto traj = sample_circle(Circle{}, 100.0, 2.0);
    const double ts = traj[50].t;
    const auto before = interpolate_pose(traj, ts - 1e-9);
    const auto after = interpolate_pose(traj, ts + 1e-9);
    const auto exact = interpolate_pose(traj, ts);
    EXPECT_LT((geodetic_to_enu(before.position, kFrame).vec() - geodetic_to_enu(exact.position, kFrame).vec()).norm(), 1e-6);
    EXPECT_LT((geodetic_to_enu(after.position, kFrame).vec() - geodetic_to_enu(exact.position, kFrame).vec()).norm(), 1e-6);
    EXPECT_LT(before.attitude.angle_to(exact.attitude), 1e-8);
}

TEST(InterpolatePose, ExtrapolatesWithinWindowOnly) {
    const Trajectory traj({make_pose(0.0, {0, 0, 10}, 0.0), make_pose(0.01, {0.1, 0, 10}, 0.01)});
    const auto p = interpolate_pose(traj, 0.05);
    EXPECT_NEAR(geodetic_to_enu(p.position, kFrame).e, 0.5, 1e-6);
    EXPECT_NEAR(attitude_in_frame(p, kFrame).angle(), 0.05, 1e-6);
    const auto q = interpolate_pose(traj, -0.04);
    EXPECT_NEAR(geodetic_to_enu(q.position, kFrame).e, -0.4, 1e-6);
    EXPECT_THROW((void)interpolate_pose(traj, 0.0601), adapt::RangeError);
    EXPECT_THROW((void)interpolate_pose(traj, -0.0501), adapt::RangeError);
}

TEST(InterpolatePose, RejectsInvalidBracketingSample) {
    auto a = make_pose(0.0, {0, 0, 10}, 0.0);
    auto b = make_pose(0.01, {0.1, 0, 10}, 0.0);
    auto c = make_pose(0.02, {0.2, 0, 10}, 0.0);
    b.status = status::kFixValid;  // attitude invalid
    const Trajectory traj({a, b, c});
    EXPECT_THROW((void)interpolate_pose(traj, 0.005), adapt::ValidityError);
    EXPECT_THROW((void)interpolate_pose(traj, 0.015), adapt::ValidityError);
    EXPECT_NO_THROW((void)interpolate_pose(traj, 0.0));
}

TEST(Trajectory, RejectsNonIncreasingTimes) {
    EXPECT_THROW(Trajectory({make_pose(1.0, {}, 0), make_pose(1.0, {}, 0)}), adapt::ContractError);
    EXPECT_THROW(Trajectory(std::vector<TimestampedPose>{}), adapt::InsufficientDataError);
}
