#include <adapt/geo/georegister.hpp>
#include <adapt/geo/io.hpp>

#include <gtest/gtest.h>

#include <random>
#include <sstream>

using namespace adapt::geo;

namespace {

const EnuFrame kFrame({64.84, -147.71, 130.0});

CameraModel nadir_camera() {
    CameraModel c;
    c.width = 1000;
    c.height = 800;
    c.fx = c.fy = 1000.0;
    c.cx = 500.0;
    c.cy = 400.0;
    c.boresight = nadir_boresight();
    return c;
}

TimestampedPose pose_at(const Vec3& enu, const UnitQuaternion& att, double t = 0.0) {
    TimestampedPose p;
    p.t = t;
    p.position = enu_to_geodetic(EnuPoint::from(enu), kFrame);
    p.attitude = attitude_from_frame(att, p.position, kFrame);
    return p;
}

Vec3 to_enu(const GeodeticPosition& g) { return geodetic_to_enu(g, kFrame).vec(); }

PixelRing square(double x0, double y0, double x1, double y1) {
    return {{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}, {x0, y0}};
}

} // namespace

TEST(Georegister, NadirPrincipalPointIsDirectlyBelow) {
    const auto cam = nadir_camera();
    const auto pose = pose_at({12.0, -7.0, 100.0}, UnitQuaternion::identity());
    const auto g = georegister_pixel(cam, pose, kFrame, 0.0, {cam.cx, cam.cy});
    const auto p = to_enu(g);
    EXPECT_NEAR(p.x(), 12.0, 1e-6);
    EXPECT_NEAR(p.y(), -7.0, 1e-6);
    EXPECT_NEAR(p.z(), 0.0, 1e-6);
}

TEST(Georegister, TimeOffsetDuringTurnDisplacesGroundPoint) {
    // Hovering 10 m above ground, yawing at 10 deg/s, looking 200 m slant.
    const double alt = 10.0, slant = 200.0, rate = 10.0 * kDegToRad;
    auto cam = nadir_camera();
    cam.boresight = pitched_boresight(std::numbers::pi / 2 - std::asin(alt / slant));
    std::vector<TimestampedPose> samples;
    for (int i = 0; i <= 500; ++i) {
        const double t = i * 0.01;
        samples.push_back(pose_at({0, 0, alt}, UnitQuaternion::from_axis_angle(Vec3::UnitZ(), rate * t), t));
    }
    const Trajectory traj(std::move(samples));
    const double t_image = 2.0;
    const auto truth = to_enu(georegister_pixel(cam, interpolate_pose(traj, t_image), kFrame, 0.0, {cam.cx, cam.cy}));
    EXPECT_NEAR((truth - Vec3(0, 0, alt)).norm(), slant, 1e-3);
    const auto shifted =
        to_enu(georegister_pixel(cam, interpolate_pose(traj, t_image + 1.0), kFrame, 0.0, {cam.cx, cam.cy}));
    const double displacement = (shifted - truth).norm();
    EXPECT_NEAR(displacement, 34.9, 0.5);
    // Small-angle model R * omega * dt.
    EXPECT_NEAR(displacement, slant * rate * 1.0, 0.05 * slant * rate);
}

TEST(Georegister, ReprojectionRecoversPixel) {
    auto cam = nadir_camera();
    cam.k1 = -0.08;
    cam.k2 = 0.01;
    cam.p1 = 0.001;
    cam.lever_arm = Vec3(0.1, -0.05, -0.2);
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> ux(0, cam.width), uy(0, cam.height), ang(-0.3, 0.3);
    for (int i = 0; i < 300; ++i) {
        const auto att = UnitQuaternion::from_ypr(ang(rng) * 10, ang(rng), ang(rng));
        const auto pose = pose_at({ang(rng) * 100, ang(rng) * 100, 80.0}, att);
        const ViewGeometry view(cam, pose, kFrame);
        const PixelPoint px{ux(rng), uy(rng)};
        const auto ground = georegister_pixel_enu(view, 2.0, px);
        EXPECT_NEAR(ground.z(), 2.0, 1e-9);
        const auto back = view.reproject(ground);
        ASSERT_TRUE(back);
        EXPECT_LT(std::hypot(back->x - px.x, back->y - px.y), 0.1);
    }
}

// Plane homography built from the projection matrix P = K [R | -R C]:
// pixels ~ K [r1 r2 R(g e3 - C)] (e, n, 1).
TEST(Georegister, CornerGridMatchesHomographyOracle) {
    const auto cam = nadir_camera();
    const auto att = UnitQuaternion::from_ypr(0.4, 0.15, -0.1);
    const Vec3 c_enu(30.0, -20.0, 120.0);
    const auto pose = pose_at(c_enu, att);
    const double g = 3.0;
    const Mat3 r_wc = (att.matrix() * cam.boresight.matrix().transpose()).transpose();
    Mat3 k;
    k << cam.fx, 0, cam.cx, 0, cam.fy, cam.cy, 0, 0, 1;
    Mat3 h;
    h.col(0) = r_wc.col(0);
    h.col(1) = r_wc.col(1);
    h.col(2) = r_wc * (Vec3(0, 0, g) - c_enu);
    const Mat3 h_inv = (k * h).inverse();
    for (int i = 0; i <= 10; ++i) {
        for (int j = 0; j <= 10; ++j) {
            const PixelPoint px{cam.width * i / 10.0, cam.height * j / 10.0};
            const Vec3 q = h_inv * Vec3(px.x, px.y, 1.0);
            const Vec3 oracle(q.x() / q.z(), q.y() / q.z(), g);
            const auto got = to_enu(georegister_pixel(cam, pose, kFrame, g, px));
            EXPECT_LT((got - oracle).norm(), 1e-3) << i << "," << j;
        }
    }
}

TEST(Georegister, HorizonAndBelowGroundErrors) {
    auto cam = nadir_camera();
    cam.boresight = pitched_boresight(std::numbers::pi / 2);  // looking at the horizon
    const auto pose = pose_at({0, 0, 50}, UnitQuaternion::identity());
    EXPECT_THROW((void)georegister_pixel(cam, pose, kFrame, 0.0, {cam.cx, cam.cy}), adapt::HorizonError);
    EXPECT_THROW((void)georegister_pixel(cam, pose, kFrame, 0.0, {cam.cx, 0.0}), adapt::HorizonError);
    EXPECT_NO_THROW((void)georegister_pixel(cam, pose, kFrame, 0.0, {cam.cx, cam.height - 1.0}));
    const auto nadir = nadir_camera();
    EXPECT_THROW((void)georegister_pixel(nadir, pose, kFrame, 60.0, {nadir.cx, nadir.cy}), adapt::HorizonError);
}

TEST(GeoregisterMask, NadirSquareBecomesGroundRectangle) {
    const auto cam = nadir_camera();
    const double alt = 50.0;
    const auto pose = pose_at({0, 0, alt}, UnitQuaternion::identity());
    const std::vector<PixelPolygon> polys{{1, square(300, 200, 500, 300), {}}};
    const auto set = georegister_mask(cam, pose, kFrame, 0.0, polys, 42);
    ASSERT_EQ(set.class_polygons.size(), 1u);
    EXPECT_EQ(set.image_id, 42u);
    const auto& ring = set.class_polygons[0].outer;
    ASSERT_EQ(ring.size(), 5u);
    EXPECT_EQ(ring.front(), ring.back());
    // Per-vertex oracle: each vertex equals georegister_pixel of some corner.
    const double gsd = alt / cam.fx;
    std::vector<Vec3> pts;
    for (const auto& g : ring)
        pts.push_back(to_enu(g));
    double min_e = 1e9, max_e = -1e9, min_n = 1e9, max_n = -1e9;
    for (const auto& p : pts) {
        min_e = std::min(min_e, p.x());
        max_e = std::max(max_e, p.x());
        min_n = std::min(min_n, p.y());
        max_n = std::max(max_n, p.y());
    }
    // Image x is across track (east when heading east), image y along track.
    EXPECT_NEAR(max_n - min_n, 200 * gsd, 1e-6);
    EXPECT_NEAR(max_e - min_e, 100 * gsd, 1e-6);
    for (std::size_t i = 0; i + 1 < ring.size(); ++i) {
        bool matched = false;
        for (const auto& px : polys[0].outer) {
            const auto ref = to_enu(georegister_pixel(cam, pose, kFrame, 0.0, px));
            matched = matched || (ref - pts[i]).norm() < 1e-6;
        }
        EXPECT_TRUE(matched);
    }
    // Exterior rings counter-clockwise in the east-north plane.
    std::vector<Vec3> closed = pts;
    EXPECT_GT(signed_area_xy(closed), 0.0);
}

TEST(GeoregisterMask, YawHalfTurnReflectsAboutNadir) {
    const auto cam = nadir_camera();
    const Vec3 c(5.0, 8.0, 60.0);
    const std::vector<PixelPolygon> polys{{1, {{100, 100}, {400, 120}, {350, 600}, {120, 500}, {100, 100}}, {}}};
    const auto a = georegister_mask(cam, pose_at(c, UnitQuaternion::identity()), kFrame, 0.0, polys);
    const auto b = georegister_mask(cam, pose_at(c, UnitQuaternion::from_axis_angle(Vec3::UnitZ(), std::numbers::pi)),
                                    kFrame, 0.0, polys);
    ASSERT_EQ(a.class_polygons[0].outer.size(), b.class_polygons[0].outer.size());
    const Vec3 nadir(c.x(), c.y(), 0.0);
    for (const auto& va : a.class_polygons[0].outer) {
        const Vec3 reflected = 2 * nadir - to_enu(va);
        double best = 1e9;
        for (const auto& vb : b.class_polygons[0].outer)
            best = std::min(best, (to_enu(vb) - Vec3(reflected.x(), reflected.y(), 0.0)).norm());
        EXPECT_LT(best, 1e-6);
    }
}

TEST(GeoregisterMask, ClipsRingsAtTheHorizon) {
    auto cam = nadir_camera();
    cam.boresight = pitched_boresight(80.0 * kDegToRad);  // top of image sees sky
    const auto pose = pose_at({0, 0, 40}, UnitQuaternion::identity());
    const ViewGeometry view(cam, pose, kFrame);
    const std::vector<PixelPolygon> whole{{1, square(0, 0, cam.width, cam.height), {}}};
    const auto set = georegister_mask(cam, pose, kFrame, 0.0, whole);
    ASSERT_EQ(set.class_polygons.size(), 1u);
    EXPECT_TRUE(set.horizon_clipped);
    for (const auto& g : set.class_polygons[0].outer) {
        const auto px = view.reproject(to_enu(g));
        ASSERT_TRUE(px);
        EXPECT_GE(view.depression(pixel_to_ray(cam, *px)), kMinGrazingAngleRad - 1e-6);
    }
    const std::vector<PixelPolygon> sky{{1, square(10, 5, 200, 40), {}}};
    const auto empty = georegister_mask(cam, pose, kFrame, 0.0, sky);
    EXPECT_TRUE(empty.class_polygons.empty());
    EXPECT_TRUE(empty.above_horizon);
}

TEST(GeoregisterMask, HolesComeOutClockwise) {
    const auto cam = nadir_camera();
    const auto pose = pose_at({0, 0, 50}, UnitQuaternion::from_axis_angle(Vec3::UnitZ(), 0.3));
    const std::vector<PixelPolygon> polys{{1, square(100, 100, 600, 600), {square(200, 200, 300, 300)}}};
    const auto set = georegister_mask(cam, pose, kFrame, 0.0, polys);
    ASSERT_EQ(set.class_polygons.at(0).holes.size(), 1u);
    std::vector<Vec3> hole;
    for (const auto& g : set.class_polygons[0].holes[0])
        hole.push_back(to_enu(g));
    EXPECT_LT(signed_area_xy(hole), 0.0);
    EXPECT_FALSE(set.footprint.empty());
}

TEST(GeoJson, OneFeaturePerRegion) {
    GeoPolygonSet set;
    set.image_id = 7;
    set.class_polygons.push_back({1, {{1, 2, 0}, {1, 3, 0}, {2, 3, 0}, {1, 2, 0}}, {}});
    const std::vector<GeoPolygonSet> sets{set};
    const auto j = to_geojson(sets);
    EXPECT_EQ(j["type"], "FeatureCollection");
    ASSERT_EQ(j["features"].size(), 1u);
    EXPECT_EQ(j["features"][0]["properties"]["class_id"], 1);
    EXPECT_EQ(j["features"][0]["properties"]["image_id"], 7);
    EXPECT_EQ(j["features"][0]["geometry"]["coordinates"][0].size(), 5u - 1u);
    EXPECT_DOUBLE_EQ(j["features"][0]["geometry"]["coordinates"][0][0][0].get<double>(), 2.0);  // lon first
}

TEST(InsCsv, RoundTripsAndNamesMissingColumns) {
    std::vector<TimestampedPose> poses(2);
    poses[0].t = 1318000000.125;
    poses[0].position = {64.8, -147.7, 150.25};
    poses[0].attitude = UnitQuaternion::from_ypr(0.1, 0.2, 0.3);
    poses[1] = poses[0];
    poses[1].t += 0.01;
    poses[1].status = 0x1;
    std::stringstream ss;
    write_ins_csv(ss, poses);
    const auto back = read_ins_csv(ss);
    ASSERT_EQ(back.size(), 2u);
    EXPECT_EQ(back[0].t, poses[0].t);
    EXPECT_EQ(back[0].position, poses[0].position);
    EXPECT_EQ(back[1].status, 0x1u);
    EXPECT_LT(back[0].attitude.angle_to(poses[0].attitude), 1e-15);

    std::stringstream bad("t_gps_s,lat_deg,lon_deg,alt_m,qw,qx,qy,status_hex\n1,2,3,4,1,0,0,3\n");
    try {
        (void)read_ins_csv(bad);
        FAIL();
    } catch (const adapt::ParseError& e) {
        EXPECT_NE(std::string(e.what()).find("qz"), std::string::npos);
    }
}
