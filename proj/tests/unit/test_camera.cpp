#include <adapt/geo/camera.hpp>

#include <gtest/gtest.h>

#include <random>

using namespace adapt::geo;

namespace {

CameraModel test_camera() {
    CameraModel c;
    c.width = 1600;
    c.height = 1200;
    c.fx = 1500.0;
    c.fy = 1480.0;
    c.cx = 801.3;
    c.cy = 598.7;
    return c;
}

} // namespace

TEST(Camera, PrincipalPointIsOpticalAxis) {
    const auto c = test_camera();
    const auto r = pixel_to_ray(c, {c.cx, c.cy});
    EXPECT_NEAR(r.x(), 0.0, 1e-15);
    EXPECT_NEAR(r.y(), 0.0, 1e-15);
    EXPECT_NEAR(r.z(), 1.0, 1e-15);
}

TEST(Camera, OneFocalLengthRightIsFortyFiveDegrees) {
    const auto c = test_camera();
    const auto r = pixel_to_ray(c, {c.cx + c.fx, c.cy});
    EXPECT_NEAR(r.x(), 1.0 / std::sqrt(2.0), 1e-15);
    EXPECT_NEAR(r.y(), 0.0, 1e-15);
    EXPECT_NEAR(r.z(), 1.0 / std::sqrt(2.0), 1e-15);
}

TEST(Camera, UnprojectProjectRoundTripWithBarrelDistortion) {
    auto c = test_camera();
    c.k1 = -0.1;
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> ux(0.0, c.width), uy(0.0, c.height);
    for (int i = 0; i < 2000; ++i) {
        const PixelPoint px{ux(rng), uy(rng)};
        const auto ray = pixel_to_ray(c, px);
        EXPECT_NEAR(ray.norm(), 1.0, 1e-12);
        const auto back = project(c, ray);
        ASSERT_TRUE(back);
        EXPECT_LT(std::hypot(back->x - px.x, back->y - px.y), 1e-3);
    }
}

// Largest distorted radius reachable while r -> r * radial(r) is still increasing.
double radial_reach(const CameraModel& c) {
    double best = 0.0;
    for (double r = 0.0; r < 3.0; r += 1e-4) {
        const double r2 = r * r;
        if (1.0 + 3.0 * c.k1 * r2 + 5.0 * c.k2 * r2 * r2 <= 0.0)
            break;
        best = r * (1.0 + c.k1 * r2 + c.k2 * r2 * r2);
    }
    return best;
}

TEST(Camera, RoundTripAcrossDistortionRange) {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> k(-0.3, 0.3), p(-0.01, 0.01);
    int unreachable = 0;
    for (int trial = 0; trial < 50; ++trial) {
        auto c = test_camera();
        c.k1 = k(rng);
        c.k2 = k(rng);
        c.p1 = p(rng);
        c.p2 = p(rng);
        const double reach = radial_reach(c);
        std::uniform_real_distribution<double> ux(0.0, c.width), uy(0.0, c.height);
        for (int i = 0; i < 200; ++i) {
            const PixelPoint px{ux(rng), uy(rng)};
            try {
                const auto back = project(c, pixel_to_ray(c, px));
                ASSERT_TRUE(back);
                ASSERT_LT(std::hypot(back->x - px.x, back->y - px.y), 1e-3)
                    << "k1=" << c.k1 << " k2=" << c.k2 << " at " << px.x << "," << px.y;
            } catch (const adapt::NumericError&) {
                // Strong barrel distortion folds over before the corner; only
                // pixels beyond the fold may fail. Tangential terms shift the
                // fold slightly, hence the margin.
                const double rd = std::hypot((px.x - c.cx) / c.fx, (px.y - c.cy) / c.fy);
                EXPECT_GT(rd, 0.95 * reach) << "k1=" << c.k1 << " k2=" << c.k2;
                ++unreachable;
            }
        }
    }
    EXPECT_LT(unreachable, 200);
}

TEST(Camera, PathologicalDistortionReportsIterations) {
    auto c = test_camera();
    // r * (1 - 2 r^2) never exceeds 0.272, so the corner has no preimage.
    c.k1 = -2.0;
    try {
        (void)pixel_to_ray(c, {0.0, 0.0});
        FAIL() << "expected NumericError";
    } catch (const adapt::NumericError& e) {
        EXPECT_EQ(e.iterations(), 2 * kUndistortMaxIterations);
    }
}

TEST(Camera, PointsBehindCameraDoNotProject) {
    EXPECT_FALSE(project(test_camera(), Vec3(0.0, 0.0, -1.0)));
}

TEST(Camera, ValidateRejectsBadIntrinsics) {
    auto c = test_camera();
    c.fx = 0.0;
    EXPECT_THROW(c.validate(), adapt::ContractError);
    c = test_camera();
    c.cx = c.width + 1.0;
    EXPECT_THROW(c.validate(), adapt::ContractError);
    EXPECT_NO_THROW(test_camera().validate());
}

TEST(Camera, NadirBoresightLooksDown) {
    const auto b = nadir_boresight();
    // Optical axis expressed in the body frame.
    const Vec3 axis = b.matrix().transpose() * Vec3::UnitZ();
    EXPECT_LT((axis - Vec3(0, 0, -1)).norm(), 1e-12);
    const Vec3 tilted = pitched_boresight(std::numbers::pi / 4).matrix().transpose() * Vec3::UnitZ();
    EXPECT_LT((tilted - Vec3(1, 0, -1).normalized()).norm(), 1e-12);
}
