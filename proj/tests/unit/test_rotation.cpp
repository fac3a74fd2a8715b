#include <adapt/geo/rotation.hpp>

#include <gtest/gtest.h>

#include <random>

using namespace adapt::geo;

namespace {

UnitQuaternion random_rotation(std::mt19937_64& rng) {
    std::normal_distribution<double> n(0.0, 1.0);
    return {n(rng), n(rng), n(rng), n(rng)};
}

// Rotate q0 by u * theta about the axis of q0^-1 q1, using matrices and
// Rodrigues' formula rather than quaternion exponentials.
Mat3 axis_angle_oracle(const UnitQuaternion& q0, const UnitQuaternion& q1, double u) {
    const Mat3 rel = q0.matrix().transpose() * q1.matrix();
    const double c = std::clamp((rel.trace() - 1.0) / 2.0, -1.0, 1.0);
    const double theta = std::acos(c);
    Vec3 axis(rel(2, 1) - rel(1, 2), rel(0, 2) - rel(2, 0), rel(1, 0) - rel(0, 1));
    axis /= axis.norm();
    Mat3 k;
    k << 0, -axis.z(), axis.y(), axis.z(), 0, -axis.x(), -axis.y(), axis.x(), 0;
    const double a = u * theta;
    const Mat3 step = Mat3::Identity() + std::sin(a) * k + (1 - std::cos(a)) * k * k;
    return q0.matrix() * step;
}

} // namespace

TEST(Rotation, SlerpOfEqualInputsIsIdentity) {
    const UnitQuaternion q(0.3, -0.2, 0.5, 0.1);
    const auto r = slerp(q, q, 0.5);
    EXPECT_LT(r.angle_to(q), 1e-12);
}

TEST(Rotation, SlerpHalfwayToNinetyDegreeYaw) {
    const auto q1 = UnitQuaternion::from_axis_angle(Vec3::UnitZ(), std::numbers::pi / 2);
    const auto r = slerp(UnitQuaternion::identity(), q1, 0.5);
    const auto expected = UnitQuaternion::from_axis_angle(Vec3::UnitZ(), std::numbers::pi / 4);
    EXPECT_LT(r.angle_to(expected), 1e-12);
}

TEST(Rotation, SlerpMatchesAxisAngleOracle) {
    std::mt19937_64 rng(11);
    for (int i = 0; i < 500; ++i) {
        const auto q0 = random_rotation(rng);
        const auto q1 = random_rotation(rng);
        if (q0.angle_to(q1) < 1e-3)
            continue;
        const auto r = slerp(q0, q1, 0.3);
        EXPECT_LT((r.matrix() - axis_angle_oracle(q0, q1, 0.3)).norm(), 1e-9);
    }
}

TEST(Rotation, SlerpEndpointsAndUnitNorm) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> uu(0.0, 1.0);
    for (int i = 0; i < 1000; ++i) {
        const auto q0 = random_rotation(rng);
        const auto q1 = random_rotation(rng);
        EXPECT_LT(slerp(q0, q1, 0.0).angle_to(q0), 1e-12);
        EXPECT_LT(slerp(q0, q1, 1.0).angle_to(q1), 1e-12);
        const double u = uu(rng);
        const auto r = slerp(q0, q1, u);
        EXPECT_NEAR(r.norm(), 1.0, 1e-9);
        // Reversal symmetry, up to sign.
        EXPECT_LT(r.angle_to(slerp(q1, q0, 1.0 - u)), 1e-9);
    }
}

TEST(Rotation, SlerpTakesShortestPath) {
    const auto q0 = UnitQuaternion::identity();
    const auto q1 = UnitQuaternion::from_axis_angle(Vec3::UnitX(), 0.2).negated();
    const auto r = slerp(q0, q1, 0.5);
    EXPECT_NEAR(r.angle(), 0.1, 1e-12);
}

TEST(Rotation, AntipodalRepresentativesAreTheSameRotation) {
    const UnitQuaternion q(0.1, 0.7, -0.2, 0.4);
    EXPECT_LT(q.angle_to(q.negated()), 1e-12);
    EXPECT_GE(q.negated().canonical().w(), 0.0);
    EXPECT_LT(slerp(q, q.negated(), 0.5).angle_to(q), 1e-12);
}

TEST(Rotation, ProductStaysUnitNorm) {
    std::mt19937_64 rng(5);
    UnitQuaternion acc;
    for (int i = 0; i < 10000; ++i)
        acc = acc * random_rotation(rng);
    EXPECT_NEAR(acc.norm(), 1.0, 1e-9);
}

TEST(Rotation, MatrixRoundTrip) {
    std::mt19937_64 rng(9);
    for (int i = 0; i < 200; ++i) {
        const auto q = random_rotation(rng);
        const auto back = UnitQuaternion::from_matrix(q.matrix());
        EXPECT_LT(q.angle_to(back), 1e-9);
        EXPECT_NEAR(q.matrix().determinant(), 1.0, 1e-12);
    }
}

TEST(Rotation, RejectsZeroQuaternion) {
    EXPECT_THROW(UnitQuaternion(0, 0, 0, 0), adapt::DomainError);
}
