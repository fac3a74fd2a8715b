#pragma once

#include <adapt/geo/rotation.hpp>

#include <Eigen/SVD>

#include <span>
#include <vector>

namespace adapt::calib {

using geo::Mat3;
using geo::UnitQuaternion;
using geo::Vec3;

/// y = scale * R * x + translation
struct SimilarityTransform {
    double scale = 1.0;
    UnitQuaternion rotation;
    Vec3 translation = Vec3::Zero();

    [[nodiscard]] Vec3 apply(const Vec3& x) const { return scale * rotation.rotate(x) + translation; }

    [[nodiscard]] SimilarityTransform inverse() const {
        SimilarityTransform inv;
        inv.scale = 1.0 / scale;
        inv.rotation = rotation.conjugate();
        inv.translation = -(inv.scale * inv.rotation.rotate(translation));
        return inv;
    }
};

/// Closed-form least-squares similarity (Umeyama) mapping `from` onto `to`.
/// Throws DegenerateGeometryError for fewer than three points or a
/// collinear configuration.
[[nodiscard]] inline SimilarityTransform fit_similarity(std::span<const Vec3> from, std::span<const Vec3> to) {
    if (from.size() != to.size())
        throw ContractError("point lists differ in length");
    if (from.size() < 3)
        throw DegenerateGeometryError("similarity fit needs at least three point pairs");
    const double n = static_cast<double>(from.size());

    Vec3 mu_x = Vec3::Zero(), mu_y = Vec3::Zero();
    for (std::size_t i = 0; i < from.size(); ++i) {
        mu_x += from[i];
        mu_y += to[i];
    }
    mu_x /= n;
    mu_y /= n;

    Mat3 cov = Mat3::Zero();
    double var_x = 0.0;
    for (std::size_t i = 0; i < from.size(); ++i) {
        const Vec3 dx = from[i] - mu_x;
        cov += (to[i] - mu_y) * dx.transpose();
        var_x += dx.squaredNorm();
    }
    cov /= n;
    var_x /= n;

    // Rank check on the source cloud: collinear points leave rotation about
    // the line undetermined.
    Mat3 scatter = Mat3::Zero();
    for (const auto& p : from)
        scatter += (p - mu_x) * (p - mu_x).transpose();
    const Eigen::SelfAdjointEigenSolver<Mat3> eig(scatter);
    const auto ev = eig.eigenvalues();
    if (!(ev(2) > 0.0) || ev(1) <= 1e-12 * ev(2))
        throw DegenerateGeometryError("point configuration is collinear or coincident");

    const Eigen::JacobiSVD<Mat3> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Mat3 s = Mat3::Identity();
    if (svd.matrixU().determinant() * svd.matrixV().determinant() < 0.0)
        s(2, 2) = -1.0;
    const Mat3 r = svd.matrixU() * s * svd.matrixV().transpose();

    SimilarityTransform t;
    t.rotation = UnitQuaternion::from_matrix(r);
    t.scale = (svd.singularValues().asDiagonal() * s).trace() / var_x;
    t.translation = mu_y - t.scale * r * mu_x;
    return t;
}

/// Root-mean-square distance between transformed `from` points and `to`.
[[nodiscard]] inline double similarity_rms(const SimilarityTransform& t, std::span<const Vec3> from,
                                           std::span<const Vec3> to) {
    double ss = 0.0;
    for (std::size_t i = 0; i < from.size(); ++i)
        ss += (t.apply(from[i]) - to[i]).squaredNorm();
    return from.empty() ? 0.0 : std::sqrt(ss / static_cast<double>(from.size()));
}

} // namespace adapt::calib
