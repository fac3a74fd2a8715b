#pragma once

#include <adapt/geo/rotation.hpp>

#include <Eigen/SVD>

#include <span>
#include <vector>

namespace adapt::calib {

using geo::Mat3;
using geo::UnitQuaternion;

struct BoresightFit {
    UnitQuaternion boresight;              ///< INS body -> camera
    std::vector<double> residual_rad;      ///< per-image angle between truth and predicted camera rotation
    double rms_rad = 0.0;
    double chordal_cost = 0.0;             ///< mean squared Frobenius distance
};

/// Fixed rotation B minimising sum ||R_cam,i - B * R_ins,i||_F^2, where both
/// inputs map world vectors into their own frame. Closed form: the rotation
/// nearest (polar factor) to sum R_cam,i * R_ins,i^T.
[[nodiscard]] inline BoresightFit fit_boresight(std::span<const UnitQuaternion> cam_rotations,
                                                std::span<const UnitQuaternion> ins_rotations) {
    if (cam_rotations.size() != ins_rotations.size())
        throw ContractError("rotation lists differ in length");
    if (cam_rotations.empty())
        throw InsufficientDataError("boresight fit needs at least one rotation pair");

    Mat3 m = Mat3::Zero();
    for (std::size_t i = 0; i < cam_rotations.size(); ++i)
        m += cam_rotations[i].matrix() * ins_rotations[i].matrix().transpose();
    const Eigen::JacobiSVD<Mat3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Mat3 s = Mat3::Identity();
    if (svd.matrixU().determinant() * svd.matrixV().determinant() < 0.0)
        s(2, 2) = -1.0;
    const Mat3 b = svd.matrixU() * s * svd.matrixV().transpose();

    BoresightFit fit;
    fit.boresight = UnitQuaternion::from_matrix(b);
    fit.residual_rad.reserve(cam_rotations.size());
    double ss = 0.0, chordal = 0.0;
    for (std::size_t i = 0; i < cam_rotations.size(); ++i) {
        const UnitQuaternion predicted = fit.boresight * ins_rotations[i];
        const double r = predicted.angle_to(cam_rotations[i]);
        fit.residual_rad.push_back(r);
        ss += r * r;
        chordal += (cam_rotations[i].matrix() - predicted.matrix()).squaredNorm();
    }
    const double n = static_cast<double>(cam_rotations.size());
    fit.rms_rad = std::sqrt(ss / n);
    fit.chordal_cost = chordal / n;
    return fit;
}

} // namespace adapt::calib
