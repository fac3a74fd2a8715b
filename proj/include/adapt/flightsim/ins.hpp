#pragma once

#include <adapt/geo/pose.hpp>

#include <nlohmann/json.hpp>

#include <cmath>
#include <random>
#include <vector>

namespace adapt::flightsim {

/// White INS measurement noise: independent per sample, position per axis
/// in the mission ENU frame, attitude as a small random rotation about each
/// body axis. `clock_offset_s` is added to every INS timestamp.
struct InsNoise {
    bool enabled = false;
    double position_sigma_m = 0.02;
    double attitude_sigma_deg = 0.02;
    double clock_offset_s = 0.0;
    std::uint64_t seed = 7;

    [[nodiscard]] static InsNoise from_json(const nlohmann::json& j) {
        InsNoise n;
        n.enabled = j.value("enabled", true);
        n.position_sigma_m = j.value("position_sigma_m", n.position_sigma_m);
        n.attitude_sigma_deg = j.value("attitude_sigma_deg", n.attitude_sigma_deg);
        n.clock_offset_s = j.value("clock_offset_s", n.clock_offset_s);
        n.seed = j.value("seed", n.seed);
        if (!(n.position_sigma_m >= 0 && n.attitude_sigma_deg >= 0))
            throw ContractError("INS noise sigmas must be non-negative");
        return n;
    }

    [[nodiscard]] nlohmann::json to_json() const {
        return {{"enabled", enabled},
                {"position_sigma_m", position_sigma_m},
                {"attitude_sigma_deg", attitude_sigma_deg},
                {"clock_offset_s", clock_offset_s},
                {"seed", seed}};
    }
};

/// The INS log the payload would record for a truth trajectory.
[[nodiscard]] inline std::vector<geo::TimestampedPose> apply_ins_noise(std::span<const geo::TimestampedPose> truth,
                                                                       const geo::EnuFrame& frame,
                                                                       const InsNoise& noise) {
    std::vector<geo::TimestampedPose> out(truth.begin(), truth.end());
    for (auto& p : out)
        p.t += noise.clock_offset_s;
    if (!noise.enabled)
        return out;
    std::mt19937_64 rng(noise.seed);
    std::normal_distribution<double> g(0.0, 1.0);
    const double att = noise.attitude_sigma_deg * geo::kDegToRad;
    for (auto& p : out) {
        const geo::Vec3 dp(g(rng), g(rng), g(rng));
        const geo::Vec3 dr(g(rng), g(rng), g(rng));
        const geo::Vec3 enu = geo::geodetic_to_enu(p.position, frame).vec() + noise.position_sigma_m * dp;
        p.position = geo::enu_to_geodetic(geo::EnuPoint::from(enu), frame);
        p.attitude = p.attitude * geo::UnitQuaternion::exp(att * dr);
    }
    return out;
}

} // namespace adapt::flightsim
