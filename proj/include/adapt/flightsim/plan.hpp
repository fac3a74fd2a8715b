#pragma once

#include <adapt/geo/camera.hpp>
#include <adapt/geo/pose.hpp>

#include <nlohmann/json.hpp>

#include <cmath>
#include <fstream>
#include <numbers>
#include <string>
#include <vector>

namespace adapt::flightsim {

using geo::UnitQuaternion;
using geo::Vec3;

inline constexpr double kGravity = 9.80665;

/// Ground footprint of one pixel: altitude x pitch / focal.
[[nodiscard]] inline double ground_sample_distance(double altitude_m, double focal_mm, double pixel_pitch_um) {
    if (!(altitude_m > 0 && focal_mm > 0 && pixel_pitch_um > 0))
        throw ContractError("ground_sample_distance needs positive altitude, focal length and pixel pitch");
    return altitude_m * (pixel_pitch_um * 1e-6) / (focal_mm * 1e-3);
}

/// The virtual camera: 5320 x 3032 pixels behind an 8 mm lens at 2.667 um pitch.
struct SensorSpec {
    int width = 5320;
    int height = 3032;
    double focal_mm = 8.0;
    double pixel_pitch_um = 2.667;

    [[nodiscard]] double focal_px() const { return focal_mm * 1e-3 / (pixel_pitch_um * 1e-6); }

    /// Camera model with the optics divided by `decimation` (desk-scale runs
    /// render fewer, larger pixels with the same field of view).
    [[nodiscard]] geo::CameraModel camera(double decimation = 1.0, const UnitQuaternion& boresight = geo::nadir_boresight()) const {
        geo::CameraModel c;
        c.width = width;
        c.height = height;
        c.fx = c.fy = focal_px();
        c.cx = width / 2.0;
        c.cy = height / 2.0;
        c.boresight = boresight;
        return decimation == 1.0 ? c : c.scaled(decimation);
    }
};

enum class Pattern { lawnmower, figure_eight, bank_line, hover };

[[nodiscard]] inline std::string to_string(Pattern p) {
    switch (p) {
    case Pattern::lawnmower: return "lawnmower";
    case Pattern::figure_eight: return "figure-eight";
    case Pattern::bank_line: return "bank-line";
    case Pattern::hover: return "hover";
    }
    return "?";
}

[[nodiscard]] inline Pattern parse_pattern(const std::string& s) {
    if (s == "lawnmower")
        return Pattern::lawnmower;
    if (s == "figure-eight" || s == "figure_eight")
        return Pattern::figure_eight;
    if (s == "bank-line" || s == "bank_line")
        return Pattern::bank_line;
    if (s == "hover")
        return Pattern::hover;
    throw ParseError("unknown flight pattern '" + s + "'");
}

struct ExposureStep {
    double t_s = 0.0; ///< mission seconds from which this exposure applies
    double exposure_us = 500.0;
};

struct MissionPlan {
    Pattern pattern = Pattern::lawnmower;
    double altitude_m = 30.0;     ///< above the scene ground plane
    double speed_mps = 10.0;
    double overlap = 0.2;         ///< cross-track overlap between adjacent lawnmower passes
    double fps = 4.0;
    double ins_hz = 100.0;
    double camera_pitch_deg = 0.0; ///< 0 nadir, 90 straight ahead
    std::vector<ExposureStep> exposure{{0.0, 500.0}};
    double area_e_m = 150.0;      ///< lawnmower: cross-track extent covered
    double area_n_m = 150.0;      ///< lawnmower and bank-line: along-track line length
    double centre_e_m = 0.0;
    double centre_n_m = 0.0;
    double duration_s = 60.0;     ///< figure-eight, bank-line and hover length
    double altitude_span_m = 0.0; ///< figure-eight: altitude swing either side of altitude_m
    double max_turn_rate_dps = 30.0;
    double t0_gps_s = 1.4e9;      ///< GPS time of mission start
    double decimation = 8.0;      ///< desk-scale camera: pixels divided by this
    std::uint64_t seed = 1;

    void validate() const {
        if (!(overlap >= 0.0 && overlap <= 0.9))
            throw PlanError("overlap must be within [0, 0.9]");
        if (!(fps > 0.0 && fps <= ins_hz))
            throw PlanError("camera fps must be positive and not above the INS rate");
        if (!(altitude_m > 0.0))
            throw PlanError("altitude must be positive");
        if (pattern != Pattern::hover && !(speed_mps > 0.0))
            throw PlanError("speed must be positive");
        if (!(camera_pitch_deg >= 0.0 && camera_pitch_deg < 90.0))
            throw PlanError("camera pitch must be within [0, 90) degrees");
        if (!(max_turn_rate_dps > 0.0))
            throw PlanError("turn-rate limit must be positive");
        if (!(decimation >= 1.0))
            throw PlanError("decimation must be at least 1");
        if (exposure.empty())
            throw PlanError("exposure schedule is empty");
        for (const auto& e : exposure)
            if (!(e.exposure_us >= 0.0))
                throw PlanError("exposure must be non-negative");
    }

    [[nodiscard]] UnitQuaternion boresight() const {
        return geo::pitched_boresight(camera_pitch_deg * std::numbers::pi / 180.0);
    }

    [[nodiscard]] double exposure_at(double t_mission) const {
        double us = exposure.front().exposure_us;
        for (const auto& e : exposure)
            if (t_mission >= e.t_s)
                us = e.exposure_us;
        return us;
    }

    [[nodiscard]] static MissionPlan from_json(const nlohmann::json& j) {
        MissionPlan p;
        try {
            if (j.contains("pattern"))
                p.pattern = parse_pattern(j.at("pattern").get<std::string>());
            p.altitude_m = j.value("altitude_m", p.altitude_m);
            p.speed_mps = j.value("speed_mps", p.speed_mps);
            p.overlap = j.value("overlap", p.overlap);
            p.fps = j.value("fps", p.fps);
            p.ins_hz = j.value("ins_hz", p.ins_hz);
            p.camera_pitch_deg = j.value("camera_pitch_deg", p.camera_pitch_deg);
            if (j.contains("exposure_us"))
                p.exposure = {{0.0, j.at("exposure_us").get<double>()}};
            if (j.contains("exposure_schedule")) {
                p.exposure.clear();
                for (const auto& s : j.at("exposure_schedule"))
                    p.exposure.push_back({s.at("t_s").get<double>(), s.at("exposure_us").get<double>()});
            }
            p.area_e_m = j.value("area_e_m", p.area_e_m);
            p.area_n_m = j.value("area_n_m", p.area_n_m);
            p.centre_e_m = j.value("centre_e_m", p.centre_e_m);
            p.centre_n_m = j.value("centre_n_m", p.centre_n_m);
            p.duration_s = j.value("duration_s", p.duration_s);
            p.altitude_span_m = j.value("altitude_span_m", p.altitude_span_m);
            p.max_turn_rate_dps = j.value("max_turn_rate_dps", p.max_turn_rate_dps);
            p.t0_gps_s = j.value("t0_gps_s", p.t0_gps_s);
            p.decimation = j.value("decimation", p.decimation);
            p.seed = j.value("seed", p.seed);
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(std::string("mission plan: ") + e.what());
        }
        p.validate();
        return p;
    }

    [[nodiscard]] nlohmann::json to_json() const {
        auto sched = nlohmann::json::array();
        for (const auto& e : exposure)
            sched.push_back({{"t_s", e.t_s}, {"exposure_us", e.exposure_us}});
        return {{"pattern", to_string(pattern)},
                {"altitude_m", altitude_m},
                {"speed_mps", speed_mps},
                {"overlap", overlap},
                {"fps", fps},
                {"ins_hz", ins_hz},
                {"camera_pitch_deg", camera_pitch_deg},
                {"exposure_schedule", sched},
                {"area_e_m", area_e_m},
                {"area_n_m", area_n_m},
                {"centre_e_m", centre_e_m},
                {"centre_n_m", centre_n_m},
                {"duration_s", duration_s},
                {"altitude_span_m", altitude_span_m},
                {"max_turn_rate_dps", max_turn_rate_dps},
                {"t0_gps_s", t0_gps_s},
                {"decimation", decimation},
                {"seed", seed}};
    }

    [[nodiscard]] static MissionPlan load(const std::string& path) {
        std::ifstream in(path);
        if (!in)
            throw IoError("cannot open mission plan '" + path + "'");
        try {
            return from_json(nlohmann::json::parse(in));
        } catch (const nlohmann::json::parse_error& e) {
            throw ParseError("mission plan '" + path + "': " + e.what());
        }
    }
};

/// Kinematic state on the planned path, in the mission ENU frame.
struct PathState {
    Vec3 position = Vec3::Zero();
    Vec3 velocity = Vec3::Zero();
    double yaw_rate = 0.0;  ///< rad/s, positive counter-clockwise seen from above
    bool imaging = true;    ///< false on lawnmower turns
};

/// Body attitude (x forward, y left, z up) for coordinated flight: heading
/// along the horizontal velocity, nose following the climb angle, bank
/// from the turn rate. A stationary vehicle keeps `hover_yaw`.
[[nodiscard]] inline UnitQuaternion flight_attitude(const PathState& s, double hover_yaw = 0.0) {
    const double vh = std::hypot(s.velocity.x(), s.velocity.y());
    const double yaw = vh > 1e-9 ? std::atan2(s.velocity.y(), s.velocity.x()) : hover_yaw;
    const double pitch = vh > 1e-9 ? -std::atan2(s.velocity.z(), vh) : 0.0;
    const double roll = -std::atan(vh * s.yaw_rate / kGravity);
    return UnitQuaternion::from_ypr(yaw, pitch, roll);
}

namespace detail {

/// Straight passes joined by turns: a quarter arc, a straight crossing, a
/// quarter arc. Arc radius comes from the turn-rate limit.
class LawnmowerPath {
public:
    LawnmowerPath(const MissionPlan& p, double swath_m) : p_(p) {
        spacing_ = swath_m * (1.0 - p.overlap);
        radius_ = p.speed_mps / (p.max_turn_rate_dps * std::numbers::pi / 180.0);
        if (!(spacing_ > 0.0))
            throw PlanError("lawnmower line spacing is not positive");
        if (spacing_ < 2.0 * radius_)
            throw PlanError("line spacing " + std::to_string(spacing_) + " m is tighter than the " +
                            std::to_string(2.0 * radius_) + " m minimum U-turn at this speed and turn-rate limit");
        const double cover = std::max(0.0, p.area_e_m - swath_m);
        lines_ = 1 + static_cast<int>(std::ceil(cover / spacing_ - 1e-9));
        e_first_ = p.centre_e_m - 0.5 * (lines_ - 1) * spacing_;
        n_lo_ = p.centre_n_m - 0.5 * p.area_n_m;
        line_len_ = p.area_n_m;
        arc_len_ = 0.5 * std::numbers::pi * radius_;
        cross_len_ = spacing_ - 2.0 * radius_;
        turn_len_ = 2.0 * arc_len_ + cross_len_;
    }

    [[nodiscard]] int lines() const { return lines_; }
    [[nodiscard]] double spacing() const { return spacing_; }
    [[nodiscard]] double line_length() const { return line_len_; }
    [[nodiscard]] double total_length() const { return lines_ * line_len_ + (lines_ - 1) * turn_len_; }
    [[nodiscard]] double duration() const { return total_length() / p_.speed_mps; }

    [[nodiscard]] PathState at(double t) const {
        double s = std::clamp(t * p_.speed_mps, 0.0, total_length());
        const double v = p_.speed_mps;
        const double per = line_len_ + turn_len_;
        int k = std::min(lines_ - 1, static_cast<int>(s / per));
        double r = s - k * per;
        if (k == lines_ - 1)
            r = std::min(r, line_len_);
        const double dir = k % 2 == 0 ? 1.0 : -1.0; // northbound on even lines
        const double e = e_first_ + k * spacing_;
        const double n_start = dir > 0 ? n_lo_ : n_lo_ + line_len_;
        PathState st;
        const double z = p_.altitude_m;
        if (r <= line_len_) {
            st.position = {e, n_start + dir * r, z};
            st.velocity = {0, dir * v, 0};
            return st;
        }
        // Turn from line k to line k+1 (always eastwards). Northbound lines
        // turn clockwise at the top, southbound ones counter-clockwise.
        st.imaging = false;
        r -= line_len_;
        const double n_end = n_start + dir * line_len_;
        const double turn_sign = dir > 0 ? -1.0 : 1.0; // yaw-rate sign
        if (r < arc_len_) {
            const double a = r / radius_;
            // Centre of the first arc lies east of the line end.
            const Vec3 c(e + radius_, n_end, z);
            st.position = c + Vec3(-radius_ * std::cos(a), dir * radius_ * std::sin(a), 0);
            st.velocity = Vec3(v * std::sin(a), dir * v * std::cos(a), 0);
            st.yaw_rate = turn_sign * v / radius_;
        } else if (r < arc_len_ + cross_len_) {
            const double d = r - arc_len_;
            st.position = {e + radius_ + d, n_end + dir * radius_, z};
            st.velocity = {v, 0, 0};
        } else {
            const double a = (r - arc_len_ - cross_len_) / radius_;
            const Vec3 c(e + spacing_ - radius_, n_end, z);
            st.position = c + Vec3(radius_ * std::sin(a), dir * radius_ * std::cos(a), 0);
            st.velocity = Vec3(v * std::cos(a), -dir * v * std::sin(a), 0);
            st.yaw_rate = turn_sign * v / radius_;
        }
        return st;
    }

private:
    const MissionPlan& p_;
    double spacing_ = 0, radius_ = 0, e_first_ = 0, n_lo_ = 0, line_len_ = 0;
    double arc_len_ = 0, cross_len_ = 0, turn_len_ = 0;
    int lines_ = 0;
};

/// Gerono lemniscate (A sin th, A/2 sin 2th) with a slow altitude swing.
/// Lobe size is the smallest that keeps the yaw rate within the limit.
class FigureEightPath {
public:
    explicit FigureEightPath(const MissionPlan& p) : p_(p) {
        // Parameter rate w gives peak speed A w sqrt 2 (at the crossing) and
        // peak yaw rate F w, where F is a shape constant of the curve. Pick
        // w for the plan speed and A as small as the turn-rate limit allows.
        double f = 0.0;
        for (int k = 0; k < 3600; ++k) {
            const double th = k * std::numbers::pi / 1800.0;
            const double vx = std::cos(th), vy = std::cos(2 * th);
            const double ax = -std::sin(th), ay = -2 * std::sin(2 * th);
            f = std::max(f, std::abs(vx * ay - vy * ax) / (vx * vx + vy * vy));
        }
        const double w_max = p.max_turn_rate_dps * std::numbers::pi / 180.0;
        a_ = std::max(20.0, f * p.speed_mps / (std::sqrt(2.0) * w_max));
        omega_ = p.speed_mps / (a_ * std::sqrt(2.0));
    }

    [[nodiscard]] double lobe() const { return a_; }

    [[nodiscard]] PathState at(double t) const {
        const double th = omega_ * t, w = omega_;
        const double a = a_, h = p_.altitude_span_m;
        // Altitude completes one swing per two laps.
        const double wz = 0.25 * w;
        PathState st;
        st.position = {p_.centre_e_m + a * std::sin(th), p_.centre_n_m + 0.5 * a * std::sin(2 * th),
                       p_.altitude_m + h * std::sin(wz * t)};
        st.velocity = {a * w * std::cos(th), a * w * std::cos(2 * th), h * wz * std::cos(wz * t)};
        const double ax = -a * w * w * std::sin(th), ay = -2 * a * w * w * std::sin(2 * th);
        const double vx = st.velocity.x(), vy = st.velocity.y();
        st.yaw_rate = (vx * ay - vy * ax) / (vx * vx + vy * vy);
        return st;
    }

private:
    const MissionPlan& p_;
    double a_ = 0, omega_ = 0;
};

} // namespace detail

/// Cross-track ground width covered by one nadir image at the plan altitude.
[[nodiscard]] inline double swath_width(const MissionPlan& p, const SensorSpec& sensor = {}) {
    return ground_sample_distance(p.altitude_m, sensor.focal_mm, sensor.pixel_pitch_um) * sensor.width;
}

namespace detail {

/// A bank line is flown up the bank and back: two passes one minimum
/// U-turn apart, expressed as a two-line lawnmower.
struct BankLine {
    MissionPlan plan;
    double swath;
    explicit BankLine(const MissionPlan& p) : plan(p) {
        swath = 2.0 * p.speed_mps / (p.max_turn_rate_dps * std::numbers::pi / 180.0);
        plan.overlap = 0.0;
        plan.area_e_m = 2.0 * swath;
    }
    [[nodiscard]] LawnmowerPath path() const { return LawnmowerPath(plan, swath); }
};

} // namespace detail

/// Flight duration implied by the plan.
[[nodiscard]] inline double plan_duration(const MissionPlan& p, const SensorSpec& sensor = {}) {
    switch (p.pattern) {
    case Pattern::lawnmower: return detail::LawnmowerPath(p, swath_width(p, sensor)).duration();
    case Pattern::bank_line: {
        const detail::BankLine b(p);
        return b.path().duration();
    }
    default: return p.duration_s;
    }
}

/// Kinematic state at mission time `t` (seconds from start).
[[nodiscard]] inline PathState path_state(const MissionPlan& p, double t, const SensorSpec& sensor = {}) {
    switch (p.pattern) {
    case Pattern::hover: {
        PathState s;
        s.position = {p.centre_e_m, p.centre_n_m, p.altitude_m};
        return s;
    }
    case Pattern::lawnmower: return detail::LawnmowerPath(p, swath_width(p, sensor)).at(t);
    case Pattern::figure_eight: return detail::FigureEightPath(p).at(t);
    case Pattern::bank_line: {
        const detail::BankLine b(p);
        return b.path().at(t);
    }
    }
    return {};
}

/// Truth trajectory sampled at the INS rate over the plan duration.
[[nodiscard]] inline std::vector<geo::TimestampedPose> generate_trajectory(const MissionPlan& p,
                                                                           const geo::EnuFrame& frame,
                                                                           const SensorSpec& sensor = {}) {
    p.validate();
    const double duration = plan_duration(p, sensor);
    const auto n = static_cast<long>(std::floor(duration * p.ins_hz + 1e-9));
    std::vector<geo::TimestampedPose> out;
    out.reserve(static_cast<std::size_t>(n) + 1);
    for (long i = 0; i <= n; ++i) {
        const double t = static_cast<double>(i) / p.ins_hz;
        const auto s = path_state(p, t, sensor);
        geo::TimestampedPose pose;
        pose.t = p.t0_gps_s + t;
        pose.position = geo::enu_to_geodetic(geo::EnuPoint::from(s.position), frame);
        pose.attitude = geo::attitude_from_frame(flight_attitude(s), pose.position, frame);
        out.push_back(pose);
    }
    return out;
}

/// Camera trigger times (mission seconds). Triggers are locked to INS
/// sample instants, the nearest one to each nominal 1/fps tick, and
/// skipped where the path is not imaging (lawnmower turns).
[[nodiscard]] inline std::vector<double> trigger_times(const MissionPlan& p, const SensorSpec& sensor = {}) {
    std::vector<double> out;
    const double duration = plan_duration(p, sensor);
    for (long k = 0;; ++k) {
        const double nominal = static_cast<double>(k) / p.fps;
        if (nominal > duration + 1e-9)
            break;
        const double t = std::round(nominal * p.ins_hz) / p.ins_hz;
        if (t > duration + 1e-9)
            break;
        if (path_state(p, t, sensor).imaging)
            out.push_back(t);
    }
    return out;
}

} // namespace adapt::flightsim
