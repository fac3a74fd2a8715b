#pragma once

#include <adapt/calib/calibrate.hpp>
#include <adapt/util/csv.hpp>

#include <nlohmann/json.hpp>

#include <fstream>
#include <istream>
#include <map>
#include <sstream>

namespace adapt::calib {

/// Reads `image_name qw qx qy qz tx ty tz` lines (world -> camera, camera
/// translation t = -R * C). Blank lines and '#' comments are skipped.
[[nodiscard]] inline std::vector<SfmPose> read_sfm_poses(std::istream& in) {
    std::vector<SfmPose> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto t = util::trim(line);
        if (t.empty() || t.front() == '#')
            continue;
        std::istringstream ls{std::string(t)};
        SfmPose p;
        double qw, qx, qy, qz, tx, ty, tz;
        if (!(ls >> p.image_name >> qw >> qx >> qy >> qz >> tx >> ty >> tz))
            throw ParseError("SfM pose line " + std::to_string(lineno) + " needs 8 fields");
        p.rotation = UnitQuaternion(qw, qx, qy, qz);
        p.position = -(p.rotation.matrix().transpose() * Vec3(tx, ty, tz));
        out.push_back(std::move(p));
    }
    return out;
}

inline void write_sfm_poses(std::ostream& out, std::span<const SfmPose> poses) {
    out << "# image_name qw qx qy qz tx ty tz\n";
    for (const auto& p : poses) {
        const Vec3 t = -(p.rotation.matrix() * p.position);
        out << p.image_name << ' ' << util::format_double(p.rotation.w()) << ' '
            << util::format_double(p.rotation.x()) << ' ' << util::format_double(p.rotation.y()) << ' '
            << util::format_double(p.rotation.z()) << ' ' << util::format_double(t.x()) << ' '
            << util::format_double(t.y()) << ' ' << util::format_double(t.z()) << '\n';
    }
}

/// Attaches capture times from an `image_name,t_gps_s` table. Every SfM
/// image must have a time.
inline void join_capture_times(std::vector<SfmPose>& poses, const util::CsvTable& times) {
    const auto cn = times.column("image_name");
    const auto ct = times.column("t_gps_s");
    std::map<std::string, double> by_name;
    for (const auto& row : times.rows())
        by_name[row[cn]] = util::parse_double(row[ct], "t_gps_s");
    for (auto& p : poses) {
        const auto it = by_name.find(p.image_name);
        if (it == by_name.end())
            throw ParseError("no capture time for image '" + p.image_name + "'");
        p.t_image = it->second;
    }
}

[[nodiscard]] inline nlohmann::json quaternion_json(const UnitQuaternion& q) {
    return {{"w", q.w()}, {"x", q.x()}, {"y", q.y()}, {"z", q.z()}};
}

[[nodiscard]] inline nlohmann::json to_json(const CalibrationResult& r) {
    nlohmann::json curve = nlohmann::json::array();
    for (const auto& s : r.offset_curve)
        curve.push_back({{"offset_s", s.offset_s}, {"residual_deg", s.residual_rad * geo::kRadToDeg}});
    return {{"similarity",
             {{"scale", r.similarity.scale},
              {"rotation", quaternion_json(r.similarity.rotation)},
              {"translation", {r.similarity.translation.x(), r.similarity.translation.y(),
                               r.similarity.translation.z()}}}},
            {"boresight", quaternion_json(r.boresight)},
            {"time_offset_s", r.time_offset_s},
            {"position_rms_m", r.position_rms_m},
            {"attitude_rms_deg", r.attitude_rms_deg},
            {"offset_curve", std::move(curve)},
            {"warnings", r.warnings}};
}

} // namespace adapt::calib
