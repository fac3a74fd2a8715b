#pragma once

#include <adapt/geo/polygon.hpp>
#include <adapt/geo/pose.hpp>
#include <adapt/util/csv.hpp>

#include <nlohmann/json.hpp>

#include <cstdio>
#include <fstream>
#include <ostream>

namespace adapt::geo {

/// INS log columns, in file order.
inline constexpr const char* kInsCsvHeader = "t_gps_s,lat_deg,lon_deg,alt_m,qw,qx,qy,qz,status_hex";

inline void write_ins_csv(std::ostream& out, std::span<const TimestampedPose> poses) {
    out << kInsCsvHeader << '\n';
    char status[16];
    for (const auto& p : poses) {
        std::snprintf(status, sizeof status, "%x", p.status);
        out << util::format_double(p.t) << ',' << util::format_double(p.position.lat_deg) << ','
            << util::format_double(p.position.lon_deg) << ',' << util::format_double(p.position.alt_m) << ','
            << util::format_double(p.attitude.w()) << ',' << util::format_double(p.attitude.x()) << ','
            << util::format_double(p.attitude.y()) << ',' << util::format_double(p.attitude.z()) << ',' << status
            << '\n';
    }
}

[[nodiscard]] inline std::vector<TimestampedPose> read_ins_csv(std::istream& in) {
    const auto table = util::CsvTable::parse(in);
    const std::size_t ct = table.column("t_gps_s"), clat = table.column("lat_deg"), clon = table.column("lon_deg"),
                      calt = table.column("alt_m"), cw = table.column("qw"), cx = table.column("qx"),
                      cy = table.column("qy"), cz = table.column("qz"), cs = table.column("status_hex");
    std::vector<TimestampedPose> out;
    out.reserve(table.rows().size());
    for (const auto& row : table.rows()) {
        TimestampedPose p;
        p.t = util::parse_double(row[ct], "t_gps_s");
        p.position = {util::parse_double(row[clat], "lat_deg"), util::parse_double(row[clon], "lon_deg"),
                      util::parse_double(row[calt], "alt_m")};
        validate(p.position);
        p.attitude = UnitQuaternion(util::parse_double(row[cw], "qw"), util::parse_double(row[cx], "qx"),
                                    util::parse_double(row[cy], "qy"), util::parse_double(row[cz], "qz"));
        std::string_view hex = row[cs];
        if (hex.starts_with("0x") || hex.starts_with("0X"))
            hex.remove_prefix(2);
        unsigned value = 0;
        const auto [ptr, ec] = std::from_chars(hex.data(), hex.data() + hex.size(), value, 16);
        if (ec != std::errc() || ptr != hex.data() + hex.size() || hex.empty())
            throw ParseError("cannot parse status_hex '" + row[cs] + "'");
        p.status = value;
        out.push_back(p);
    }
    return out;
}

[[nodiscard]] inline Trajectory load_ins_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open " + path);
    return Trajectory(read_ins_csv(in));
}

namespace detail {

inline nlohmann::json ring_coordinates(const GeoRing& ring) {
    auto arr = nlohmann::json::array();
    for (const auto& p : ring)
        arr.push_back({p.lon_deg, p.lat_deg});
    return arr;
}

} // namespace detail

/// One GeoJSON Feature per class region, with `class_id` and `image_id`.
[[nodiscard]] inline nlohmann::json to_geojson_features(const GeoPolygonSet& set) {
    auto features = nlohmann::json::array();
    for (const auto& poly : set.class_polygons) {
        auto rings = nlohmann::json::array();
        rings.push_back(detail::ring_coordinates(poly.outer));
        for (const auto& h : poly.holes)
            rings.push_back(detail::ring_coordinates(h));
        features.push_back({{"type", "Feature"},
                            {"geometry", {{"type", "Polygon"}, {"coordinates", std::move(rings)}}},
                            {"properties", {{"class_id", poly.class_id}, {"image_id", set.image_id}}}});
    }
    return features;
}

[[nodiscard]] inline nlohmann::json to_geojson(std::span<const GeoPolygonSet> sets) {
    auto features = nlohmann::json::array();
    for (const auto& s : sets)
        for (auto& f : to_geojson_features(s))
            features.push_back(std::move(f));
    return {{"type", "FeatureCollection"}, {"features", std::move(features)}};
}

} // namespace adapt::geo
