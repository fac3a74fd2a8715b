#pragma once

#include <adapt/analytics/metrics.hpp>
#include <adapt/analytics/polycodec.hpp>
#include <adapt/downlink/wire.hpp>
#include <adapt/geo/polygon.hpp>
#include <adapt/geo/pose.hpp>

#include <cmath>
#include <string>
#include <utility>
#include <vector>

namespace adapt::downlink {

[[nodiscard]] inline std::uint64_t to_ns(double gps_s) { return static_cast<std::uint64_t>(std::llround(gps_s * 1e9)); }
[[nodiscard]] inline double from_ns(std::uint64_t ns) { return static_cast<double>(ns) * 1e-9; }

// ---- telemetry (1) ----

[[nodiscard]] inline Bytes encode_telemetry(const geo::TimestampedPose& p) {
    util::ByteWriter w;
    w.f64(p.t);
    w.f64(p.position.lat_deg);
    w.f64(p.position.lon_deg);
    w.f64(p.position.alt_m);
    w.f64(p.attitude.w());
    w.f64(p.attitude.x());
    w.f64(p.attitude.y());
    w.f64(p.attitude.z());
    w.u32(p.status);
    return w.take();
}

[[nodiscard]] inline geo::TimestampedPose decode_telemetry(std::span<const std::uint8_t> b) {
    util::ByteReader r(b);
    geo::TimestampedPose p;
    p.t = r.f64();
    p.position.lat_deg = r.f64();
    p.position.lon_deg = r.f64();
    p.position.alt_m = r.f64();
    const double w = r.f64(), x = r.f64(), y = r.f64(), z = r.f64();
    p.attitude = geo::UnitQuaternion(w, x, y, z);
    p.status = r.u32();
    return p;
}

// ---- analytics (5) ----

/// Geodetic vertices travel as 1e-7 degree integers (about 1 cm).
inline constexpr double kGeoScale = 1e7;
/// Class id marking the image footprint ring inside the geo stream.
inline constexpr std::uint8_t kFootprintClass = 255;

struct AnalyticsPayload {
    std::uint64_t image_id = 0;
    double tolerance_px = 0.0;
    double pixel_iou = 1.0;          ///< worst per-class IoU of the vectorization
    std::uint32_t pixel_bytes = 0;   ///< size of the budgeted pixel-space encoding
    bool horizon_clipped = false;
    bool above_horizon = false;
    Bytes geo_stream;                ///< deflated ring stream in 1e-7 degrees (x = lon, y = lat)

    friend bool operator==(const AnalyticsPayload&, const AnalyticsPayload&) = default;
};

namespace detail {

inline std::vector<analytics::FixedPoint> quantize(const geo::GeoRing& ring) {
    std::vector<analytics::FixedPoint> out;
    const std::size_t n = ring.size() >= 2 && ring.front().lat_deg == ring.back().lat_deg &&
                                  ring.front().lon_deg == ring.back().lon_deg
                              ? ring.size() - 1
                              : ring.size();
    for (std::size_t i = 0; i < n; ++i)
        out.push_back({static_cast<std::int32_t>(std::llround(ring[i].lon_deg * kGeoScale)),
                       static_cast<std::int32_t>(std::llround(ring[i].lat_deg * kGeoScale))});
    return out;
}

inline geo::GeoRing dequantize(const std::vector<analytics::FixedPoint>& v, double alt) {
    geo::GeoRing out;
    for (const auto& p : v)
        out.push_back({p.y / kGeoScale, p.x / kGeoScale, alt});
    if (!out.empty())
        out.push_back(out.front());
    return out;
}

} // namespace detail

[[nodiscard]] inline Bytes encode_geo_set(const geo::GeoPolygonSet& set) {
    std::vector<analytics::EncodedRing> rings;
    for (const auto& p : set.class_polygons) {
        rings.push_back({p.class_id, false, detail::quantize(p.outer)});
        for (const auto& h : p.holes)
            rings.push_back({p.class_id, true, detail::quantize(h)});
    }
    if (!set.footprint.empty())
        rings.push_back({kFootprintClass, false, detail::quantize(set.footprint)});
    return analytics::encode_rings(rings);
}

/// Inverse of encode_geo_set; vertices come back at `ground_alt_m`.
[[nodiscard]] inline geo::GeoPolygonSet decode_geo_set(std::span<const std::uint8_t> stream, std::uint64_t image_id,
                                                       double ground_alt_m = 0.0) {
    geo::GeoPolygonSet set;
    set.image_id = image_id;
    for (const auto& r : analytics::decode_rings(stream)) {
        if (r.class_id == kFootprintClass) {
            set.footprint = detail::dequantize(r.vertices, ground_alt_m);
        } else if (r.hole) {
            if (set.class_polygons.empty())
                throw ParseError("geo stream starts with a hole");
            set.class_polygons.back().holes.push_back(detail::dequantize(r.vertices, ground_alt_m));
        } else {
            set.class_polygons.push_back({r.class_id, detail::dequantize(r.vertices, ground_alt_m), {}});
        }
    }
    return set;
}

[[nodiscard]] inline Bytes encode_analytics(const AnalyticsPayload& a) {
    util::ByteWriter w;
    w.u64(a.image_id);
    w.f64(a.tolerance_px);
    w.f64(a.pixel_iou);
    w.u32(a.pixel_bytes);
    w.u8(static_cast<std::uint8_t>((a.horizon_clipped ? 1 : 0) | (a.above_horizon ? 2 : 0)));
    w.blob(a.geo_stream);
    return w.take();
}

[[nodiscard]] inline AnalyticsPayload decode_analytics(std::span<const std::uint8_t> b) {
    util::ByteReader r(b);
    AnalyticsPayload a;
    a.image_id = r.u64();
    a.tolerance_px = r.f64();
    a.pixel_iou = r.f64();
    a.pixel_bytes = r.u32();
    const auto flags = r.u8();
    a.horizon_clipped = flags & 1;
    a.above_horizon = flags & 2;
    a.geo_stream = r.blob();
    return a;
}

// ---- thumbnail (2) ----

struct ThumbnailPayload {
    std::uint64_t image_id = 0;
    std::uint16_t width = 0;
    std::uint16_t height = 0;
    Bytes jpeg;
    friend bool operator==(const ThumbnailPayload&, const ThumbnailPayload&) = default;
};

[[nodiscard]] inline Bytes encode_thumbnail(const ThumbnailPayload& t) {
    util::ByteWriter w;
    w.u64(t.image_id);
    w.u16(t.width);
    w.u16(t.height);
    w.blob(t.jpeg);
    return w.take();
}

[[nodiscard]] inline ThumbnailPayload decode_thumbnail(std::span<const std::uint8_t> b) {
    util::ByteReader r(b);
    ThumbnailPayload t;
    t.image_id = r.u64();
    t.width = r.u16();
    t.height = r.u16();
    t.jpeg = r.blob();
    return t;
}

// ---- histogram (3) ----

struct HistogramPayload {
    std::uint64_t image_id = 0;
    analytics::Histogram bins{};
    friend bool operator==(const HistogramPayload&, const HistogramPayload&) = default;
};

[[nodiscard]] inline Bytes encode_histogram(const HistogramPayload& h) {
    util::ByteWriter w;
    w.u64(h.image_id);
    for (auto b : h.bins)
        w.u32(b);
    return w.take();
}

[[nodiscard]] inline HistogramPayload decode_histogram(std::span<const std::uint8_t> b) {
    util::ByteReader r(b);
    HistogramPayload h;
    h.image_id = r.u64();
    for (auto& v : h.bins)
        v = r.u32();
    return h;
}

// ---- sharpness (4) ----

struct SharpnessPayload {
    std::uint64_t image_id = 0;
    analytics::SharpnessReport report;
};

[[nodiscard]] inline Bytes encode_sharpness(const SharpnessPayload& s) {
    util::ByteWriter w;
    w.u64(s.image_id);
    w.u32(s.report.exposure_us);
    w.u16(static_cast<std::uint16_t>(s.report.tile));
    w.u16(static_cast<std::uint16_t>(s.report.tiles_x));
    w.u16(static_cast<std::uint16_t>(s.report.tiles_y));
    w.f64(s.report.global_score);
    for (double v : s.report.tile_scores)
        w.f64(v);
    return w.take();
}

[[nodiscard]] inline SharpnessPayload decode_sharpness(std::span<const std::uint8_t> b) {
    util::ByteReader r(b);
    SharpnessPayload s;
    s.image_id = r.u64();
    s.report.exposure_us = r.u32();
    s.report.tile = r.u16();
    s.report.tiles_x = r.u16();
    s.report.tiles_y = r.u16();
    s.report.global_score = r.f64();
    s.report.tile_scores.resize(static_cast<std::size_t>(s.report.tiles_x) * s.report.tiles_y);
    for (auto& v : s.report.tile_scores)
        v = r.f64();
    return s;
}

// ---- diagnostics (6) ----

using Diagnostics = std::vector<std::pair<std::string, std::string>>;

[[nodiscard]] inline Bytes encode_diagnostics(const Diagnostics& d) {
    util::ByteWriter w;
    w.varint(d.size());
    for (const auto& [k, v] : d) {
        w.str(k);
        w.str(v);
    }
    return w.take();
}

[[nodiscard]] inline Diagnostics decode_diagnostics(std::span<const std::uint8_t> b) {
    util::ByteReader r(b);
    const auto n = r.varint();
    if (n > b.size())
        throw ParseError("diagnostics entry count is implausible");
    Diagnostics d;
    for (std::uint64_t i = 0; i < n; ++i) {
        auto k = r.str();
        d.emplace_back(std::move(k), r.str());
    }
    return d;
}

[[nodiscard]] inline const std::string* find_key(const Diagnostics& d, std::string_view key) {
    for (const auto& [k, v] : d)
        if (k == key)
            return &v;
    return nullptr;
}

// ---- command (7) and acknowledgement (8) ----

enum class CommandKind : std::uint8_t { set_max_exposure_us = 1 };

struct Command {
    std::uint32_t command_id = 0;
    CommandKind kind = CommandKind::set_max_exposure_us;
    std::uint32_t value = 0;
    friend bool operator==(const Command&, const Command&) = default;
};

[[nodiscard]] inline Bytes encode_command(const Command& c) {
    util::ByteWriter w;
    w.u32(c.command_id);
    w.u8(static_cast<std::uint8_t>(c.kind));
    w.u32(c.value);
    return w.take();
}

[[nodiscard]] inline Command decode_command(std::span<const std::uint8_t> b) {
    util::ByteReader r(b);
    Command c;
    c.command_id = r.u32();
    const auto kind = r.u8();
    if (kind != 1)
        throw ParseError("unknown command kind " + std::to_string(kind));
    c.kind = static_cast<CommandKind>(kind);
    c.value = r.u32();
    return c;
}

enum class AckStatus : std::uint8_t { ok = 0, rejected = 1 };

/// Type 8 acknowledges both directions' reliable traffic: the station acks
/// analytics by sequence number, the payload acks commands by command id.
struct Ack {
    MsgType acked_type = MsgType::analytics;
    std::uint32_t id = 0;
    AckStatus status = AckStatus::ok;
    std::uint32_t value = 0; ///< applied value for commands
    friend bool operator==(const Ack&, const Ack&) = default;
};

[[nodiscard]] inline Bytes encode_ack(const Ack& a) {
    util::ByteWriter w;
    w.u8(static_cast<std::uint8_t>(a.acked_type));
    w.u32(a.id);
    w.u8(static_cast<std::uint8_t>(a.status));
    w.u32(a.value);
    return w.take();
}

[[nodiscard]] inline Ack decode_ack(std::span<const std::uint8_t> b) {
    util::ByteReader r(b);
    Ack a;
    const auto t = r.u8();
    if (!valid_type(t))
        throw ParseError("ack for unknown type");
    a.acked_type = static_cast<MsgType>(t);
    a.id = r.u32();
    a.status = static_cast<AckStatus>(r.u8());
    a.value = r.u32();
    return a;
}

} // namespace adapt::downlink
