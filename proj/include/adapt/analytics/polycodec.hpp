#pragma once

#include <adapt/error.hpp>
#include <adapt/geo/polygon.hpp>
#include <adapt/util/bytes.hpp>

#include <zlib.h>

#include <cmath>
#include <cstdint>
#include <vector>

namespace adapt::analytics {

/// Fixed-point vertex in 1/16 pixel.
struct FixedPoint {
    std::int32_t x = 0;
    std::int32_t y = 0;
    friend bool operator==(FixedPoint, FixedPoint) = default;
};

inline constexpr double kFixedScale = 16.0;

/// One ring as carried on the wire (open: no repeated closing vertex).
struct EncodedRing {
    std::uint8_t class_id = 0;
    bool hole = false;
    std::vector<FixedPoint> vertices;
    friend bool operator==(const EncodedRing&, const EncodedRing&) = default;
};

/// Canonical polygon stream: per ring a class byte, varint(count << 1 | hole),
/// the first vertex as two big-endian i32, then zig-zag varint deltas. The
/// concatenation is deflated at level 9.
[[nodiscard]] inline util::Bytes encode_rings(const std::vector<EncodedRing>& rings) {
    util::ByteWriter w;
    for (const auto& r : rings) {
        if (r.vertices.empty())
            throw ContractError("cannot encode an empty ring");
        w.u8(r.class_id);
        w.varint((static_cast<std::uint64_t>(r.vertices.size()) << 1) | (r.hole ? 1u : 0u));
        w.i32(r.vertices[0].x);
        w.i32(r.vertices[0].y);
        for (std::size_t i = 1; i < r.vertices.size(); ++i) {
            w.zigzag(std::int64_t{r.vertices[i].x} - r.vertices[i - 1].x);
            w.zigzag(std::int64_t{r.vertices[i].y} - r.vertices[i - 1].y);
        }
    }
    const auto& raw = w.data();
    uLongf out_len = compressBound(static_cast<uLong>(raw.size()));
    util::Bytes out(out_len);
    if (compress2(out.data(), &out_len, raw.data(), static_cast<uLong>(raw.size()), 9) != Z_OK)
        throw Error("deflate failed");
    out.resize(out_len);
    return out;
}

[[nodiscard]] inline std::vector<EncodedRing> decode_rings(std::span<const std::uint8_t> data) {
    z_stream zs{};
    if (inflateInit(&zs) != Z_OK)
        throw Error("inflate init failed");
    util::Bytes raw;
    std::uint8_t chunk[16384];
    zs.next_in = const_cast<Bytef*>(data.data());
    zs.avail_in = static_cast<uInt>(data.size());
    int rc = Z_OK;
    while (rc != Z_STREAM_END) {
        zs.next_out = chunk;
        zs.avail_out = sizeof(chunk);
        rc = inflate(&zs, Z_NO_FLUSH);
        if (rc != Z_OK && rc != Z_STREAM_END) {
            inflateEnd(&zs);
            throw ParseError("polygon stream is not valid deflate data");
        }
        raw.insert(raw.end(), chunk, chunk + (sizeof(chunk) - zs.avail_out));
        if (rc == Z_OK && zs.avail_in == 0 && zs.avail_out != 0) {
            inflateEnd(&zs);
            throw ParseError("polygon stream truncated");
        }
    }
    inflateEnd(&zs);

    util::ByteReader r(raw);
    std::vector<EncodedRing> rings;
    while (!r.done()) {
        EncodedRing ring;
        ring.class_id = r.u8();
        const auto head = r.varint();
        ring.hole = head & 1;
        const auto count = head >> 1;
        if (count == 0 || count > r.remaining())
            throw ParseError("polygon ring has an impossible vertex count");
        ring.vertices.resize(count);
        ring.vertices[0] = {r.i32(), r.i32()};
        for (std::size_t i = 1; i < count; ++i) {
            const auto dx = r.zigzag(), dy = r.zigzag();
            ring.vertices[i] = {static_cast<std::int32_t>(ring.vertices[i - 1].x + dx),
                                static_cast<std::int32_t>(ring.vertices[i - 1].y + dy)};
        }
        rings.push_back(std::move(ring));
    }
    return rings;
}

[[nodiscard]] inline geo::PixelRing to_pixel_ring(const std::vector<FixedPoint>& v) {
    geo::PixelRing out;
    out.reserve(v.size() + 1);
    for (const auto& p : v)
        out.push_back({p.x / kFixedScale, p.y / kFixedScale});
    if (!v.empty())
        out.push_back(out.front());
    return out;
}

/// Rebuilds polygons from a decoded stream: each hole belongs to the most
/// recent outer ring.
[[nodiscard]] inline std::vector<geo::PixelPolygon> to_pixel_polygons(const std::vector<EncodedRing>& rings) {
    std::vector<geo::PixelPolygon> out;
    for (const auto& r : rings) {
        if (r.hole) {
            if (out.empty())
                throw ParseError("polygon stream starts with a hole");
            out.back().holes.push_back(to_pixel_ring(r.vertices));
        } else {
            out.push_back({r.class_id, to_pixel_ring(r.vertices), {}});
        }
    }
    return out;
}

/// Scales pixel polygons from mask resolution to source-image resolution.
[[nodiscard]] inline std::vector<geo::PixelPolygon> scale_polygons(std::vector<geo::PixelPolygon> polys,
                                                                   double factor) {
    for (auto& p : polys) {
        for (auto& v : p.outer) {
            v.x *= factor;
            v.y *= factor;
        }
        for (auto& h : p.holes)
            for (auto& v : h) {
                v.x *= factor;
                v.y *= factor;
            }
    }
    return polys;
}

} // namespace adapt::analytics
