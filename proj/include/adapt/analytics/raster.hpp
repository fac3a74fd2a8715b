#pragma once

#include <adapt/analytics/polycodec.hpp>
#include <adapt/analytics/segment.hpp>

#include <algorithm>
#include <cstdint>
#include <vector>

namespace adapt::analytics {

namespace detail {

inline std::int64_t floor_div(std::int64_t a, std::int64_t b) {
    std::int64_t q = a / b;
    if ((a % b != 0) && ((a < 0) != (b < 0)))
        --q;
    return q;
}

inline std::int64_t ceil_div(std::int64_t a, std::int64_t b) { return -floor_div(-a, b); }

} // namespace detail

/// Even-odd scanline fill of fixed-point rings: pixel (i, j) is set when its
/// centre lies inside. Edges own their lower endpoint and not their upper one,
/// and every comparison is exact integer arithmetic.
[[nodiscard]] inline std::vector<std::uint8_t> rasterize(const std::vector<std::vector<FixedPoint>>& rings, int width,
                                                         int height) {
    std::vector<std::uint8_t> toggle(static_cast<std::size_t>(width + 1) * height, 0);
    for (const auto& ring : rings) {
        const std::size_t n = ring.size();
        for (std::size_t k = 0; k < n; ++k) {
            FixedPoint p = ring[k], q = ring[(k + 1) % n];
            if (p.y == q.y)
                continue;
            if (p.y > q.y)
                std::swap(p, q);
            const std::int64_t D = q.y - p.y;
            // Rows whose centre Y = 16 j + 8 satisfies p.y <= Y < q.y.
            const std::int64_t j0 = std::max<std::int64_t>(0, detail::ceil_div(p.y - 8, 16));
            const std::int64_t j1 = std::min<std::int64_t>(height - 1, detail::ceil_div(q.y - 8, 16) - 1);
            for (std::int64_t j = j0; j <= j1; ++j) {
                const std::int64_t Y = 16 * j + 8;
                const std::int64_t N = std::int64_t{p.x} * D + (Y - p.y) * (std::int64_t{q.x} - p.x);
                // First pixel whose centre lies strictly right of the crossing.
                std::int64_t i = detail::floor_div(N - 8 * D, 16 * D) + 1;
                i = std::clamp<std::int64_t>(i, 0, width);
                toggle[static_cast<std::size_t>(j) * (width + 1) + i] ^= 1;
            }
        }
    }
    std::vector<std::uint8_t> out(static_cast<std::size_t>(width) * height, 0);
    for (int j = 0; j < height; ++j) {
        std::uint8_t parity = 0;
        for (int i = 0; i < width; ++i) {
            parity ^= toggle[static_cast<std::size_t>(j) * (width + 1) + i];
            out[static_cast<std::size_t>(j) * width + i] = parity;
        }
    }
    return out;
}

/// Brute-force reference: for every pixel centre, count the ring edges that
/// cross the horizontal ray to its left. Same ownership rule as `rasterize`,
/// none of its incremental machinery.
[[nodiscard]] inline std::vector<std::uint8_t>
rasterize_oracle(const std::vector<std::vector<FixedPoint>>& rings, int width, int height) {
    struct Edge {
        std::int64_t px, py, qx, qy;
    };
    std::vector<Edge> edges;
    for (const auto& ring : rings)
        for (std::size_t k = 0; k < ring.size(); ++k) {
            const auto a = ring[k], b = ring[(k + 1) % ring.size()];
            if (a.y == b.y)
                continue;
            if (a.y < b.y)
                edges.push_back({a.x, a.y, b.x, b.y});
            else
                edges.push_back({b.x, b.y, a.x, a.y});
        }
    std::vector<std::uint8_t> out(static_cast<std::size_t>(width) * height, 0);
    std::vector<const Edge*> active;
    for (int j = 0; j < height; ++j) {
        const std::int64_t Y = 16 * std::int64_t{j} + 8;
        active.clear();
        for (const auto& e : edges)
            if (e.py <= Y && Y < e.qy)
                active.push_back(&e);
        for (int i = 0; i < width; ++i) {
            const std::int64_t X = 16 * std::int64_t{i} + 8;
            int crossings = 0;
            for (const Edge* e : active) {
                const std::int64_t D = e->qy - e->py;
                const std::int64_t N = e->px * D + (Y - e->py) * (e->qx - e->px);
                crossings += N < X * D;
            }
            out[static_cast<std::size_t>(j) * width + i] = crossings & 1;
        }
    }
    return out;
}

/// IoU between a coverage raster and one class of a mask.
[[nodiscard]] inline double coverage_iou(const std::vector<std::uint8_t>& cover, const SegMask& mask,
                                         std::uint8_t cls) {
    std::size_t inter = 0, uni = 0;
    for (std::size_t k = 0; k < cover.size(); ++k) {
        const bool a = cover[k] != 0, b = mask.classes[k] == cls;
        inter += a && b;
        uni += a || b;
    }
    return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

/// Rings of one class, for feeding the rasterizers.
[[nodiscard]] inline std::vector<std::vector<FixedPoint>> class_rings(const std::vector<EncodedRing>& rings,
                                                                      std::uint8_t cls) {
    std::vector<std::vector<FixedPoint>> out;
    for (const auto& r : rings)
        if (r.class_id == cls)
            out.push_back(r.vertices);
    return out;
}

} // namespace adapt::analytics
