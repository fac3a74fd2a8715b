#pragma once

#include <adapt/analytics/segment.hpp>
#include <adapt/geo/polygon.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <unordered_map>
#include <vector>

namespace adapt::analytics {

/// Vertex in doubled pixel units: marching squares on pixel centres only ever
/// produces half-pixel coordinates, so contours stay exact integers.
struct GridPoint {
    std::int32_t x = 0;
    std::int32_t y = 0;
    friend bool operator==(GridPoint, GridPoint) = default;
};

/// Open ring (no repeated closing vertex) in doubled pixel units.
using GridRing = std::vector<GridPoint>;

/// Twice the shoelace area, in doubled units (positive for outer boundaries).
[[nodiscard]] inline std::int64_t twice_area(const GridRing& r) {
    std::int64_t a = 0;
    for (std::size_t i = 0; i < r.size(); ++i) {
        const auto& p = r[i];
        const auto& q = r[(i + 1) % r.size()];
        a += std::int64_t{p.x} * q.y - std::int64_t{q.x} * p.y;
    }
    return a;
}

/// Boundaries of one class, traced with marching squares on pixel centres.
/// Pixels outside the mask count as not-the-class, so every ring closes.
/// Saddle cells keep diagonal neighbours apart (4-connected regions).
/// Outer rings have positive area, holes negative.
[[nodiscard]] inline std::vector<GridRing> trace_contours(const SegMask& mask, std::uint8_t cls) {
    const int w = mask.width, h = mask.height;
    const auto fg = [&](int i, int j) { return i >= 0 && j >= 0 && i < w && j < h && mask.at(i, j) == cls; };
    const auto key = [](GridPoint p) {
        return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(p.y)) << 32) | static_cast<std::uint32_t>(p.x);
    };
    std::unordered_map<std::uint64_t, GridPoint> next;

    const auto emit = [&](GridPoint p, GridPoint q, GridPoint corner) {
        const std::int64_t cross =
            std::int64_t{q.x - p.x} * (corner.y - p.y) - std::int64_t{q.y - p.y} * (corner.x - p.x);
        if (cross > 0)
            next.emplace(key(p), q);
        else
            next.emplace(key(q), p);
    };

    for (int j = -1; j < h; ++j)
        for (int i = -1; i < w; ++i) {
            const bool a = fg(i, j), b = fg(i + 1, j), c = fg(i + 1, j + 1), d = fg(i, j + 1);
            const int code = a | (b << 1) | (c << 2) | (d << 3);
            if (code == 0 || code == 15)
                continue;
            const GridPoint top{2 * i + 2, 2 * j + 1}, right{2 * i + 3, 2 * j + 2};
            const GridPoint bottom{2 * i + 2, 2 * j + 3}, left{2 * i + 1, 2 * j + 2};
            const GridPoint ca{2 * i + 1, 2 * j + 1}, cb{2 * i + 3, 2 * j + 1};
            const GridPoint cc{2 * i + 3, 2 * j + 3}, cd{2 * i + 1, 2 * j + 3};
            if (code == 5) {
                emit(top, left, ca);
                emit(right, bottom, cc);
                continue;
            }
            if (code == 10) {
                emit(top, right, cb);
                emit(bottom, left, cd);
                continue;
            }
            GridPoint ends[2];
            int n = 0;
            if (a != b)
                ends[n++] = top;
            if (b != c)
                ends[n++] = right;
            if (c != d)
                ends[n++] = bottom;
            if (d != a)
                ends[n++] = left;
            const GridPoint corner = a ? ca : b ? cb : c ? cc : cd;
            emit(ends[0], ends[1], corner);
        }

    std::vector<GridRing> rings;
    // Deterministic start: scan the map keys in sorted order.
    std::vector<std::uint64_t> starts;
    starts.reserve(next.size());
    for (const auto& [k, _] : next)
        starts.push_back(k);
    std::sort(starts.begin(), starts.end());
    for (auto k : starts) {
        auto it = next.find(k);
        if (it == next.end())
            continue;
        GridRing ring;
        GridPoint p{static_cast<std::int32_t>(static_cast<std::uint32_t>(k)), static_cast<std::int32_t>(k >> 32)};
        while (it != next.end()) {
            ring.push_back(p);
            p = it->second;
            next.erase(it);
            it = next.find(key(p));
        }
        rings.push_back(std::move(ring));
    }
    return rings;
}

/// Drops vertices lying on the straight line through their neighbours.
[[nodiscard]] inline GridRing remove_collinear(const GridRing& r) {
    GridRing out = r;
    bool changed = true;
    while (changed && out.size() > 3) {
        changed = false;
        GridRing kept;
        kept.reserve(out.size());
        const std::size_t n = out.size();
        for (std::size_t i = 0; i < n; ++i) {
            const auto& p = kept.empty() ? out[(i + n - 1) % n] : kept.back();
            const auto& q = out[i];
            const auto& s = out[(i + 1) % n];
            const std::int64_t cross = std::int64_t{q.x - p.x} * (s.y - q.y) - std::int64_t{q.y - p.y} * (s.x - q.x);
            const std::int64_t dot = std::int64_t{q.x - p.x} * (s.x - q.x) + std::int64_t{q.y - p.y} * (s.y - q.y);
            if (cross == 0 && dot > 0) {
                changed = true;
                continue;
            }
            kept.push_back(q);
        }
        out = std::move(kept);
    }
    return out;
}

/// Where a contour cuts across an image corner, put the corner back so that
/// regions touching the frame edge end exactly on it.
[[nodiscard]] inline GridRing snap_image_corners(const GridRing& r, int width, int height) {
    const std::int32_t W = 2 * width, H = 2 * height;
    GridRing out;
    out.reserve(r.size() + 4);
    const std::size_t n = r.size();
    for (std::size_t i = 0; i < n; ++i) {
        const auto& p = r[i];
        const auto& q = r[(i + 1) % n];
        out.push_back(p);
        for (const GridPoint corner : {GridPoint{0, 0}, GridPoint{W, 0}, GridPoint{W, H}, GridPoint{0, H}}) {
            const bool p_adj = (p.x == corner.x && std::abs(p.y - corner.y) == 1) ||
                               (p.y == corner.y && std::abs(p.x - corner.x) == 1);
            const bool q_adj = (q.x == corner.x && std::abs(q.y - corner.y) == 1) ||
                               (q.y == corner.y && std::abs(q.x - corner.x) == 1);
            if (p_adj && q_adj && !(p.x == q.x || p.y == q.y))
                out.push_back(corner);
        }
    }
    return out;
}

namespace detail {

inline double segment_distance(GridPoint p, GridPoint a, GridPoint b) {
    const double dx = b.x - a.x, dy = b.y - a.y;
    const double len2 = dx * dx + dy * dy;
    double t = len2 > 0 ? ((p.x - a.x) * dx + (p.y - a.y) * dy) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    return std::hypot(p.x - (a.x + t * dx), p.y - (a.y + t * dy));
}

inline int orient(GridPoint a, GridPoint b, GridPoint c) {
    const std::int64_t v = std::int64_t{b.x - a.x} * (c.y - a.y) - std::int64_t{b.y - a.y} * (c.x - a.x);
    return (v > 0) - (v < 0);
}

inline bool on_segment(GridPoint a, GridPoint b, GridPoint p) {
    return std::min(a.x, b.x) <= p.x && p.x <= std::max(a.x, b.x) && std::min(a.y, b.y) <= p.y &&
           p.y <= std::max(a.y, b.y);
}

inline bool segments_touch(GridPoint a, GridPoint b, GridPoint c, GridPoint d) {
    const int o1 = orient(a, b, c), o2 = orient(a, b, d), o3 = orient(c, d, a), o4 = orient(c, d, b);
    if (o1 != o2 && o3 != o4)
        return true;
    return (o1 == 0 && on_segment(a, b, c)) || (o2 == 0 && on_segment(a, b, d)) || (o3 == 0 && on_segment(c, d, a)) ||
           (o4 == 0 && on_segment(c, d, b));
}

} // namespace detail

/// Douglas-Peucker on a closed ring, anchored at vertex 0 and the vertex
/// farthest from it. `tolerance_px` is in pixels.
[[nodiscard]] inline GridRing simplify_ring(const GridRing& r, double tolerance_px) {
    const std::size_t n = r.size();
    if (n < 4 || tolerance_px <= 0)
        return r;
    const double tol = 2.0 * tolerance_px; // doubled units
    std::size_t far = 0;
    double best = -1;
    for (std::size_t i = 1; i < n; ++i) {
        const double d = std::hypot(r[i].x - r[0].x, r[i].y - r[0].y);
        if (d > best) {
            best = d;
            far = i;
        }
    }
    std::vector<char> keep(n, 0);
    keep[0] = keep[far] = 1;
    const auto at = [&](std::size_t i) { return r[i % n]; };
    std::vector<std::pair<std::size_t, std::size_t>> stack{{0, far}, {far, n}};
    while (!stack.empty()) {
        const auto [lo, hi] = stack.back();
        stack.pop_back();
        double dmax = -1;
        std::size_t imax = lo;
        for (std::size_t i = lo + 1; i < hi; ++i) {
            const double d = detail::segment_distance(at(i), at(lo), at(hi));
            if (d > dmax) {
                dmax = d;
                imax = i;
            }
        }
        if (dmax > tol) {
            keep[imax % n] = 1;
            stack.emplace_back(lo, imax);
            stack.emplace_back(imax, hi);
        }
    }
    GridRing out;
    for (std::size_t i = 0; i < n; ++i)
        if (keep[i])
            out.push_back(r[i]);
    return out;
}

/// True when no two non-adjacent edges of the ring meet and no vertex repeats.
[[nodiscard]] inline bool is_simple(const GridRing& r) {
    const std::size_t n = r.size();
    if (n < 3)
        return false;
    std::int32_t minx = r[0].x, miny = r[0].y, maxx = minx, maxy = miny;
    for (const auto& p : r) {
        minx = std::min(minx, p.x);
        maxx = std::max(maxx, p.x);
        miny = std::min(miny, p.y);
        maxy = std::max(maxy, p.y);
    }
    constexpr std::int32_t cell = 32;
    const std::int64_t gw = (maxx - minx) / cell + 1, gh = (maxy - miny) / cell + 1;
    std::unordered_map<std::int64_t, std::vector<std::uint32_t>> grid;
    for (std::uint32_t e = 0; e < n; ++e) {
        const auto& a = r[e];
        const auto& b = r[(e + 1) % n];
        for (std::int64_t gy = (std::min(a.y, b.y) - miny) / cell; gy <= (std::max(a.y, b.y) - miny) / cell; ++gy)
            for (std::int64_t gx = (std::min(a.x, b.x) - minx) / cell; gx <= (std::max(a.x, b.x) - minx) / cell;
                 ++gx)
                grid[gy * gw + gx].push_back(e);
    }
    (void)gh;
    for (const auto& [_, edges] : grid)
        for (std::size_t s = 0; s < edges.size(); ++s)
            for (std::size_t t = s + 1; t < edges.size(); ++t) {
                const std::uint32_t e1 = edges[s], e2 = edges[t];
                const auto a = r[e1], b = r[(e1 + 1) % n], c = r[e2], d = r[(e2 + 1) % n];
                const bool adjacent = (e1 + 1) % n == e2 || (e2 + 1) % n == e1;
                if (!adjacent) {
                    if (detail::segments_touch(a, b, c, d))
                        return false;
                } else if (n > 3) {
                    // Adjacent edges may only share their common vertex.
                    const GridPoint shared = (e1 + 1) % n == e2 ? b : a;
                    const GridPoint u = (e1 + 1) % n == e2 ? a : b;
                    const GridPoint v = (e1 + 1) % n == e2 ? d : c;
                    if (detail::orient(u, shared, v) == 0 &&
                        std::int64_t{u.x - shared.x} * (v.x - shared.x) + std::int64_t{u.y - shared.y} * (v.y - shared.y) >
                            0)
                        return false;
                }
            }
    return true;
}

/// Rotates a ring so it starts at its smallest (y, x) vertex.
[[nodiscard]] inline GridRing canonical_start(GridRing r) {
    const auto it = std::min_element(r.begin(), r.end(),
                                     [](GridPoint a, GridPoint b) { return a.y != b.y ? a.y < b.y : a.x < b.x; });
    std::rotate(r.begin(), it, r.end());
    return r;
}

/// Even-odd point-in-ring test in doubled units.
[[nodiscard]] inline bool ring_contains(const GridRing& r, double x, double y) {
    bool inside = false;
    for (std::size_t i = 0, j = r.size() - 1; i < r.size(); j = i++) {
        const auto& a = r[i];
        const auto& b = r[j];
        if ((a.y > y) != (b.y > y) && x < (b.x - a.x) * (y - a.y) / double(b.y - a.y) + a.x)
            inside = !inside;
    }
    return inside;
}

/// An outer boundary with the holes it encloses, all in doubled units.
struct GridPolygon {
    std::uint8_t class_id = 0;
    GridRing outer;
    std::vector<GridRing> holes;
};

/// Groups traced rings into polygons: each hole goes to the smallest outer
/// ring that contains it.
[[nodiscard]] inline std::vector<GridPolygon> group_rings(std::vector<GridRing> rings, std::uint8_t cls) {
    struct Box {
        std::int32_t x0, y0, x1, y1;
    };
    const auto box_of = [](const GridRing& r) {
        Box b{r[0].x, r[0].y, r[0].x, r[0].y};
        for (const auto& p : r) {
            b.x0 = std::min(b.x0, p.x);
            b.y0 = std::min(b.y0, p.y);
            b.x1 = std::max(b.x1, p.x);
            b.y1 = std::max(b.y1, p.y);
        }
        return b;
    };
    std::vector<GridPolygon> polys;
    std::vector<Box> boxes;
    std::vector<std::int64_t> areas;
    std::vector<GridRing> holes;
    for (auto& r : rings) {
        if (r.size() < 3)
            continue;
        const auto a = twice_area(r);
        if (a > 0) {
            boxes.push_back(box_of(r));
            areas.push_back(a);
            polys.push_back({cls, std::move(r), {}});
        } else if (a < 0) {
            holes.push_back(std::move(r));
        }
    }
    for (auto& hr : holes) {
        const Box hb = box_of(hr);
        // A hole vertex is an edge midpoint of the hole boundary; test a point
        // nudged off it so it is never on another ring.
        const double px = hr[0].x + 0.25, py = hr[0].y + 0.125;
        std::size_t best = polys.size();
        for (std::size_t i = 0; i < polys.size(); ++i) {
            const Box& b = boxes[i];
            if (hb.x0 < b.x0 || hb.y0 < b.y0 || hb.x1 > b.x1 || hb.y1 > b.y1)
                continue;
            if ((best == polys.size() || areas[i] < areas[best]) && ring_contains(polys[i].outer, px, py))
                best = i;
        }
        if (best < polys.size())
            polys[best].holes.push_back(std::move(hr));
    }
    return polys;
}

[[nodiscard]] inline geo::PixelRing to_pixel_ring(const GridRing& r) {
    geo::PixelRing out;
    out.reserve(r.size() + 1);
    for (const auto& p : r)
        out.push_back({p.x * 0.5, p.y * 0.5});
    if (!r.empty())
        out.push_back(out.front());
    return out;
}

} // namespace adapt::analytics
