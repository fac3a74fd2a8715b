#pragma once

#include <adapt/analytics/contour.hpp>
#include <adapt/analytics/polycodec.hpp>
#include <adapt/analytics/raster.hpp>

#include <algorithm>
#include <string>
#include <vector>

namespace adapt::analytics {

inline constexpr double kInitialTolerancePx = 0.5;
inline constexpr double kMaxTolerancePx = 64.0;
inline constexpr std::size_t kMinBudgetBytes = 256;

struct ClassIoU {
    std::uint8_t class_id = 0;
    double iou = 1.0;
};

/// Vectorized mask. Coordinates are in mask pixels; multiply by `downsample`
/// (see scale_polygons) to reach source-image pixels.
struct VectorizeResult {
    int width = 0;
    int height = 0;
    int downsample = 1;
    double tolerance_px = 0.0;
    util::Bytes encoded;
    std::vector<EncodedRing> rings;
    std::vector<geo::PixelPolygon> polygons;
    std::vector<ClassIoU> iou;

    [[nodiscard]] std::size_t encoded_size() const { return encoded.size(); }
    [[nodiscard]] double iou_of(std::uint8_t cls) const {
        for (const auto& c : iou)
            if (c.class_id == cls)
                return c.iou;
        return 1.0;
    }
    [[nodiscard]] double min_iou() const {
        double m = 1.0;
        for (const auto& c : iou)
            m = std::min(m, c.iou);
        return m;
    }
};

/// The budget could not be met even at the largest tolerance. Carries the
/// smallest encoding that was reached.
class BudgetError : public Error {
public:
    BudgetError(const std::string& what, VectorizeResult best) : Error(what), best_(std::move(best)) {}
    [[nodiscard]] const VectorizeResult& best_effort() const { return best_; }

private:
    VectorizeResult best_;
};

/// Traced, tidied boundaries of every foreground class, reusable across
/// tolerances.
struct ContourSet {
    int width = 0;
    int height = 0;
    int downsample = 1;
    std::vector<std::uint8_t> classes;
    std::vector<GridPolygon> polygons;
    std::size_t mask_pixels = 0;
};

/// Classes worth vectorizing: everything present except background and unlabeled.
[[nodiscard]] inline std::vector<std::uint8_t> foreground_classes(const SegMask& mask) {
    std::vector<bool> seen(256, false);
    for (auto c : mask.classes)
        seen[c] = true;
    std::vector<std::uint8_t> out;
    for (int c = 1; c < 255; ++c)
        if (seen[c])
            out.push_back(static_cast<std::uint8_t>(c));
    return out;
}

[[nodiscard]] inline ContourSet extract_contours(const SegMask& mask) {
    ContourSet set;
    set.width = mask.width;
    set.height = mask.height;
    set.downsample = mask.downsample;
    set.classes = foreground_classes(mask);
    set.mask_pixels = mask.pixel_count();
    for (auto cls : set.classes) {
        auto rings = trace_contours(mask, cls);
        for (auto& r : rings)
            r = canonical_start(remove_collinear(snap_image_corners(remove_collinear(r), mask.width, mask.height)));
        auto polys = group_rings(std::move(rings), cls);
        for (auto& p : polys)
            set.polygons.push_back(std::move(p));
    }
    return set;
}

namespace detail {

/// Simplifies a ring, backing off the tolerance until the result stays
/// simple and keeps its orientation. Returns an empty ring when the ring
/// collapses entirely.
inline GridRing simplify_checked(const GridRing& ring, double tolerance_px) {
    const bool outer = twice_area(ring) > 0;
    for (double t = tolerance_px; t >= kInitialTolerancePx / 2; t /= 2) {
        GridRing s = simplify_ring(ring, t);
        if (s.size() < 3)
            return {};
        const auto a = twice_area(s);
        if (a == 0 || (a > 0) != outer)
            return {};
        if (is_simple(s))
            return s;
    }
    return ring;
}

inline std::vector<FixedPoint> to_fixed(const GridRing& r) {
    std::vector<FixedPoint> out;
    out.reserve(r.size());
    for (const auto& p : r)
        out.push_back({p.x * 8, p.y * 8});
    return out;
}

inline bool start_less(const GridRing& a, const GridRing& b) {
    return a[0].y != b[0].y ? a[0].y < b[0].y : a[0].x < b[0].x;
}

} // namespace detail

/// Simplifies, encodes and scores the contour set at one tolerance.
[[nodiscard]] inline VectorizeResult vectorize_at(const ContourSet& set, const SegMask& mask, double tolerance_px) {
    std::vector<GridPolygon> simplified;
    for (const auto& p : set.polygons) {
        GridPolygon s{p.class_id, detail::simplify_checked(p.outer, tolerance_px), {}};
        if (s.outer.empty())
            continue;
        for (const auto& h : p.holes) {
            auto sh = detail::simplify_checked(h, tolerance_px);
            if (!sh.empty())
                s.holes.push_back(std::move(sh));
        }
        std::sort(s.holes.begin(), s.holes.end(), detail::start_less);
        simplified.push_back(std::move(s));
    }
    std::sort(simplified.begin(), simplified.end(), [](const GridPolygon& a, const GridPolygon& b) {
        return a.class_id != b.class_id ? a.class_id < b.class_id : detail::start_less(a.outer, b.outer);
    });

    VectorizeResult res;
    res.width = set.width;
    res.height = set.height;
    res.downsample = set.downsample;
    res.tolerance_px = tolerance_px;
    for (const auto& p : simplified) {
        res.rings.push_back({p.class_id, false, detail::to_fixed(p.outer)});
        for (const auto& h : p.holes)
            res.rings.push_back({p.class_id, true, detail::to_fixed(h)});
    }
    res.encoded = encode_rings(res.rings);
    res.polygons = to_pixel_polygons(res.rings);
    for (auto cls : set.classes) {
        const auto cover = rasterize(class_rings(res.rings, cls), set.width, set.height);
        res.iou.push_back({cls, coverage_iou(cover, mask, cls)});
    }
    return res;
}

[[nodiscard]] inline VectorizeResult vectorize_at(const SegMask& mask, double tolerance_px) {
    return vectorize_at(extract_contours(mask), mask, tolerance_px);
}

/// Vectorizes every foreground class, doubling the simplification tolerance
/// from 0.5 px until the deflated encoding fits in `budget_bytes`.
[[nodiscard]] inline VectorizeResult vectorize(const SegMask& mask, std::size_t budget_bytes) {
    if (budget_bytes < kMinBudgetBytes)
        throw ContractError("vectorize budget must be at least " + std::to_string(kMinBudgetBytes) + " bytes");
    const auto set = extract_contours(mask);
    VectorizeResult res;
    for (double t = kInitialTolerancePx; t <= kMaxTolerancePx; t *= 2) {
        res = vectorize_at(set, mask, t);
        if (res.encoded_size() <= budget_bytes)
            return res;
    }
    const auto size = res.encoded_size();
    throw BudgetError("mask needs " + std::to_string(size) + " bytes at " + std::to_string(kMaxTolerancePx) +
                          " px tolerance, budget is " + std::to_string(budget_bytes),
                      std::move(res));
}

} // namespace adapt::analytics
