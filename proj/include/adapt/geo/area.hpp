#pragma once

#include <adapt/analytics/raster.hpp>
#include <adapt/geo/geodesy.hpp>
#include <adapt/geo/polygon.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

namespace adapt::geo {

/// A square-celled occupancy grid on a local ENU plane, used to measure
/// unions and overlaps of ground polygons. Cell (i, j) covers
/// [e0 + i c, e0 + (i+1) c) x [n0 + j c, n0 + (j+1) c) and is set when its
/// centre lies inside.
class AreaGrid {
public:
    AreaGrid(EnuFrame frame, double e0, double n0, double e1, double n1, double cell_m)
        : frame_(std::move(frame)), e0_(e0), n0_(n0), cell_(cell_m) {
        if (!(cell_m > 0.0) || !(e1 > e0) || !(n1 > n0))
            throw ContractError("area grid needs a positive extent and cell size");
        w_ = static_cast<int>(std::ceil((e1 - e0) / cell_m));
        h_ = static_cast<int>(std::ceil((n1 - n0) / cell_m));
        if (static_cast<double>(w_) * h_ > 2.5e8)
            throw ContractError("area grid too large");
        cells_.assign(static_cast<std::size_t>(w_) * h_, 0);
    }

    /// Grid sized to enclose `rings` with the cell chosen so the grid has
    /// about `target_cells` cells, but never finer than `min_cell_m`.
    [[nodiscard]] static AreaGrid enclosing(const std::vector<const GeoRing*>& rings, double min_cell_m = 0.05,
                                            double target_cells = 4e6) {
        GeodeticPosition origin{};
        bool have = false;
        for (const auto* r : rings)
            if (!r->empty()) {
                origin = r->front();
                origin.alt_m = 0.0;
                have = true;
                break;
            }
        EnuFrame frame(origin);
        double e0 = 0, n0 = 0, e1 = 1, n1 = 1;
        if (have) {
            e0 = n0 = std::numeric_limits<double>::infinity();
            e1 = n1 = -e0;
            for (const auto* r : rings)
                for (const auto& p : *r) {
                    const auto q = geodetic_to_enu(p, frame);
                    e0 = std::min(e0, q.e), e1 = std::max(e1, q.e);
                    n0 = std::min(n0, q.n), n1 = std::max(n1, q.n);
                }
            e0 -= 1, n0 -= 1, e1 += 1, n1 += 1;
        }
        const double cell = std::max(min_cell_m, std::sqrt((e1 - e0) * (n1 - n0) / target_cells));
        return AreaGrid(frame, e0, n0, e1, n1, cell);
    }

    /// Sets every cell inside the polygon (outer minus holes, even-odd).
    void paint(const GeoRing& outer, const std::vector<GeoRing>& holes = {}) {
        std::vector<std::vector<analytics::FixedPoint>> rings;
        std::int64_t xmin = INT64_MAX, ymin = INT64_MAX, xmax = INT64_MIN, ymax = INT64_MIN;
        const auto add = [&](const GeoRing& r) {
            auto& out = rings.emplace_back();
            for (const auto& p : r) {
                const auto q = geodetic_to_enu(p, frame_);
                const auto x = static_cast<std::int32_t>(std::llround((q.e - e0_) / cell_ * analytics::kFixedScale));
                const auto y = static_cast<std::int32_t>(std::llround((q.n - n0_) / cell_ * analytics::kFixedScale));
                out.push_back({x, y});
                xmin = std::min<std::int64_t>(xmin, x), xmax = std::max<std::int64_t>(xmax, x);
                ymin = std::min<std::int64_t>(ymin, y), ymax = std::max<std::int64_t>(ymax, y);
            }
        };
        add(outer);
        for (const auto& h : holes)
            add(h);
        if (outer.size() < 3)
            return;
        // Rasterize only the bounding box, then OR it in.
        const int i0 = std::max(0, static_cast<int>(xmin / analytics::kFixedScale) - 1);
        const int j0 = std::max(0, static_cast<int>(ymin / analytics::kFixedScale) - 1);
        const int i1 = std::min(w_, static_cast<int>(xmax / analytics::kFixedScale) + 2);
        const int j1 = std::min(h_, static_cast<int>(ymax / analytics::kFixedScale) + 2);
        if (i1 <= i0 || j1 <= j0)
            return;
        for (auto& r : rings)
            for (auto& p : r) {
                p.x -= i0 * analytics::kFixedScale;
                p.y -= j0 * analytics::kFixedScale;
            }
        const int bw = i1 - i0, bh = j1 - j0;
        const auto box = analytics::rasterize(rings, bw, bh);
        for (int j = 0; j < bh; ++j)
            for (int i = 0; i < bw; ++i)
                cells_[static_cast<std::size_t>(j + j0) * w_ + (i + i0)] |= box[static_cast<std::size_t>(j) * bw + i];
    }

    void paint(const GeoPolygon& p) { paint(p.outer, p.holes); }

    [[nodiscard]] std::size_t count() const {
        return static_cast<std::size_t>(std::count(cells_.begin(), cells_.end(), std::uint8_t{1}));
    }
    [[nodiscard]] double area_m2() const { return static_cast<double>(count()) * cell_ * cell_; }
    [[nodiscard]] double cell_m() const { return cell_; }
    [[nodiscard]] int width() const { return w_; }
    [[nodiscard]] int height() const { return h_; }
    [[nodiscard]] const EnuFrame& frame() const { return frame_; }
    [[nodiscard]] double e0() const { return e0_; }
    [[nodiscard]] double n0() const { return n0_; }
    [[nodiscard]] std::uint8_t at(int i, int j) const { return cells_[static_cast<std::size_t>(j) * w_ + i]; }
    [[nodiscard]] std::vector<std::uint8_t>& cells() { return cells_; }
    [[nodiscard]] const std::vector<std::uint8_t>& cells() const { return cells_; }

    /// A blank grid with identical geometry.
    [[nodiscard]] AreaGrid blank_like() const {
        AreaGrid g = *this;
        std::fill(g.cells_.begin(), g.cells_.end(), 0);
        return g;
    }

private:
    EnuFrame frame_;
    double e0_, n0_, cell_;
    int w_ = 0, h_ = 0;
    std::vector<std::uint8_t> cells_;
};

/// Intersection over union of two grids with the same geometry, restricted
/// to cells where `within` is set (or everywhere when it is null). Two empty
/// sets count as a perfect match.
[[nodiscard]] inline double grid_iou(const AreaGrid& a, const AreaGrid& b, const AreaGrid* within = nullptr) {
    if (a.width() != b.width() || a.height() != b.height())
        throw ContractError("grid_iou needs grids of equal geometry");
    std::size_t inter = 0, uni = 0;
    const auto& ca = a.cells();
    const auto& cb = b.cells();
    for (std::size_t k = 0; k < ca.size(); ++k) {
        if (within && !within->cells()[k])
            continue;
        inter += ca[k] & cb[k];
        uni += ca[k] | cb[k];
    }
    return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

} // namespace adapt::geo
