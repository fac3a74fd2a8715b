#pragma once

#include <adapt/analytics/image.hpp>

#include <algorithm>
#include <array>
#include <cstdint>
#include <string_view>
#include <vector>

namespace adapt::analytics {

using Histogram = std::array<std::uint32_t, 256>;

/// 256-bin luminance histogram.
[[nodiscard]] inline Histogram histogram(const Image& img) {
    if (img.empty())
        throw ContractError("histogram of an empty image");
    Histogram h{};
    if (img.channels == 1) {
        for (auto v : img.pixels)
            ++h[v];
    } else {
        for (std::size_t i = 0; i < img.pixel_count(); ++i)
            ++h[luma(img.pixels[3 * i], img.pixels[3 * i + 1], img.pixels[3 * i + 2])];
    }
    return h;
}

struct SharpnessReport {
    double global_score = 0.0;
    int tile = 0;
    int tiles_x = 0;
    int tiles_y = 0;
    std::vector<double> tile_scores; ///< row-major tiles_y x tiles_x
    std::uint32_t exposure_us = 0;
};

/// Mean squared 4-neighbour Laplacian of luminance per tile; the global score
/// is the median tile. Edge tiles may be partial; image-border pixels have no
/// full stencil and are skipped.
[[nodiscard]] inline SharpnessReport sharpness(const Image& img, int tile, std::uint32_t exposure_us) {
    if (tile <= 0)
        throw ContractError("sharpness tile must be positive");
    const Image y = luminance(img);
    SharpnessReport rep;
    rep.tile = tile;
    rep.exposure_us = exposure_us;
    rep.tiles_x = (y.width + tile - 1) / tile;
    rep.tiles_y = (y.height + tile - 1) / tile;
    std::vector<double> sum(static_cast<std::size_t>(rep.tiles_x) * rep.tiles_y, 0.0);
    std::vector<std::size_t> count(sum.size(), 0);
    for (int j = 1; j + 1 < y.height; ++j)
        for (int i = 1; i + 1 < y.width; ++i) {
            const int lap = y.at(i - 1, j) + y.at(i + 1, j) + y.at(i, j - 1) + y.at(i, j + 1) - 4 * y.at(i, j);
            const std::size_t t = static_cast<std::size_t>(j / tile) * rep.tiles_x + i / tile;
            sum[t] += double(lap) * lap;
            ++count[t];
        }
    rep.tile_scores.resize(sum.size());
    for (std::size_t t = 0; t < sum.size(); ++t)
        rep.tile_scores[t] = count[t] ? sum[t] / double(count[t]) : 0.0;
    auto sorted = rep.tile_scores;
    std::sort(sorted.begin(), sorted.end());
    const std::size_t n = sorted.size();
    rep.global_score = n % 2 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
    return rep;
}

enum class ExposureAction { hold, lower, raise };

[[nodiscard]] constexpr std::string_view to_string(ExposureAction a) {
    switch (a) {
    case ExposureAction::lower:
        return "lower";
    case ExposureAction::raise:
        return "raise";
    default:
        return "hold";
    }
}

struct ExposurePolicy {
    double min_sharpness = 25.0;     ///< global score below this counts as blurred
    std::uint32_t floor_us = 50;     ///< never advise below this
    std::uint32_t ceiling_us = 20000;
    int dark_bins = 8;
    double dark_fraction = 0.20;
};

struct ExposureAdvice {
    ExposureAction action = ExposureAction::hold;
    std::uint32_t suggested_max_us = 0;
};

/// Blur wins over darkness: a blurred frame lowers the exposure cap (halving
/// it, not below the floor); a sharp frame with more than 20% of its pixels
/// in the darkest bins doubles it; anything else holds.
[[nodiscard]] inline ExposureAdvice exposure_advice(const Histogram& hist, const SharpnessReport& sharp,
                                                    std::uint32_t current_max_us, const ExposurePolicy& policy = {}) {
    std::uint64_t total = 0, dark = 0;
    for (int b = 0; b < 256; ++b) {
        total += hist[b];
        if (b < policy.dark_bins)
            dark += hist[b];
    }
    const bool blurred = sharp.global_score < policy.min_sharpness;
    if (blurred && current_max_us > policy.floor_us)
        return {ExposureAction::lower, std::max(policy.floor_us, current_max_us / 2)};
    if (!blurred && total > 0 && double(dark) > policy.dark_fraction * double(total) &&
        current_max_us < policy.ceiling_us)
        return {ExposureAction::raise, std::min(policy.ceiling_us, current_max_us * 2)};
    return {ExposureAction::hold, current_max_us};
}

} // namespace adapt::analytics
