#pragma once

#include <adapt/analytics/image.hpp>
#include <adapt/error.hpp>

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace adapt::analytics {

inline constexpr std::uint8_t kBackground = 0;
inline constexpr std::uint8_t kFrozenWater = 1;
inline constexpr std::uint8_t kUnlabeled = 255;

struct ClassInfo {
    std::uint8_t id = 0;
    std::string name;
};

[[nodiscard]] inline std::vector<ClassInfo> default_class_table() {
    return {{kBackground, "background"}, {kFrozenWater, "frozen-water"}};
}

/// Per-pixel class map. When `downsample` > 1 each mask pixel covers a
/// downsample x downsample block of the source image.
struct SegMask {
    int width = 0;
    int height = 0;
    int downsample = 1;
    std::vector<std::uint8_t> classes;

    SegMask() = default;
    SegMask(int w, int h, std::uint8_t fill = kBackground, int factor = 1)
        : width(w), height(h), downsample(factor), classes(static_cast<std::size_t>(w) * h, fill) {
        if (w <= 0 || h <= 0 || factor <= 0)
            throw ContractError("mask needs positive size and downsample factor");
    }

    [[nodiscard]] std::uint8_t& at(int x, int y) { return classes[static_cast<std::size_t>(y) * width + x]; }
    [[nodiscard]] std::uint8_t at(int x, int y) const { return classes[static_cast<std::size_t>(y) * width + x]; }
    [[nodiscard]] std::size_t pixel_count() const { return classes.size(); }

    friend bool operator==(const SegMask&, const SegMask&) = default;
};

[[nodiscard]] inline SegMask mask_from_image(const Image& img) {
    if (img.channels != 1)
        throw ContractError("mask images are single channel");
    SegMask m(img.width, img.height);
    m.classes = img.pixels;
    return m;
}

[[nodiscard]] inline Image mask_to_image(const SegMask& m) {
    Image img(m.width, m.height, 1);
    img.pixels = m.classes;
    return img;
}

/// Pixel IoU of one class between two masks of equal size.
[[nodiscard]] inline double mask_iou(const SegMask& a, const SegMask& b, std::uint8_t cls) {
    if (a.width != b.width || a.height != b.height)
        throw ContractError("mask sizes differ");
    std::size_t inter = 0, uni = 0;
    for (std::size_t i = 0; i < a.classes.size(); ++i) {
        const bool pa = a.classes[i] == cls, pb = b.classes[i] == cls;
        inter += pa && pb;
        uni += pa || pb;
    }
    return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

/// A segmentation model. Implementations must be deterministic.
class SegmenterBackend {
public:
    virtual ~SegmenterBackend() = default;

    [[nodiscard]] virtual std::string name() const = 0;
    [[nodiscard]] virtual std::vector<ClassInfo> class_table() const = 0;
    /// Mask pixels per image pixel along each axis; image sides must be multiples.
    [[nodiscard]] virtual int downsample() const = 0;
    [[nodiscard]] virtual int min_side() const { return 1; }

    [[nodiscard]] virtual SegMask run(const Image& img) const = 0;
};

/// Runs a backend and checks both sides of its contract.
[[nodiscard]] inline SegMask segment(const SegmenterBackend& backend, const Image& img) {
    const int f = backend.downsample();
    if (img.empty() || img.width < backend.min_side() || img.height < backend.min_side() || img.width % f != 0 ||
        img.height % f != 0)
        throw ContractError("image " + std::to_string(img.width) + "x" + std::to_string(img.height) +
                            " does not satisfy backend '" + backend.name() + "'");
    SegMask m = backend.run(img);
    if (m.width != img.width / f || m.height != img.height / f || m.downsample != f ||
        m.classes.size() != m.pixel_count())
        throw ContractError("backend '" + backend.name() + "' returned a mask of the wrong size");
    const auto table = backend.class_table();
    for (auto c : m.classes) {
        bool known = false;
        for (const auto& info : table)
            known = known || info.id == c;
        if (!known)
            throw ContractError("backend '" + backend.name() + "' emitted undeclared class " + std::to_string(c));
    }
    return m;
}

/// Deterministic stand-in model: bright, slightly blue pixels are ice.
/// Classifies block averages when downsampling.
class ReferenceSegmenter final : public SegmenterBackend {
public:
    static constexpr int kMinLuma = 140;
    static constexpr int kMinBlueExcess = -8;

    explicit ReferenceSegmenter(int factor = 2) : factor_(factor) {
        if (factor <= 0)
            throw ContractError("downsample factor must be positive");
    }

    [[nodiscard]] std::string name() const override { return "reference-threshold"; }
    [[nodiscard]] std::vector<ClassInfo> class_table() const override { return default_class_table(); }
    [[nodiscard]] int downsample() const override { return factor_; }

    [[nodiscard]] SegMask run(const Image& img) const override {
        const int f = factor_;
        SegMask m(img.width / f, img.height / f, kBackground, f);
        const int n = f * f;
        for (int y = 0; y < m.height; ++y)
            for (int x = 0; x < m.width; ++x) {
                int r = 0, g = 0, b = 0;
                for (int dy = 0; dy < f; ++dy)
                    for (int dx = 0; dx < f; ++dx) {
                        const int sx = x * f + dx, sy = y * f + dy;
                        if (img.channels == 1) {
                            const int v = img.at(sx, sy);
                            r += v;
                            g += v;
                            b += v;
                        } else {
                            r += img.at(sx, sy, 0);
                            g += img.at(sx, sy, 1);
                            b += img.at(sx, sy, 2);
                        }
                    }
                const auto R = static_cast<std::uint8_t>((r + n / 2) / n);
                const auto G = static_cast<std::uint8_t>((g + n / 2) / n);
                const auto B = static_cast<std::uint8_t>((b + n / 2) / n);
                const int Y = luma(R, G, B);
                m.at(x, y) = (Y >= kMinLuma && B - Y >= kMinBlueExcess) ? kFrozenWater : kBackground;
            }
        return m;
    }

private:
    int factor_;
};

} // namespace adapt::analytics
