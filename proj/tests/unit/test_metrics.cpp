#include <adapt/analytics/metrics.hpp>

#include <gtest/gtest.h>

#include <numeric>
#include <random>

using namespace adapt;
using namespace adapt::analytics;

namespace {

Image noise_image(std::uint64_t seed, int w, int h) {
    std::mt19937_64 rng(seed);
    Image img(w, h, 1);
    for (auto& p : img.pixels)
        p = static_cast<std::uint8_t>(rng());
    return img;
}

} // namespace

TEST(Histogram, UniformGrayFillsOneBin) {
    const auto h = histogram(Image(30, 20, 1, 128));
    EXPECT_EQ(h[128], 600u);
    EXPECT_EQ(std::accumulate(h.begin(), h.end(), 0u), 600u);
}

TEST(Histogram, CheckerboardSplitsEvenly) {
    Image img(16, 16, 1);
    for (int y = 0; y < 16; ++y)
        for (int x = 0; x < 16; ++x)
            img.at(x, y) = (x + y) % 2 ? 255 : 0;
    const auto h = histogram(img);
    EXPECT_EQ(h[0], 128u);
    EXPECT_EQ(h[255], 128u);
}

TEST(Histogram, CountsAreConserved) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        std::mt19937_64 rng(seed);
        const int w = 1 + rng() % 200, h = 1 + rng() % 200;
        Image img(w, h, 3);
        for (auto& p : img.pixels)
            p = static_cast<std::uint8_t>(rng());
        const auto hist = histogram(img);
        EXPECT_EQ(std::accumulate(hist.begin(), hist.end(), std::uint64_t{0}), std::uint64_t(w) * h);
    }
}

TEST(Histogram, EmptyImageIsRejected) { EXPECT_THROW((void)histogram(Image{}), ContractError); }

TEST(Sharpness, UniformImageScoresZero) {
    const auto r = sharpness(Image(100, 80, 3, 90), 32, 500);
    EXPECT_EQ(r.global_score, 0.0);
    EXPECT_EQ(r.tiles_x, 4);
    EXPECT_EQ(r.tiles_y, 3);
    EXPECT_EQ(r.tile_scores.size(), 12u);
    EXPECT_EQ(r.exposure_us, 500u);
}

TEST(Sharpness, BlurredCopyScoresLower) {
    const auto img = noise_image(1, 128, 128);
    EXPECT_LT(sharpness(box_blur_x(img, 2), 32, 0).global_score, sharpness(img, 32, 0).global_score);
}

TEST(Sharpness, StrictlyDecreasesUnderRepeatedBlur) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        Image img = noise_image(seed, 96, 96);
        double prev = sharpness(img, 32, 0).global_score;
        for (int k = 0; k < 6; ++k) {
            img = box_blur(img, 1);
            const double s = sharpness(img, 32, 0).global_score;
            EXPECT_LT(s, prev) << "seed " << seed << " pass " << k;
            prev = s;
        }
    }
}

TEST(ExposureAdvice, BlurredBrightLowers) {
    Histogram h{};
    h[200] = 1000;
    SharpnessReport s;
    s.global_score = 1.0;
    const auto a = exposure_advice(h, s, 2000);
    EXPECT_EQ(a.action, ExposureAction::lower);
    EXPECT_EQ(a.suggested_max_us, 1000u);
}

TEST(ExposureAdvice, SharpDarkRaises) {
    Histogram h{};
    h[2] = 300;
    h[100] = 700;
    SharpnessReport s;
    s.global_score = 500.0;
    const auto a = exposure_advice(h, s, 500);
    EXPECT_EQ(a.action, ExposureAction::raise);
    EXPECT_EQ(a.suggested_max_us, 1000u);
}

TEST(ExposureAdvice, SharpWellExposedHolds) {
    Histogram h{};
    h[120] = 1000;
    SharpnessReport s;
    s.global_score = 500.0;
    EXPECT_EQ(exposure_advice(h, s, 500).action, ExposureAction::hold);
}

TEST(ExposureAdvice, NeverBelowFloor) {
    Histogram h{};
    h[200] = 10;
    SharpnessReport s;
    EXPECT_EQ(exposure_advice(h, s, 50).action, ExposureAction::hold);
    EXPECT_EQ(exposure_advice(h, s, 60).suggested_max_us, 50u);
}
