#pragma once

#include <adapt/analytics/segment.hpp>

#include <cmath>
#include <cstdint>

namespace adapt::flightsim {

/// splitmix64 finalizer; the hash behind every lattice value.
[[nodiscard]] constexpr std::uint64_t mix64(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

/// Seeded 2-D value noise with quintic smoothing, range [-1, 1].
class ValueNoise {
public:
    explicit ValueNoise(std::uint64_t seed) : seed_(mix64(seed)) {}

    [[nodiscard]] double lattice(std::int64_t ix, std::int64_t iy, int octave) const {
        const std::uint64_t h = mix64(seed_ ^ mix64(static_cast<std::uint64_t>(ix) * 0x100000001B3ull ^
                                                    mix64(static_cast<std::uint64_t>(iy) + (std::uint64_t(octave) << 48))));
        return static_cast<double>(h >> 11) * (2.0 / 9007199254740992.0) - 1.0;
    }

    [[nodiscard]] double sample(double x, double y, int octave = 0) const {
        const double fx = std::floor(x), fy = std::floor(y);
        const auto ix = static_cast<std::int64_t>(fx), iy = static_cast<std::int64_t>(fy);
        const double tx = fade(x - fx), ty = fade(y - fy);
        const double a = lattice(ix, iy, octave), b = lattice(ix + 1, iy, octave);
        const double c = lattice(ix, iy + 1, octave), d = lattice(ix + 1, iy + 1, octave);
        return (a + (b - a) * tx) + ((c + (d - c) * tx) - (a + (b - a) * tx)) * ty;
    }

    /// Fractal Brownian motion: `octaves` layers, each at double frequency and
    /// `gain` times the amplitude of the last. `x`, `y` are in base-wavelength units.
    [[nodiscard]] double fbm(double x, double y, int octaves, double gain = 0.5) const {
        double sum = 0.0, amp = 1.0, norm = 0.0, freq = 1.0;
        for (int o = 0; o < octaves; ++o) {
            sum += amp * sample(x * freq, y * freq, o);
            norm += amp;
            amp *= gain;
            freq *= 2.0;
        }
        return sum / norm;
    }

private:
    static double fade(double t) { return t * t * t * (t * (t * 6 - 15) + 10); }

    std::uint64_t seed_;
};

/// Thresholded fBm: a coast-like binary mask (class 1 where the noise is
/// positive) with jagged boundaries down to roughly `finest_px`. A `gain`
/// above 0.5 keeps the fine octaves strong, as on broken river ice.
[[nodiscard]] inline analytics::SegMask fractal_mask(int width, int height, std::uint64_t seed,
                                                     double base_wavelength_px = 256.0, double finest_px = 2.0,
                                                     double gain = 0.55) {
    const ValueNoise noise(seed);
    const int octaves = std::max(1, static_cast<int>(std::lround(std::log2(base_wavelength_px / finest_px))) + 1);
    analytics::SegMask m(width, height);
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x)
            m.at(x, y) = noise.fbm(x / base_wavelength_px, y / base_wavelength_px, octaves, gain) > 0.0
                             ? analytics::kFrozenWater
                             : analytics::kBackground;
    return m;
}

} // namespace adapt::flightsim
