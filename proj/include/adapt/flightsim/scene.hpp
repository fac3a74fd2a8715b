#pragma once

#include <adapt/analytics/segment.hpp>
#include <adapt/flightsim/noise.hpp>
#include <adapt/geo/area.hpp>
#include <adapt/geo/geodesy.hpp>

#include <nlohmann/json.hpp>

#include <cmath>
#include <fstream>
#include <string>
#include <vector>

namespace adapt::flightsim {

struct SceneConfig {
    std::uint64_t seed = 1;
    double extent_e_m = 300.0;
    double extent_n_m = 300.0;
    double resolution_m = 0.1;
    double feature_m = 40.0;  ///< wavelength of the largest ice features
    double finest_m = 0.8;    ///< smallest boundary detail
    double gain = 0.5;
    double ice_bias = 0.0;    ///< added to the noise before thresholding; > 0 means more ice
    double grain_m = 0.01;    ///< surface grain wavelength, evaluated procedurally
    double grain_amplitude = 24.0;
    geo::GeodeticPosition origin{64.84, -147.71, 130.0}; ///< scene centre on the ground

    void validate() const {
        if (!(extent_e_m > 0 && extent_n_m > 0 && resolution_m > 0))
            throw ContractError("scene extent and resolution must be positive");
        if (!(grain_m > 0 && grain_amplitude >= 0))
            throw ContractError("scene grain needs a positive wavelength and non-negative amplitude");
        if (!(feature_m >= finest_m && finest_m >= resolution_m))
            throw ContractError("scene needs resolution <= finest_m <= feature_m");
        if (extent_e_m * extent_n_m / (resolution_m * resolution_m) > 1e8)
            throw ContractError("scene raster would exceed 1e8 cells");
    }

    [[nodiscard]] static SceneConfig from_json(const nlohmann::json& j) {
        SceneConfig c;
        try {
            c.seed = j.value("seed", c.seed);
            c.extent_e_m = j.value("extent_e_m", c.extent_e_m);
            c.extent_n_m = j.value("extent_n_m", c.extent_n_m);
            c.resolution_m = j.value("resolution_m", c.resolution_m);
            c.feature_m = j.value("feature_m", c.feature_m);
            c.finest_m = j.value("finest_m", c.finest_m);
            c.gain = j.value("gain", c.gain);
            c.ice_bias = j.value("ice_bias", c.ice_bias);
            c.grain_m = j.value("grain_m", c.grain_m);
            c.grain_amplitude = j.value("grain_amplitude", c.grain_amplitude);
            if (j.contains("origin")) {
                const auto& o = j.at("origin");
                c.origin = {o.at("lat_deg").get<double>(), o.at("lon_deg").get<double>(), o.value("alt_m", 0.0)};
            }
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(std::string("scene config: ") + e.what());
        }
        c.validate();
        return c;
    }

    [[nodiscard]] nlohmann::json to_json() const {
        return {{"seed", seed},
                {"extent_e_m", extent_e_m},
                {"extent_n_m", extent_n_m},
                {"resolution_m", resolution_m},
                {"feature_m", feature_m},
                {"finest_m", finest_m},
                {"gain", gain},
                {"ice_bias", ice_bias},
                {"grain_m", grain_m},
                {"grain_amplitude", grain_amplitude},
                {"origin", {{"lat_deg", origin.lat_deg}, {"lon_deg", origin.lon_deg}, {"alt_m", origin.alt_m}}}};
    }

    [[nodiscard]] static SceneConfig load(const std::string& path) {
        std::ifstream in(path);
        if (!in)
            throw IoError("cannot open scene config '" + path + "'");
        try {
            return from_json(nlohmann::json::parse(in));
        } catch (const nlohmann::json::parse_error& e) {
            throw ParseError("scene config '" + path + "': " + e.what());
        }
    }
};

/// Flat synthetic river scene centred on the ENU origin: a class raster
/// (frozen water or background) from thresholded fractal noise, and a fine
/// luminance texture so image sharpness has something to measure.
class SimScene {
public:
    explicit SimScene(SceneConfig cfg)
        : cfg_(std::move(cfg)), frame_(cfg_.origin), fine_(mix64(cfg_.seed ^ 0x9a1bu)) {
        cfg_.validate();
        w_ = static_cast<int>(std::ceil(cfg_.extent_e_m / cfg_.resolution_m));
        h_ = static_cast<int>(std::ceil(cfg_.extent_n_m / cfg_.resolution_m));
        e0_ = -0.5 * w_ * cfg_.resolution_m;
        n0_ = -0.5 * h_ * cfg_.resolution_m;
        classes_.resize(static_cast<std::size_t>(w_) * h_);
        texture_.resize(classes_.size());
        const ValueNoise shape(cfg_.seed);
        const ValueNoise grain(mix64(cfg_.seed ^ 0x7e47u));
        const int octaves = std::max(1, static_cast<int>(std::lround(std::log2(cfg_.feature_m / cfg_.finest_m))) + 1);
        const double grain_m = 4.0 * cfg_.resolution_m;
        for (int j = 0; j < h_; ++j)
            for (int i = 0; i < w_; ++i) {
                const double e = e0_ + (i + 0.5) * cfg_.resolution_m;
                const double n = n0_ + (j + 0.5) * cfg_.resolution_m;
                const double v = shape.fbm(e / cfg_.feature_m, n / cfg_.feature_m, octaves, cfg_.gain) + cfg_.ice_bias;
                const auto k = static_cast<std::size_t>(j) * w_ + i;
                classes_[k] = v > 0.0 ? analytics::kFrozenWater : analytics::kBackground;
                texture_[k] = static_cast<std::int8_t>(std::lround(40.0 * grain.fbm(e / grain_m, n / grain_m, 2, 0.5)));
            }
    }

    [[nodiscard]] const SceneConfig& config() const { return cfg_; }
    [[nodiscard]] const geo::EnuFrame& frame() const { return frame_; }
    [[nodiscard]] int width() const { return w_; }
    [[nodiscard]] int height() const { return h_; }
    [[nodiscard]] double resolution() const { return cfg_.resolution_m; }
    [[nodiscard]] double e0() const { return e0_; }
    [[nodiscard]] double n0() const { return n0_; }
    [[nodiscard]] double e1() const { return e0_ + w_ * cfg_.resolution_m; }
    [[nodiscard]] double n1() const { return n0_ + h_ * cfg_.resolution_m; }

    [[nodiscard]] bool contains(double e, double n) const { return e >= e0_ && e < e1() && n >= n0_ && n < n1(); }

    /// Cell index of a ground point; the caller checks `contains` first.
    [[nodiscard]] std::size_t cell(double e, double n) const {
        const int i = std::min(w_ - 1, static_cast<int>((e - e0_) / cfg_.resolution_m));
        const int j = std::min(h_ - 1, static_cast<int>((n - n0_) / cfg_.resolution_m));
        return static_cast<std::size_t>(j) * w_ + i;
    }

    [[nodiscard]] std::uint8_t class_at(double e, double n) const { return classes_[cell(e, n)]; }

    /// Scene colour: ice bright and slightly blue, background dark. A coarse
    /// stored texture plus centimetre grain give the sharpness metric
    /// detail to lose under motion blur.
    [[nodiscard]] std::array<std::uint8_t, 3> colour_at(double e, double n) const {
        const auto k = cell(e, n);
        const int t = texture_[k] +
                      static_cast<int>(std::lround(cfg_.grain_amplitude * fine_.sample(e / cfg_.grain_m, n / cfg_.grain_m)));
        const auto c = [](int v) { return static_cast<std::uint8_t>(std::clamp(v, 0, 255)); };
        if (classes_[k] == analytics::kFrozenWater)
            return {c(200 + t), c(214 + t), c(236 + t)};
        return {c(62 + t), c(78 + t), c(70 + t)};
    }

    [[nodiscard]] const std::vector<std::uint8_t>& classes() const { return classes_; }

    /// Occupancy grid aligned cell-for-cell with the scene raster.
    [[nodiscard]] geo::AreaGrid grid() const { return geo::AreaGrid(frame_, e0_, n0_, e1(), n1(), cfg_.resolution_m); }

    /// Scene cells of `cls` as a grid aligned with `grid()`.
    [[nodiscard]] geo::AreaGrid class_grid(std::uint8_t cls = analytics::kFrozenWater) const {
        auto g = grid();
        for (std::size_t k = 0; k < classes_.size(); ++k)
            g.cells()[k] = classes_[k] == cls;
        return g;
    }

private:
    SceneConfig cfg_;
    geo::EnuFrame frame_;
    int w_ = 0, h_ = 0;
    double e0_ = 0, n0_ = 0;
    std::vector<std::uint8_t> classes_;
    std::vector<std::int8_t> texture_;
    ValueNoise fine_;
};

} // namespace adapt::flightsim
