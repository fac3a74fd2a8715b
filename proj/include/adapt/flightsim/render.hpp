#pragma once

#include <adapt/analytics/image.hpp>
#include <adapt/analytics/segment.hpp>
#include <adapt/flightsim/scene.hpp>
#include <adapt/geo/camera.hpp>
#include <adapt/geo/georegister.hpp>

#include <cmath>
#include <vector>

namespace adapt::flightsim {

/// Camera-frame rays through every pixel centre, computed once per camera.
class RayTable {
public:
    explicit RayTable(const geo::CameraModel& cam) : cam_(cam) {
        rays_.reserve(static_cast<std::size_t>(cam.width) * cam.height);
        for (int j = 0; j < cam.height; ++j)
            for (int i = 0; i < cam.width; ++i)
                rays_.push_back(geo::pixel_to_ray(cam, {i + 0.5, j + 0.5}));
    }

    [[nodiscard]] const geo::CameraModel& camera() const { return cam_; }
    [[nodiscard]] const geo::Vec3& ray(int i, int j) const { return rays_[static_cast<std::size_t>(j) * cam_.width + i]; }

private:
    geo::CameraModel cam_;
    std::vector<geo::Vec3> rays_;
};

/// Motion blur length in pixels: distance travelled during the exposure
/// over the ground sample distance at the image centre height.
[[nodiscard]] inline double blur_length_px(double speed_mps, double exposure_us, double height_m, double focal_px) {
    if (!(height_m > 0.0))
        throw ContractError("blur length needs a camera above the ground");
    return speed_mps * exposure_us * 1e-6 * focal_px / height_m;
}

/// Box blur of fractional length along image y. Each tap weighs the overlap
/// of a continuous box [-L/2, L/2] with its pixel, so L <= 1 is the identity.
[[nodiscard]] inline analytics::Image motion_blur_y(const analytics::Image& img, double length_px) {
    if (!(length_px > 1.0))
        return img;
    const int reach = static_cast<int>(std::ceil(0.5 * length_px - 0.5));
    std::vector<double> w;
    for (int k = -reach; k <= reach; ++k) {
        const double lo = std::max(k - 0.5, -0.5 * length_px);
        const double hi = std::min(k + 0.5, 0.5 * length_px);
        w.push_back(std::max(0.0, hi - lo) / length_px);
    }
    analytics::Image out = img;
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            for (int c = 0; c < img.channels; ++c) {
                double s = 0.0;
                for (int k = -reach; k <= reach; ++k)
                    s += w[static_cast<std::size_t>(k + reach)] * img.at(x, std::clamp(y + k, 0, img.height - 1), c);
                out.at(x, y, c) = static_cast<std::uint8_t>(std::clamp(std::lround(s), 0L, 255L));
            }
    return out;
}

struct RenderedFrame {
    analytics::Image image;     ///< RGB, blurred
    analytics::SegMask truth;   ///< scene class under each pixel centre, unblurred
    double blur_px = 0.0;
};

/// Renders the flat scene as seen from `pose`. Throws RangeError when any
/// pixel looks past the horizon or off the edge of the scene.
[[nodiscard]] inline RenderedFrame render_frame(const SimScene& scene, const RayTable& rays,
                                                const geo::TimestampedPose& pose, double speed_mps,
                                                double exposure_us) {
    const auto& cam = rays.camera();
    const geo::ViewGeometry view(cam, pose, scene.frame());
    RenderedFrame out;
    out.image = analytics::Image(cam.width, cam.height, 3);
    out.truth = analytics::SegMask(cam.width, cam.height);
    for (int j = 0; j < cam.height; ++j)
        for (int i = 0; i < cam.width; ++i) {
            const auto hit = view.intersect(rays.ray(i, j), 0.0);
            if (!hit)
                throw RangeError("pixel (" + std::to_string(i) + ", " + std::to_string(j) + ") misses the ground");
            if (!scene.contains(hit->x(), hit->y()))
                throw RangeError("image footprint leaves the scene");
            const auto rgb = scene.colour_at(hit->x(), hit->y());
            for (int c = 0; c < 3; ++c)
                out.image.at(i, j, c) = rgb[static_cast<std::size_t>(c)];
            out.truth.at(i, j) = scene.class_at(hit->x(), hit->y());
        }
    out.blur_px = blur_length_px(speed_mps, exposure_us, view.center().z(), cam.fy);
    out.image = motion_blur_y(out.image, out.blur_px);
    return out;
}

} // namespace adapt::flightsim
