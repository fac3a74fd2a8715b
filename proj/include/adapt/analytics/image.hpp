#pragma once

#include <adapt/error.hpp>

#include <png.h>

#include <algorithm>

#include <cstdint>
#include <cstdio>
#include <memory>
#include <string>
#include <vector>

namespace adapt::analytics {

/// Interleaved 8-bit image with 1 (gray) or 3 (RGB) channels, rows packed.
struct Image {
    int width = 0;
    int height = 0;
    int channels = 1;
    std::vector<std::uint8_t> pixels;

    Image() = default;
    Image(int w, int h, int c, std::uint8_t fill = 0)
        : width(w), height(h), channels(c), pixels(static_cast<std::size_t>(w) * h * c, fill) {
        if (w <= 0 || h <= 0 || (c != 1 && c != 3))
            throw ContractError("image needs positive size and 1 or 3 channels");
    }

    [[nodiscard]] bool empty() const { return pixels.empty(); }
    [[nodiscard]] std::size_t pixel_count() const { return static_cast<std::size_t>(width) * height; }

    [[nodiscard]] std::uint8_t& at(int x, int y, int c = 0) {
        return pixels[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }
    [[nodiscard]] std::uint8_t at(int x, int y, int c = 0) const {
        return pixels[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }

    friend bool operator==(const Image&, const Image&) = default;
};

/// Integer BT.601 luma.
[[nodiscard]] constexpr std::uint8_t luma(std::uint8_t r, std::uint8_t g, std::uint8_t b) {
    return static_cast<std::uint8_t>((77 * r + 150 * g + 29 * b + 128) >> 8);
}

[[nodiscard]] inline Image luminance(const Image& img) {
    if (img.channels == 1)
        return img;
    Image out(img.width, img.height, 1);
    for (std::size_t i = 0; i < img.pixel_count(); ++i)
        out.pixels[i] = luma(img.pixels[3 * i], img.pixels[3 * i + 1], img.pixels[3 * i + 2]);
    return out;
}

/// Horizontal box filter of integer length (edge-clamped), applied per channel.
/// Length 1 or less returns the input.
[[nodiscard]] inline Image box_blur_x(const Image& img, int length) {
    if (length <= 1)
        return img;
    Image out = img;
    const int lo = (length - 1) / 2;
    for (int y = 0; y < img.height; ++y)
        for (int c = 0; c < img.channels; ++c)
            for (int x = 0; x < img.width; ++x) {
                int sum = 0;
                for (int k = 0; k < length; ++k) {
                    const int xx = std::clamp(x - lo + k, 0, img.width - 1);
                    sum += img.at(xx, y, c);
                }
                out.at(x, y, c) = static_cast<std::uint8_t>((sum + length / 2) / length);
            }
    return out;
}

/// Separable square box blur of radius r (kernel 2r+1), edge-clamped.
[[nodiscard]] inline Image box_blur(const Image& img, int radius) {
    if (radius <= 0)
        return img;
    const int n = 2 * radius + 1;
    Image tmp = img, out = img;
    for (int y = 0; y < img.height; ++y)
        for (int c = 0; c < img.channels; ++c)
            for (int x = 0; x < img.width; ++x) {
                int sum = 0;
                for (int k = -radius; k <= radius; ++k)
                    sum += img.at(std::clamp(x + k, 0, img.width - 1), y, c);
                tmp.at(x, y, c) = static_cast<std::uint8_t>((sum + n / 2) / n);
            }
    for (int y = 0; y < img.height; ++y)
        for (int c = 0; c < img.channels; ++c)
            for (int x = 0; x < img.width; ++x) {
                int sum = 0;
                for (int k = -radius; k <= radius; ++k)
                    sum += tmp.at(x, std::clamp(y + k, 0, img.height - 1), c);
                out.at(x, y, c) = static_cast<std::uint8_t>((sum + n / 2) / n);
            }
    return out;
}

namespace detail {

struct FileCloser {
    void operator()(std::FILE* f) const { std::fclose(f); }
};

} // namespace detail

/// Reads an 8-bit gray or RGB PNG (palette/alpha/16-bit inputs are converted).
[[nodiscard]] inline Image read_png(const std::string& path) {
    std::unique_ptr<std::FILE, detail::FileCloser> f(std::fopen(path.c_str(), "rb"));
    if (!f)
        throw IoError("cannot open '" + path + "'");
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png_create_info_struct(png);
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw ParseError("'" + path + "' is not a readable PNG");
    }
    png_init_io(png, f.get());
    png_read_info(png, info);
    png_set_strip_16(png);
    png_set_strip_alpha(png);
    png_set_packing(png);
    png_set_palette_to_rgb(png);
    png_set_expand_gray_1_2_4_to_8(png);
    png_read_update_info(png, info);
    const int w = static_cast<int>(png_get_image_width(png, info));
    const int h = static_cast<int>(png_get_image_height(png, info));
    const int ch = png_get_channels(png, info);
    if (ch != 1 && ch != 3) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw ParseError("'" + path + "' has an unsupported channel layout");
    }
    Image img(w, h, ch);
    std::vector<png_bytep> rows(h);
    for (int y = 0; y < h; ++y)
        rows[y] = img.pixels.data() + static_cast<std::size_t>(y) * w * ch;
    png_read_image(png, rows.data());
    png_destroy_read_struct(&png, &info, nullptr);
    return img;
}

inline void write_png(const std::string& path, const Image& img) {
    std::unique_ptr<std::FILE, detail::FileCloser> f(std::fopen(path.c_str(), "wb"));
    if (!f)
        throw IoError("cannot create '" + path + "'");
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png_create_info_struct(png);
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw IoError("failed writing '" + path + "'");
    }
    png_init_io(png, f.get());
    png_set_IHDR(png, info, img.width, img.height, 8, img.channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (int y = 0; y < img.height; ++y)
        png_write_row(png, img.pixels.data() + static_cast<std::size_t>(y) * img.width * img.channels);
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

} // namespace adapt::analytics
