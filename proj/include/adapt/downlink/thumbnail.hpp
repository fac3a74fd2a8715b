#pragma once

#include <adapt/analytics/image.hpp>
#include <adapt/downlink/payloads.hpp>

#include <cstdio>
#include <jpeglib.h>

#include <algorithm>
#include <csetjmp>
#include <cstdlib>

namespace adapt::downlink {

inline constexpr int kThumbnailLongEdge = 640;
inline constexpr int kThumbnailQuality = 60;

/// Area-averaging downscale so the longer side is at most `long_edge`.
[[nodiscard]] inline analytics::Image downscale(const analytics::Image& img, int long_edge) {
    const int longest = std::max(img.width, img.height);
    if (longest <= long_edge)
        return img;
    const double s = static_cast<double>(longest) / long_edge;
    const int w = std::max(1, static_cast<int>(std::lround(img.width / s)));
    const int h = std::max(1, static_cast<int>(std::lround(img.height / s)));
    analytics::Image out(w, h, img.channels);
    for (int y = 0; y < h; ++y) {
        const int y0 = y * img.height / h, y1 = std::max(y0 + 1, (y + 1) * img.height / h);
        for (int x = 0; x < w; ++x) {
            const int x0 = x * img.width / w, x1 = std::max(x0 + 1, (x + 1) * img.width / w);
            for (int c = 0; c < img.channels; ++c) {
                long sum = 0;
                for (int yy = y0; yy < y1; ++yy)
                    for (int xx = x0; xx < x1; ++xx)
                        sum += img.at(xx, yy, c);
                const long n = long(y1 - y0) * (x1 - x0);
                out.at(x, y, c) = static_cast<std::uint8_t>((sum + n / 2) / n);
            }
        }
    }
    return out;
}

namespace detail {

struct JpegError {
    jpeg_error_mgr mgr;
    std::jmp_buf jump;
};

inline void jpeg_error_exit(j_common_ptr cinfo) {
    auto* err = reinterpret_cast<JpegError*>(cinfo->err);
    std::longjmp(err->jump, 1);
}

} // namespace detail

[[nodiscard]] inline Bytes encode_jpeg(const analytics::Image& img, int quality) {
    jpeg_compress_struct cinfo{};
    detail::JpegError err{};
    cinfo.err = jpeg_std_error(&err.mgr);
    err.mgr.error_exit = detail::jpeg_error_exit;
    unsigned char* mem = nullptr;
    unsigned long mem_size = 0;
    if (setjmp(err.jump)) {
        jpeg_destroy_compress(&cinfo);
        std::free(mem);
        throw Error("jpeg encoding failed");
    }
    jpeg_create_compress(&cinfo);
    jpeg_mem_dest(&cinfo, &mem, &mem_size);
    cinfo.image_width = static_cast<JDIMENSION>(img.width);
    cinfo.image_height = static_cast<JDIMENSION>(img.height);
    cinfo.input_components = img.channels;
    cinfo.in_color_space = img.channels == 3 ? JCS_RGB : JCS_GRAYSCALE;
    jpeg_set_defaults(&cinfo);
    jpeg_set_quality(&cinfo, quality, TRUE);
    jpeg_start_compress(&cinfo, TRUE);
    while (cinfo.next_scanline < cinfo.image_height) {
        auto* row = const_cast<JSAMPLE*>(img.pixels.data() +
                                         static_cast<std::size_t>(cinfo.next_scanline) * img.width * img.channels);
        jpeg_write_scanlines(&cinfo, &row, 1);
    }
    jpeg_finish_compress(&cinfo);
    Bytes out(mem, mem + mem_size);
    jpeg_destroy_compress(&cinfo);
    std::free(mem);
    return out;
}

[[nodiscard]] inline analytics::Image decode_jpeg(std::span<const std::uint8_t> data) {
    jpeg_decompress_struct cinfo{};
    detail::JpegError err{};
    cinfo.err = jpeg_std_error(&err.mgr);
    err.mgr.error_exit = detail::jpeg_error_exit;
    if (setjmp(err.jump)) {
        jpeg_destroy_decompress(&cinfo);
        throw ParseError("invalid jpeg data");
    }
    jpeg_create_decompress(&cinfo);
    jpeg_mem_src(&cinfo, data.data(), static_cast<unsigned long>(data.size()));
    jpeg_read_header(&cinfo, TRUE);
    jpeg_start_decompress(&cinfo);
    analytics::Image img(static_cast<int>(cinfo.output_width), static_cast<int>(cinfo.output_height),
                         cinfo.output_components);
    while (cinfo.output_scanline < cinfo.output_height) {
        JSAMPLE* row = img.pixels.data() + static_cast<std::size_t>(cinfo.output_scanline) * img.width * img.channels;
        jpeg_read_scanlines(&cinfo, &row, 1);
    }
    jpeg_finish_decompress(&cinfo);
    jpeg_destroy_decompress(&cinfo);
    return img;
}

/// Reduced, heavily compressed preview for the operator.
[[nodiscard]] inline ThumbnailPayload make_thumbnail(const analytics::Image& img, std::uint64_t image_id,
                                                     int long_edge = kThumbnailLongEdge,
                                                     int quality = kThumbnailQuality) {
    const auto small = downscale(img, long_edge);
    return {image_id, static_cast<std::uint16_t>(small.width), static_cast<std::uint16_t>(small.height),
            encode_jpeg(small, quality)};
}

} // namespace adapt::downlink
