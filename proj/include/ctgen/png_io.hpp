/**
 * ctgen/png_io.hpp
 *
 * PNG read/write for Image and GrayImage via libpng. Compression level
 * and filter strategy are pinned so repeated runs emit identical bytes.
 */

#pragma once

#include <png.h>

#include <cstdio>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "ctgen/common.hpp"
#include "ctgen/image.hpp"

namespace ctgen::png_io {

namespace detail {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

inline void write_rows(const std::string& path, int width, int height,
                       int color_type, const std::uint8_t* data, std::size_t stride) {
    FilePtr fp(std::fopen(path.c_str(), "wb"));
    if (!fp) throw IoError("cannot open for write: " + path);

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw IoError("png_create_write_struct failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw IoError("png_create_info_struct failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw IoError("png write failed: " + path);
    }
    png_init_io(png, fp.get());
    png_set_compression_level(png, 6);
    png_set_filter(png, 0, PNG_FILTER_NONE);
    png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height),
                 8, color_type, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    std::vector<png_bytep> rows(static_cast<std::size_t>(height));
    for (int y = 0; y < height; ++y)
        rows[static_cast<std::size_t>(y)] =
            const_cast<png_bytep>(data + static_cast<std::size_t>(y) * stride);
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

struct Decoded {
    int width = 0;
    int height = 0;
    int channels = 0;  // 1 = gray, 3 = rgb
    std::vector<std::uint8_t> data;
};

inline Decoded read_any(const std::string& path) {
    if (!std::filesystem::exists(path)) throw IoError("file not found: " + path);
    FilePtr fp(std::fopen(path.c_str(), "rb"));
    if (!fp) throw IoError("cannot open for read: " + path);

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw IoError("png_create_read_struct failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw IoError("png_create_info_struct failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw IoError("not a decodable PNG: " + path);
    }
    png_init_io(png, fp.get());
    png_read_info(png, info);

    png_uint_32 w = png_get_image_width(png, info);
    png_uint_32 h = png_get_image_height(png, info);
    int bit_depth = png_get_bit_depth(png, info);
    int color_type = png_get_color_type(png, info);

    if (bit_depth == 16) png_set_strip_16(png);
    if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    if (color_type & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
    png_read_update_info(png, info);

    color_type = png_get_color_type(png, info);
    Decoded out;
    out.width = static_cast<int>(w);
    out.height = static_cast<int>(h);
    out.channels = (color_type == PNG_COLOR_TYPE_GRAY) ? 1 : 3;
    std::size_t stride = png_get_rowbytes(png, info);
    out.data.resize(stride * h);
    std::vector<png_bytep> rows(h);
    for (png_uint_32 y = 0; y < h; ++y) rows[y] = out.data.data() + y * stride;
    png_read_image(png, rows.data());
    png_destroy_read_struct(&png, &info, nullptr);
    return out;
}

}  // namespace detail

inline void write_png(const std::string& path, const Image& img) {
    if (img.empty()) throw IoError("refusing to write empty image: " + path);
    detail::write_rows(path, img.width, img.height, PNG_COLOR_TYPE_RGB, img.rgb.data(),
                       static_cast<std::size_t>(img.width) * 3);
}

inline void write_png(const std::string& path, const GrayImage& img) {
    if (img.empty()) throw IoError("refusing to write empty image: " + path);
    detail::write_rows(path, img.width, img.height, PNG_COLOR_TYPE_GRAY, img.pixels.data(),
                       static_cast<std::size_t>(img.width));
}

inline Image read_rgb_png(const std::string& path) {
    detail::Decoded d = detail::read_any(path);
    Image out;
    out.width = d.width;
    out.height = d.height;
    if (d.channels == 3) {
        out.rgb = std::move(d.data);
    } else {
        out.rgb.resize(d.data.size() * 3);
        for (std::size_t i = 0; i < d.data.size(); ++i) {
            out.rgb[3 * i + 0] = d.data[i];
            out.rgb[3 * i + 1] = d.data[i];
            out.rgb[3 * i + 2] = d.data[i];
        }
    }
    return out;
}

inline GrayImage read_gray_png(const std::string& path) {
    detail::Decoded d = detail::read_any(path);
    if (d.channels == 1) {
        GrayImage out;
        out.width = d.width;
        out.height = d.height;
        out.pixels = std::move(d.data);
        return out;
    }
    Image rgb;
    rgb.width = d.width;
    rgb.height = d.height;
    rgb.rgb = std::move(d.data);
    return to_luma(rgb);
}

}  // namespace ctgen::png_io
