/**
 * ctgen/image.hpp
 *
 * Raster types exchanged with backends: 8-bit RGB images and 8-bit
 * grayscale rasters. Backends needing other formats convert internally.
 */

#pragma once

#include <cstdint>
#include <vector>

#include "ctgen/common.hpp"

namespace ctgen {

/// 8-bit RGB raster, interleaved row-major.
struct Image {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> rgb;  // size = 3 * width * height

    bool empty() const { return width <= 0 || height <= 0; }
    std::size_t pixel_count() const {
        return static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
    }

    static Image filled(int w, int h, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
        Image img;
        img.width = w;
        img.height = h;
        img.rgb.resize(static_cast<std::size_t>(w) * h * 3);
        for (std::size_t i = 0; i < img.pixel_count(); ++i) {
            img.rgb[3 * i + 0] = r;
            img.rgb[3 * i + 1] = g;
            img.rgb[3 * i + 2] = b;
        }
        return img;
    }

    bool operator==(const Image& o) const {
        return width == o.width && height == o.height && rgb == o.rgb;
    }
};

/// 8-bit single-channel raster, row-major.
struct GrayImage {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> pixels;  // size = width * height

    bool empty() const { return width <= 0 || height <= 0; }

    static GrayImage filled(int w, int h, std::uint8_t v) {
        GrayImage img;
        img.width = w;
        img.height = h;
        img.pixels.assign(static_cast<std::size_t>(w) * h, v);
        return img;
    }

    bool operator==(const GrayImage& o) const {
        return width == o.width && height == o.height && pixels == o.pixels;
    }
};

/// ITU-R 601 luma conversion.
inline GrayImage to_luma(const Image& img) {
    GrayImage out;
    out.width = img.width;
    out.height = img.height;
    out.pixels.resize(img.pixel_count());
    for (std::size_t i = 0; i < img.pixel_count(); ++i) {
        double y = 0.299 * img.rgb[3 * i + 0] + 0.587 * img.rgb[3 * i + 1] +
                   0.114 * img.rgb[3 * i + 2];
        out.pixels[i] = static_cast<std::uint8_t>(y + 0.5);
    }
    return out;
}

inline Image gray_to_rgb(const GrayImage& g) {
    Image out;
    out.width = g.width;
    out.height = g.height;
    out.rgb.resize(g.pixels.size() * 3);
    for (std::size_t i = 0; i < g.pixels.size(); ++i) {
        out.rgb[3 * i + 0] = g.pixels[i];
        out.rgb[3 * i + 1] = g.pixels[i];
        out.rgb[3 * i + 2] = g.pixels[i];
    }
    return out;
}

inline std::uint64_t image_digest(const Image& img) {
    std::uint64_t h = fnv1a64_combine(kFnvOffset, static_cast<std::uint64_t>(img.width));
    h = fnv1a64_combine(h, static_cast<std::uint64_t>(img.height));
    return fnv1a64(std::string_view(reinterpret_cast<const char*>(img.rgb.data()),
                                    img.rgb.size()),
                   h);
}

inline std::uint64_t image_digest(const GrayImage& img) {
    std::uint64_t h = fnv1a64_combine(kFnvOffset, static_cast<std::uint64_t>(img.width));
    h = fnv1a64_combine(h, static_cast<std::uint64_t>(img.height));
    return fnv1a64(std::string_view(reinterpret_cast<const char*>(img.pixels.data()),
                                    img.pixels.size()),
                   h);
}

}  // namespace ctgen
