/**
 * ctgen/canny.hpp
 *
 * Reference Canny edge extractor: Gaussian smoothing, 3x3 Sobel gradients,
 * non-maximum suppression with 4-bin direction quantization, and
 * double-threshold hysteresis over the 8-neighborhood.
 *
 * Thresholds apply to the raw L2 Sobel magnitude. Borders replicate.
 * Every choice is pinned so the extractor is bit-deterministic.
 */

#pragma once

#include <cmath>
#include <cstdint>
#include <deque>
#include <vector>

#include "ctgen/common.hpp"
#include "ctgen/control_map.hpp"
#include "ctgen/image.hpp"

namespace ctgen::maps {

struct CannyParams {
    double gaussian_sigma = 1.4;
    int low_threshold = 100;
    int high_threshold = 200;
};

inline void validate(const CannyParams& p) {
    if (p.gaussian_sigma <= 0.0) throw DataError("canny: gaussian_sigma must be > 0");
    if (p.low_threshold < 0 || p.high_threshold < 0 || p.low_threshold >= p.high_threshold)
        throw DataError("canny: thresholds must satisfy 0 <= low < high");
}

namespace detail {

inline std::vector<double> gaussian_kernel(double sigma) {
    int radius = static_cast<int>(std::ceil(3.0 * sigma));
    std::vector<double> k(static_cast<std::size_t>(2 * radius + 1));
    double sum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        double v = std::exp(-(i * i) / (2.0 * sigma * sigma));
        k[static_cast<std::size_t>(i + radius)] = v;
        sum += v;
    }
    for (auto& v : k) v /= sum;
    return k;
}

inline int clamp_index(int v, int lo, int hi) { return v < lo ? lo : (v > hi ? hi : v); }

/// Separable Gaussian blur with replicated borders.
inline std::vector<double> blur(const GrayImage& img, double sigma) {
    const int w = img.width, h = img.height;
    auto k = gaussian_kernel(sigma);
    int radius = (static_cast<int>(k.size()) - 1) / 2;
    std::vector<double> tmp(static_cast<std::size_t>(w) * h);
    std::vector<double> out(static_cast<std::size_t>(w) * h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int i = -radius; i <= radius; ++i)
                acc += k[static_cast<std::size_t>(i + radius)] *
                       img.pixels[static_cast<std::size_t>(y) * w + clamp_index(x + i, 0, w - 1)];
            tmp[static_cast<std::size_t>(y) * w + x] = acc;
        }
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int i = -radius; i <= radius; ++i)
                acc += k[static_cast<std::size_t>(i + radius)] *
                       tmp[static_cast<std::size_t>(clamp_index(y + i, 0, h - 1)) * w + x];
            out[static_cast<std::size_t>(y) * w + x] = acc;
        }
    return out;
}

}  // namespace detail

inline ControlMap canny_extract(const GrayImage& image, const CannyParams& params = {}) {
    if (image.empty()) throw DataError("canny: empty image");
    validate(params);

    const int w = image.width, h = image.height;
    const std::size_t n = static_cast<std::size_t>(w) * h;
    std::vector<double> smooth = detail::blur(image, params.gaussian_sigma);

    auto at = [&](int x, int y) {
        return smooth[static_cast<std::size_t>(detail::clamp_index(y, 0, h - 1)) * w +
                      detail::clamp_index(x, 0, w - 1)];
    };

    // 3x3 Sobel.
    std::vector<double> mag(n, 0.0);
    std::vector<std::uint8_t> dir(n, 0);  // 0: E-W, 1: NE-SW, 2: N-S, 3: NW-SE
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double gx = -at(x - 1, y - 1) - 2.0 * at(x - 1, y) - at(x - 1, y + 1) +
                        at(x + 1, y - 1) + 2.0 * at(x + 1, y) + at(x + 1, y + 1);
            double gy = -at(x - 1, y - 1) - 2.0 * at(x, y - 1) - at(x + 1, y - 1) +
                        at(x - 1, y + 1) + 2.0 * at(x, y + 1) + at(x + 1, y + 1);
            std::size_t i = static_cast<std::size_t>(y) * w + x;
            mag[i] = std::sqrt(gx * gx + gy * gy);
            double angle = std::atan2(gy, gx) * 180.0 / 3.14159265358979323846;
            if (angle < 0) angle += 180.0;
            if (angle < 22.5 || angle >= 157.5)
                dir[i] = 0;
            else if (angle < 67.5)
                dir[i] = 1;
            else if (angle < 112.5)
                dir[i] = 2;
            else
                dir[i] = 3;
        }
    }

    // Non-maximum suppression along the quantized gradient direction.
    // Ties break toward the first neighbor to keep single-pixel ridges.
    auto mag_at = [&](int x, int y) -> double {
        if (x < 0 || x >= w || y < 0 || y >= h) return 0.0;
        return mag[static_cast<std::size_t>(y) * w + x];
    };
    std::vector<double> nms(n, 0.0);
    static constexpr int off[4][2][2] = {
        {{1, 0}, {-1, 0}},   // gradient E-W: compare left/right
        {{1, 1}, {-1, -1}},  // gradient NE-SW
        {{0, 1}, {0, -1}},   // gradient N-S: compare up/down
        {{-1, 1}, {1, -1}},  // gradient NW-SE
    };
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            std::size_t i = static_cast<std::size_t>(y) * w + x;
            const auto& o = off[dir[i]];
            double n1 = mag_at(x + o[0][0], y + o[0][1]);
            double n2 = mag_at(x + o[1][0], y + o[1][1]);
            if (mag[i] > n1 && mag[i] >= n2) nms[i] = mag[i];
        }

    // Hysteresis: grow weak edges (>= low) reachable from strong ones (>= high).
    ControlMap out;
    out.control_type = ControlType::CANNY;
    out.kind = MapKind::BINARY;
    out.width = w;
    out.height = h;
    out.data.assign(n, 0);
    std::deque<std::size_t> frontier;
    for (std::size_t i = 0; i < n; ++i)
        if (nms[i] >= params.high_threshold) {
            out.data[i] = 1;
            frontier.push_back(i);
        }
    while (!frontier.empty()) {
        std::size_t i = frontier.front();
        frontier.pop_front();
        int x = static_cast<int>(i % static_cast<std::size_t>(w));
        int y = static_cast<int>(i / static_cast<std::size_t>(w));
        for (int dy = -1; dy <= 1; ++dy)
            for (int dx = -1; dx <= 1; ++dx) {
                if (dx == 0 && dy == 0) continue;
                int nx = x + dx, ny = y + dy;
                if (nx < 0 || nx >= w || ny < 0 || ny >= h) continue;
                std::size_t j = static_cast<std::size_t>(ny) * w + nx;
                if (!out.data[j] && nms[j] >= params.low_threshold) {
                    out.data[j] = 1;
                    frontier.push_back(j);
                }
            }
    }
    return out;
}

}  // namespace ctgen::maps
