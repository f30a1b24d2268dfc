/**
 * ctgen/control_map.hpp
 *
 * Typed control rasters: binary edge masks (CANNY, binarized HED/LINEART),
 * 8-bit grayscale (DEPTH, raw HED/LINEART), and integer label maps (SEG).
 */

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ctgen/common.hpp"
#include "ctgen/image.hpp"

namespace ctgen {

enum class ControlType { SEG, CANNY, HED, LINEART, DEPTH };

inline const char* to_string(ControlType t) {
    switch (t) {
        case ControlType::SEG: return "SEG";
        case ControlType::CANNY: return "CANNY";
        case ControlType::HED: return "HED";
        case ControlType::LINEART: return "LINEART";
        case ControlType::DEPTH: return "DEPTH";
    }
    return "SEG";
}

inline ControlType control_type_from_string(const std::string& s) {
    if (s == "SEG") return ControlType::SEG;
    if (s == "CANNY") return ControlType::CANNY;
    if (s == "HED") return ControlType::HED;
    if (s == "LINEART") return ControlType::LINEART;
    if (s == "DEPTH") return ControlType::DEPTH;
    throw DataError("unknown control type: " + s);
}

enum class MapKind { BINARY, GRAY8, LABELS };

/**
 * A control raster tagged with its control type.
 *
 * Payload semantics by kind:
 *   BINARY — values in {0, 1}
 *   GRAY8  — values in 0..255
 *   LABELS — class ids in 0..class_count-1
 */
struct ControlMap {
    ControlType control_type = ControlType::CANNY;
    MapKind kind = MapKind::BINARY;
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> data;  // width * height, row-major
    int class_count = 0;             // LABELS only

    bool empty() const { return width <= 0 || height <= 0; }
    std::size_t size() const { return data.size(); }

    bool operator==(const ControlMap& o) const {
        return control_type == o.control_type && kind == o.kind && width == o.width &&
               height == o.height && data == o.data && class_count == o.class_count;
    }
};

inline void validate(const ControlMap& m) {
    if (m.data.size() != static_cast<std::size_t>(m.width) * static_cast<std::size_t>(m.height))
        throw DataError("control map payload does not match dimensions");
    if (m.kind == MapKind::BINARY) {
        for (auto v : m.data)
            if (v > 1) throw DataError("binary control map contains value > 1");
    }
    if (m.kind == MapKind::LABELS) {
        for (auto v : m.data)
            if (v >= m.class_count)
                throw DataError("label map contains class id outside declared class count");
    }
}

inline std::uint64_t map_digest(const ControlMap& m) {
    std::uint64_t h = fnv1a64_combine(kFnvOffset, static_cast<std::uint64_t>(m.width));
    h = fnv1a64_combine(h, static_cast<std::uint64_t>(m.height));
    h = fnv1a64_combine(h, static_cast<std::uint64_t>(m.kind));
    h = fnv1a64_combine(h, static_cast<std::uint64_t>(m.control_type));
    return fnv1a64(std::string_view(reinterpret_cast<const char*>(m.data.data()), m.data.size()), h);
}

/// Threshold a grayscale map into a binary one: pixel >= threshold -> 1.
inline ControlMap binarize(const ControlMap& map, std::uint8_t threshold) {
    if (map.kind == MapKind::LABELS)
        throw DataError("binarize expects a grayscale or binary payload");
    ControlMap out = map;
    out.kind = MapKind::BINARY;
    out.class_count = 0;
    for (auto& v : out.data) v = (v >= threshold) ? 1 : 0;
    return out;
}

/// Render a control map as an RGB image (binary as {0,255}, labels spread
/// over the 8-bit range) for perceptual scoring and PNG serialization.
inline Image render(const ControlMap& m) {
    GrayImage g;
    g.width = m.width;
    g.height = m.height;
    g.pixels.resize(m.data.size());
    switch (m.kind) {
        case MapKind::BINARY:
            for (std::size_t i = 0; i < m.data.size(); ++i)
                g.pixels[i] = m.data[i] ? 255 : 0;
            break;
        case MapKind::GRAY8:
            g.pixels = m.data;
            break;
        case MapKind::LABELS: {
            int denom = m.class_count > 1 ? m.class_count - 1 : 1;
            for (std::size_t i = 0; i < m.data.size(); ++i)
                g.pixels[i] = static_cast<std::uint8_t>((m.data[i] * 255) / denom);
            break;
        }
    }
    return gray_to_rgb(g);
}

/// Grayscale view used by PNG serialization (binary maps as {0,255}).
inline GrayImage to_gray(const ControlMap& m) {
    GrayImage g;
    g.width = m.width;
    g.height = m.height;
    g.pixels.resize(m.data.size());
    if (m.kind == MapKind::BINARY) {
        for (std::size_t i = 0; i < m.data.size(); ++i) g.pixels[i] = m.data[i] ? 255 : 0;
    } else {
        g.pixels = m.data;
    }
    return g;
}

/// Inverse of to_gray for BINARY/GRAY8 kinds.
inline ControlMap map_from_gray(const GrayImage& g, ControlType type, MapKind kind,
                                int class_count = 0) {
    ControlMap m;
    m.control_type = type;
    m.kind = kind;
    m.width = g.width;
    m.height = g.height;
    m.class_count = class_count;
    m.data = g.pixels;
    if (kind == MapKind::BINARY)
        for (auto& v : m.data) v = v >= 128 ? 1 : 0;
    return m;
}

}  // namespace ctgen
