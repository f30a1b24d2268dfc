/**
 * ctgen/extract.hpp
 *
 * Control-map extraction dispatch. CANNY has a native reference path (the
 * one classical algorithm among the five types); everything else requires a
 * registered backend.
 */

#pragma once

#include <map>
#include <memory>

#include "ctgen/backends.hpp"
#include "ctgen/canny.hpp"
#include "ctgen/control_map.hpp"

namespace ctgen::maps {

class ExtractorRegistry {
public:
    void register_backend(ControlType type,
                          std::shared_ptr<backends::ControlExtractorBackend> backend) {
        backends_[type] = std::move(backend);
    }

    bool has(ControlType type) const {
        return backends_.count(type) > 0 || type == ControlType::CANNY;
    }

    /// Dispatch to the registered backend; CANNY falls back to the native
    /// extractor when nothing is registered for it.
    ControlMap extract(ControlType type, const Image& image,
                       const CannyParams& canny_params = {}) const {
        auto it = backends_.find(type);
        if (it != backends_.end()) {
            ControlMap out = it->second->extract(image, type);
            if (out.control_type != type)
                throw backends::BackendError(backends::Fault::MALFORMED_OUTPUT,
                                             "extractor returned a mistyped control map");
            return out;
        }
        if (type == ControlType::CANNY) return canny_extract(to_luma(image), canny_params);
        throw ConfigError(std::string("no extractor backend registered for control type ") +
                          to_string(type));
    }

private:
    std::map<ControlType, std::shared_ptr<backends::ControlExtractorBackend>> backends_;
};

}  // namespace ctgen::maps
