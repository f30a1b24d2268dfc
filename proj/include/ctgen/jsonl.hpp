/**
 * ctgen/jsonl.hpp
 *
 * JSON-Lines persistence with strict schemas: unknown fields are rejected
 * with the offending line number.
 */

#pragma once

#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "ctgen/common.hpp"

namespace ctgen::jsonl {

using nlohmann::json;

struct Line {
    json value;
    std::size_t line_number = 0;  // 1-based
};

inline std::vector<Line> read_lines(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open: " + path);
    std::vector<Line> out;
    std::string line;
    std::size_t number = 0;
    while (std::getline(in, line)) {
        ++number;
        if (trim(line).empty()) continue;
        json value = json::parse(line, nullptr, false);
        if (value.is_discarded())
            throw DataError(path + ":" + std::to_string(number) + ": invalid JSON");
        out.push_back({std::move(value), number});
    }
    return out;
}

inline void write_lines(const std::string& path, const std::vector<json>& rows) {
    std::filesystem::path p(path);
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot open for write: " + path);
    for (const auto& row : rows) out << row.dump() << "\n";
}

/// Strict field check: every `required` key present, no key outside
/// required + optional. Violations name the line.
inline void require_fields(const json& obj, const std::set<std::string>& required,
                           const std::set<std::string>& optional, std::size_t line_number,
                           const std::string& context) {
    if (!obj.is_object())
        throw DataError(context + ":" + std::to_string(line_number) + ": expected a JSON object");
    for (const auto& key : required)
        if (!obj.contains(key))
            throw DataError(context + ":" + std::to_string(line_number) + ": missing field '" +
                            key + "'");
    for (const auto& [key, _] : obj.items())
        if (!required.count(key) && !optional.count(key))
            throw DataError(context + ":" + std::to_string(line_number) + ": unknown field '" +
                            key + "'");
}

}  // namespace ctgen::jsonl
