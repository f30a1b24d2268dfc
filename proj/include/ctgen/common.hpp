/**
 * ctgen/common.hpp
 *
 * Shared plumbing: error hierarchy, stable 64-bit hashing, and the
 * root-seed derivation scheme used by every pipeline stage.
 *
 * All randomness in the pipeline flows from one root seed per command,
 * fanned out with derive_seed(root, stage_name, index). Two runs with the
 * same root seed and config therefore produce identical artifacts.
 */

#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace ctgen {

// ============================================================================
// Errors
// ============================================================================

class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Bad or missing configuration (CLI exit code 2).
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Malformed input data, schema violations, missing files (CLI exit code 4).
class DataError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

// ============================================================================
// Hashing / seed derivation
// ============================================================================

inline constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
inline constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;

inline std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t h = kFnvOffset) {
    for (unsigned char c : bytes) {
        h ^= static_cast<std::uint64_t>(c);
        h *= kFnvPrime;
    }
    return h;
}

inline std::uint64_t fnv1a64_combine(std::uint64_t h, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) {
        h ^= (v >> (8 * i)) & 0xffULL;
        h *= kFnvPrime;
    }
    return h;
}

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Stable per-stage seed: root seed XOR stage-name hash, mixed per index.
inline std::uint64_t derive_seed(std::uint64_t root, std::string_view stage,
                                 std::uint64_t index = 0) {
    std::uint64_t h = fnv1a64(stage);
    h = fnv1a64_combine(h, root);
    h = fnv1a64_combine(h, index);
    return splitmix64(h);
}

/// Map a hash to [0, 1).
inline double unit_from_hash(std::uint64_t h) {
    return static_cast<double>(h >> 11) * (1.0 / 9007199254740992.0);  // 2^53
}

inline std::string hex64(std::uint64_t v) {
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = digits[v & 0xf];
        v >>= 4;
    }
    return out;
}

// ============================================================================
// Small string helpers
// ============================================================================

inline std::string trim(std::string_view s) {
    const char* ws = " \t\n\r";
    auto start = s.find_first_not_of(ws);
    if (start == std::string_view::npos) return {};
    auto end = s.find_last_not_of(ws);
    return std::string(s.substr(start, end - start + 1));
}

inline std::string to_lower(std::string_view s) {
    std::string out(s);
    for (char& c : out)
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    return out;
}

inline bool contains_ci(std::string_view haystack, std::string_view needle) {
    if (needle.empty()) return true;
    return to_lower(haystack).find(to_lower(needle)) != std::string::npos;
}

}  // namespace ctgen
