/**
 * ctgen/reasoning.hpp
 *
 * Tag-structured reasoning responses: a think block followed by an answer
 * block holding the enhanced prompt.
 *
 *   <think>chain of thought</think><answer>enhanced prompt</answer>
 *
 * Well-formedness rules (pinned):
 *   - exactly one occurrence of each of the four tags
 *   - the think block closes before the answer block opens (no nesting)
 *   - text outside the blocks is permitted and ignored
 *   - tags match case-sensitively and literally
 *
 * Malformation is data, not an error: parse_response always succeeds and
 * reports the first applicable violation in the order
 * MISSING_THINK < MISSING_ANSWER < DUPLICATE_TAGS < WRONG_ORDER.
 */

#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "ctgen/common.hpp"

namespace ctgen::reasoning {

inline constexpr std::string_view kThinkOpen = "<think>";
inline constexpr std::string_view kThinkClose = "</think>";
inline constexpr std::string_view kAnswerOpen = "<answer>";
inline constexpr std::string_view kAnswerClose = "</answer>";

/// The policy's or oracle's full output text.
struct RawResponse {
    std::string text;
};

enum class Violation {
    NONE,
    MISSING_THINK,
    MISSING_ANSWER,
    WRONG_ORDER,
    DUPLICATE_TAGS,
};

inline const char* to_string(Violation v) {
    switch (v) {
        case Violation::NONE: return "NONE";
        case Violation::MISSING_THINK: return "MISSING_THINK";
        case Violation::MISSING_ANSWER: return "MISSING_ANSWER";
        case Violation::WRONG_ORDER: return "WRONG_ORDER";
        case Violation::DUPLICATE_TAGS: return "DUPLICATE_TAGS";
    }
    return "NONE";
}

struct ParsedResponse {
    std::string think_text;
    std::string answer_text;  // the enhanced prompt when well-formed
    bool well_formed = false;
    Violation violation = Violation::NONE;
};

namespace detail {

inline std::vector<std::size_t> find_all(std::string_view text, std::string_view tag) {
    std::vector<std::size_t> out;
    std::size_t pos = 0;
    while ((pos = text.find(tag, pos)) != std::string_view::npos) {
        out.push_back(pos);
        pos += tag.size();
    }
    return out;
}

}  // namespace detail

inline ParsedResponse parse_response(const RawResponse& raw) {
    std::string_view text = raw.text;
    auto think_open = detail::find_all(text, kThinkOpen);
    auto think_close = detail::find_all(text, kThinkClose);
    auto answer_open = detail::find_all(text, kAnswerOpen);
    auto answer_close = detail::find_all(text, kAnswerClose);

    ParsedResponse out;
    if (think_open.empty() || think_close.empty()) {
        out.violation = Violation::MISSING_THINK;
        return out;
    }
    if (answer_open.empty() || answer_close.empty()) {
        out.violation = Violation::MISSING_ANSWER;
        return out;
    }
    if (think_open.size() != 1 || think_close.size() != 1 || answer_open.size() != 1 ||
        answer_close.size() != 1) {
        out.violation = Violation::DUPLICATE_TAGS;
        return out;
    }
    // Blocks must be properly delimited and fully ordered: think before answer.
    std::size_t to = think_open[0], tc = think_close[0];
    std::size_t ao = answer_open[0], ac = answer_close[0];
    if (!(to < tc && ao < ac && tc + kThinkClose.size() <= ao)) {
        out.violation = Violation::WRONG_ORDER;
        return out;
    }
    out.well_formed = true;
    out.violation = Violation::NONE;
    out.think_text = std::string(text.substr(to + kThinkOpen.size(), tc - to - kThinkOpen.size()));
    out.answer_text = std::string(text.substr(ao + kAnswerOpen.size(), ac - ao - kAnswerOpen.size()));
    return out;
}

/// Binary format reward: 1.0 iff the response parses as well-formed.
inline double format_reward(const RawResponse& raw) {
    return parse_response(raw).well_formed ? 1.0 : 0.0;
}

/// Canonical serialization of a think/answer pair. parse(serialize(p))
/// reproduces p for contents free of tag tokens.
inline std::string serialize_response(std::string_view think, std::string_view answer) {
    std::string out;
    out.reserve(think.size() + answer.size() + 34);
    out += kThinkOpen;
    out += think;
    out += kThinkClose;
    out += kAnswerOpen;
    out += answer;
    out += kAnswerClose;
    return out;
}

}  // namespace ctgen::reasoning
