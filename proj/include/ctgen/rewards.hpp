/**
 * ctgen/rewards.hpp
 *
 * Scalar rewards.
 *
 * Reinforcement fine-tuning: total = alignment + format, where alignment is
 * the image-text score between the ground-truth image and the enhanced
 * prompt, normalized into [0,1] via the scorer's declared range, and format
 * is the binary tag-structure reward. Malformed responses score alignment 0
 * (there is no extractable prompt to score).
 *
 * Inference-time output reward: total = semantic - structural_penalty, with
 * the semantic term on the preference scorer's raw scale and the penalty a
 * perceptual distance between the candidate's re-extracted control map and
 * the request's control map. Per-term weights default to 1 (the literal
 * formula); they are applied before the subtraction.
 */

#pragma once

#include <algorithm>
#include <string>

#include "ctgen/backends.hpp"
#include "ctgen/reasoning.hpp"

namespace ctgen::rewards {

using backends::ControlExtractorBackend;
using backends::ImageTextScorer;
using backends::PerceptualDistance;
using reasoning::RawResponse;

struct RewardBreakdown {
    double align = 0.0;   // normalized alignment term, in [0,1]
    double format = 0.0;  // binary format term, in {0,1}
    double total = 0.0;   // align + format exactly
};

struct OrmReward {
    double semantic = 0.0;            // weighted preference-scorer term
    double structural_penalty = 0.0;  // weighted perceptual term, >= 0
    double total = 0.0;               // semantic - structural_penalty exactly
};

struct OrmWeights {
    double semantic = 1.0;
    double structural = 1.0;
};

/// Map a raw scorer output into [0,1] using the adapter's declared range.
inline double normalize_score(double raw, backends::ScoreRange range) {
    if (range.hi <= range.lo) throw DataError("scorer declared an empty range");
    return std::clamp((raw - range.lo) / (range.hi - range.lo), 0.0, 1.0);
}

/// Alignment reward between the ground-truth image and an enhanced prompt.
/// Empty prompts are degenerate responses, not errors: reward 0 with the
/// flag set when the caller asks for it.
inline double alignment_reward(const Image& gt_image, const std::string& enhanced_prompt,
                               const ImageTextScorer& scorer, bool* degenerate = nullptr) {
    if (degenerate) *degenerate = false;
    if (trim(enhanced_prompt).empty()) {
        if (degenerate) *degenerate = true;
        return 0.0;
    }
    return normalize_score(scorer.score(gt_image, enhanced_prompt), scorer.range());
}

/// Combined reinforcement fine-tuning reward for one response.
inline RewardBreakdown rft_reward(const Image& gt_image, const RawResponse& response,
                                  const ImageTextScorer& scorer) {
    RewardBreakdown out;
    auto parsed = reasoning::parse_response(response);
    out.format = parsed.well_formed ? 1.0 : 0.0;
    out.align = parsed.well_formed ? alignment_reward(gt_image, parsed.answer_text, scorer) : 0.0;
    out.total = out.align + out.format;
    return out;
}

inline OrmReward orm_reward_from_terms(double raw_semantic, double raw_penalty,
                                       OrmWeights weights = {}) {
    OrmReward out;
    out.semantic = weights.semantic * raw_semantic;
    out.structural_penalty = weights.structural * raw_penalty;
    out.total = out.semantic - out.structural_penalty;
    return out;
}

/// Output reward for one candidate image (semantic score is computed against
/// the ORIGINAL prompt, not the enhanced one).
inline OrmReward orm_reward(const Image& candidate_image, const std::string& original_prompt,
                            const ControlMap& control_map, const ImageTextScorer& scorer,
                            const PerceptualDistance& perceptual,
                            const ControlExtractorBackend& extractor,
                            OrmWeights weights = {}) {
    ControlMap extracted = extractor.extract(candidate_image, control_map.control_type);
    return orm_reward_from_terms(scorer.score(candidate_image, original_prompt),
                                 perceptual.distance(render(extracted), render(control_map)),
                                 weights);
}

}  // namespace ctgen::rewards
