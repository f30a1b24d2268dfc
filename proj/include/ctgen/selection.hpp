/**
 * ctgen/selection.hpp
 *
 * Inference-time scaling: sample K enhanced prompts from the policy,
 * generate one candidate image per prompt, score every candidate with the
 * output reward (semantic term against the ORIGINAL prompt, structural
 * penalty against the request's control map), and return the argmax.
 *
 * Ties break toward the lowest candidate index. Unscorable candidates
 * (generation or extraction failures) are logged and never win.
 */

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ctgen/backends.hpp"
#include "ctgen/curation.hpp"
#include "ctgen/extract.hpp"
#include "ctgen/reasoning.hpp"
#include "ctgen/rewards.hpp"

namespace ctgen::selection {

using backends::BackendSuite;
using nlohmann::json;
using rewards::OrmReward;
using rewards::OrmWeights;

// ============================================================================
// Types
// ============================================================================

struct Candidate {
    int index = 0;
    std::string enhanced_prompt;
    std::uint64_t generation_seed = 0;
    Image image;
    ControlMap extracted_map;
    OrmReward reward;
    bool scorable = true;
    std::string failure;  // populated when scorable is false
};

struct SelectionResult {
    int winner_index = -1;
    std::vector<Candidate> candidates;
    double elapsed_seconds = 0.0;  // in-memory only; never persisted
};

struct SelectionConfig {
    int k = 10;
    OrmWeights weights;
    bool normalize_terms = false;  // min-max normalize both terms over the set
    int enhance_retry_budget = 3;  // resamples per malformed draw
    bool fallback_to_original = true;
    maps::CannyParams canny_params;
};

// ============================================================================
// Stages
// ============================================================================

/// Sample K enhanced prompts, resampling malformed draws up to the retry
/// budget. Zero survivors either falls back to the original prompt or throws.
inline std::vector<std::string> enhance_prompts(backends::PolicyBackend& policy,
                                                const std::string& question, int k,
                                                std::uint64_t seed,
                                                const SelectionConfig& config,
                                                const std::string& original_prompt,
                                                std::vector<json>* drop_log = nullptr) {
    if (k < 1) throw ConfigError("enhance_prompts: K must be >= 1");
    std::vector<std::string> prompts;
    for (int i = 0; i < k; ++i) {
        bool kept = false;
        for (int attempt = 0; attempt <= config.enhance_retry_budget; ++attempt) {
            auto responses = policy.sample(
                question, 1, 1.0,
                derive_seed(seed, "enhance", static_cast<std::uint64_t>(i) * 1000 +
                                                 static_cast<std::uint64_t>(attempt)));
            auto parsed = reasoning::parse_response(responses.at(0));
            if (parsed.well_formed && !trim(parsed.answer_text).empty()) {
                prompts.push_back(parsed.answer_text);
                kept = true;
                break;
            }
        }
        if (!kept && drop_log)
            drop_log->push_back(json{{"event", "enhance_drop"}, {"slot", i}});
    }
    if (prompts.empty()) {
        if (config.fallback_to_original && !trim(original_prompt).empty()) {
            if (drop_log) drop_log->push_back(json{{"event", "enhance_fallback"}});
            prompts.push_back(original_prompt);
        } else {
            throw DataError("enhance_prompts: no well-formed prompt survived sampling");
        }
    }
    return prompts;
}

/// One image per prompt, each with its own recorded seed. A per-candidate
/// generation failure marks that candidate unscorable without aborting.
inline std::vector<Candidate> generate_candidates(backends::GeneratorBackend& generator,
                                                  const std::vector<std::string>& prompts,
                                                  const ControlMap& control_map,
                                                  std::uint64_t seed) {
    if (prompts.empty()) throw DataError("generate_candidates: no prompts");
    std::vector<Candidate> out;
    out.reserve(prompts.size());
    for (std::size_t i = 0; i < prompts.size(); ++i) {
        Candidate c;
        c.index = static_cast<int>(i);
        c.enhanced_prompt = prompts[i];
        c.generation_seed = derive_seed(seed, "generate", i);
        try {
            c.image = generator.generate(prompts[i], control_map, c.generation_seed);
            if (c.image.width != control_map.width || c.image.height != control_map.height)
                throw backends::BackendError(backends::Fault::MALFORMED_OUTPUT,
                                             "generator changed dimensions");
        } catch (const Error& e) {
            c.scorable = false;
            c.failure = e.what();
        }
        out.push_back(std::move(c));
    }
    return out;
}

/// Score every scorable candidate and pick the argmax of the total reward.
inline SelectionResult select_best(std::vector<Candidate> candidates,
                                   const std::string& original_prompt,
                                   const ControlMap& control_map, const BackendSuite& backends,
                                   const maps::ExtractorRegistry& registry,
                                   const SelectionConfig& config) {
    struct RawTerms {
        double semantic = 0.0;
        double penalty = 0.0;
    };
    std::vector<std::optional<RawTerms>> terms(candidates.size());

    for (auto& c : candidates) {
        if (!c.scorable) continue;
        try {
            c.extracted_map =
                registry.extract(control_map.control_type, c.image, config.canny_params);
            RawTerms t;
            t.semantic = backends.preference_scorer->score(c.image, original_prompt);
            t.penalty =
                backends.perceptual->distance(render(c.extracted_map), render(control_map));
            terms[static_cast<std::size_t>(c.index)] = t;
        } catch (const Error& e) {
            c.scorable = false;
            c.failure = e.what();
        }
    }

    if (config.normalize_terms) {
        double smin = 0.0, smax = 0.0, pmin = 0.0, pmax = 0.0;
        bool first = true;
        for (const auto& t : terms) {
            if (!t) continue;
            if (first) {
                smin = smax = t->semantic;
                pmin = pmax = t->penalty;
                first = false;
            } else {
                smin = std::min(smin, t->semantic);
                smax = std::max(smax, t->semantic);
                pmin = std::min(pmin, t->penalty);
                pmax = std::max(pmax, t->penalty);
            }
        }
        for (auto& t : terms) {
            if (!t) continue;
            t->semantic = smax > smin ? (t->semantic - smin) / (smax - smin) : 0.0;
            t->penalty = pmax > pmin ? (t->penalty - pmin) / (pmax - pmin) : 0.0;
        }
    }

    SelectionResult result;
    for (auto& c : candidates) {
        if (!c.scorable) continue;
        const auto& t = terms[static_cast<std::size_t>(c.index)];
        c.reward = rewards::orm_reward_from_terms(t->semantic, t->penalty, config.weights);
        if (result.winner_index < 0 ||
            c.reward.total >
                candidates[static_cast<std::size_t>(result.winner_index)].reward.total)
            result.winner_index = c.index;
    }
    if (result.winner_index < 0) throw DataError("select_best: no scorable candidate");
    result.candidates = std::move(candidates);
    return result;
}

// ============================================================================
// End-to-end inference
// ============================================================================

struct InferenceRequest {
    std::string original_prompt;
    ControlMap control_map;
    std::string control_image_path;  // recorded in the question template
    int k = 10;
    std::uint64_t seed = 0;
};

struct InferenceOutcome {
    Image image;  // the winner
    SelectionResult selection;
    json audit;  // one JSON-Lines row: request digest, candidates, winner index
};

inline json audit_row(const InferenceRequest& request, const SelectionResult& result) {
    json rows = json::array();
    for (const auto& c : result.candidates) {
        json row{{"index", c.index},
                 {"enhanced_prompt", c.enhanced_prompt},
                 {"generation_seed", c.generation_seed},
                 {"scorable", c.scorable}};
        if (c.scorable) {
            row["semantic"] = c.reward.semantic;
            row["structural_penalty"] = c.reward.structural_penalty;
            row["total"] = c.reward.total;
        } else {
            row["failure"] = c.failure;
        }
        rows.push_back(std::move(row));
    }
    std::uint64_t digest = fnv1a64_combine(fnv1a64(request.original_prompt),
                                           map_digest(request.control_map));
    digest = fnv1a64_combine(digest, request.seed);
    digest = fnv1a64_combine(digest, static_cast<std::uint64_t>(request.k));
    return json{{"request_digest", hex64(digest)},
                {"original_prompt", request.original_prompt},
                {"control_type", to_string(request.control_map.control_type)},
                {"k", request.k},
                {"seed", request.seed},
                {"candidates", std::move(rows)},
                {"winner_index", result.winner_index}};
}

/// Compose question -> enhanced prompts -> candidates -> argmax selection.
/// Deterministic end to end under mock backends with a fixed seed.
inline InferenceOutcome run_inference(const InferenceRequest& request,
                                      const BackendSuite& backends,
                                      const maps::ExtractorRegistry& registry,
                                      const SelectionConfig& config) {
    if (!backends.policy || !backends.generator || !backends.preference_scorer ||
        !backends.perceptual)
        throw ConfigError("run_inference: backend suite not fully wired");

    std::string question = curation::build_question(
        request.control_map.control_type, request.original_prompt, request.control_image_path);

    std::vector<json> drops;
    auto prompts =
        enhance_prompts(*backends.policy, question, request.k,
                        derive_seed(request.seed, "infer-enhance"), config,
                        request.original_prompt, &drops);
    auto candidates = generate_candidates(*backends.generator, prompts, request.control_map,
                                          derive_seed(request.seed, "infer-generate"));
    auto selection = select_best(std::move(candidates), request.original_prompt,
                                 request.control_map, backends, registry, config);

    InferenceOutcome out;
    out.image = selection.candidates[static_cast<std::size_t>(selection.winner_index)].image;
    out.audit = audit_row(request, selection);
    if (!drops.empty()) out.audit["enhance_events"] = drops;
    out.selection = std::move(selection);
    return out;
}

}  // namespace ctgen::selection
