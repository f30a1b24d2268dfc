/**
 * ctgen/curation.hpp
 *
 * Visual-reasoning dataset construction: question templating, oracle calls,
 * filtering, and JSON-Lines persistence.
 *
 * Filtering rules (rejection reasons, checked in this order per record):
 *   BAD_FORMAT    — response does not parse as think-then-answer
 *   GT_REFERENCE  — think or answer text contains a blocklist phrase
 *                   (case-insensitive substring match)
 *   EMPTY_ANSWER  — well-formed but the answer text trims to nothing
 *
 * Oracle failures never merge into the dataset: they land in a sidecar
 * failure log with the fault kind.
 *
 * File format: line 1 is the manifest, every following line one record.
 * The schema is strict; unknown fields are rejected with their line number.
 */

#pragma once

#include <algorithm>
#include <future>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ctgen/backends.hpp"
#include "ctgen/jsonl.hpp"
#include "ctgen/png_io.hpp"
#include "ctgen/reasoning.hpp"

namespace ctgen::curation {

using backends::OracleClient;
using backends::OracleRequest;
using backends::RetryPolicy;
using nlohmann::json;

inline constexpr const char* kQuestionTemplateVersion = "ctgen-question/v1";
inline constexpr const char* kEmptyPromptMarker = "(no original prompt provided)";

inline const std::vector<std::string>& default_blocklist() {
    static const std::vector<std::string> phrases = {
        "ground truth", "reference image", "the provided image", "target image",
        "the original image"};
    return phrases;
}

// ============================================================================
// Records
// ============================================================================

enum class RejectReason { BAD_FORMAT, GT_REFERENCE, EMPTY_ANSWER };

inline const char* to_string(RejectReason r) {
    switch (r) {
        case RejectReason::BAD_FORMAT: return "BAD_FORMAT";
        case RejectReason::GT_REFERENCE: return "GT_REFERENCE";
        case RejectReason::EMPTY_ANSWER: return "EMPTY_ANSWER";
    }
    return "BAD_FORMAT";
}

inline RejectReason reject_reason_from_string(const std::string& s) {
    if (s == "BAD_FORMAT") return RejectReason::BAD_FORMAT;
    if (s == "GT_REFERENCE") return RejectReason::GT_REFERENCE;
    if (s == "EMPTY_ANSWER") return RejectReason::EMPTY_ANSWER;
    throw DataError("unknown rejection reason: " + s);
}

struct CurationRecord {
    std::string id;
    ControlType control_type = ControlType::CANNY;
    std::string control_image_path;
    std::optional<std::string> gt_image_path;
    std::string original_prompt;
    std::string question_text;
    std::string response_text;
    std::string think_text;
    std::string answer_text;
    bool well_formed = false;
    std::optional<RejectReason> rejected_reason;
};

struct Manifest {
    std::map<std::string, std::size_t> counts_per_type;
    std::size_t total = 0;
    std::string tool_version;
    std::string config_digest;
    std::uint64_t seed = 0;
};

struct Dataset {
    std::vector<CurationRecord> records;
    Manifest manifest;
};

struct FailureEntry {
    std::string id;
    std::string question_text;
    std::string fault;
    std::string message;
};

// ============================================================================
// Question building
// ============================================================================

/// Deterministic question template. The template version is embedded in the
/// text itself so every record carries it.
inline std::string build_question(ControlType control_type, const std::string& original_prompt,
                                  const std::string& control_image_path) {
    // The control image must exist and decode before we spend an oracle call.
    (void)png_io::read_rgb_png(control_image_path);

    std::string prompt_part = trim(original_prompt).empty()
                                  ? std::string(kEmptyPromptMarker)
                                  : "\"" + original_prompt + "\"";
    std::string out;
    out += std::string("[") + kQuestionTemplateVersion + "]\n";
    out += std::string("You are given a ") + to_string(control_type) +
           " control image describing the layout of a scene, plus the original text prompt " +
           prompt_part + ".\n";
    out +=
        "Analyze the layout structures visible in the control signal, then infer the objects, "
        "attributes, and spatial relationships the target image should contain, including "
        "details not explicitly mentioned in the original prompt but inferable from the "
        "control image.\n";
    out +=
        "Write your reasoning inside <think></think> tags, followed by the enriched prompt "
        "inside <answer></answer> tags.";
    return out;
}

// ============================================================================
// Oracle interaction
// ============================================================================

struct CurationRequest {
    std::string id;
    ControlType control_type = ControlType::CANNY;
    std::string control_image_path;
    std::optional<std::string> gt_image_path;
    std::string original_prompt;
};

inline constexpr const char* kOracleSystemPrompt =
    "You describe scenes for a controllable image generator. Reason step by step about the "
    "control image before answering.";

/// One oracle round-trip; throws BackendError after retries are exhausted.
inline CurationRecord curate_record(const CurationRequest& request,
                                    const std::string& question_text, const Image& control_image,
                                    const std::optional<Image>& gt_image, OracleClient& oracle,
                                    const RetryPolicy& retry, std::uint64_t seed) {
    OracleRequest call;
    call.system_prompt = kOracleSystemPrompt;
    call.user_prompt = question_text;
    call.attachments.push_back(control_image);
    if (gt_image) call.attachments.push_back(*gt_image);
    call.seed = seed;

    auto response = backends::complete_with_retries(oracle, call, retry);
    auto parsed = reasoning::parse_response(response);

    CurationRecord record;
    record.id = request.id;
    record.control_type = request.control_type;
    record.control_image_path = request.control_image_path;
    record.gt_image_path = request.gt_image_path;
    record.original_prompt = request.original_prompt;
    record.question_text = question_text;
    record.response_text = response.text;
    record.think_text = parsed.think_text;
    record.answer_text = parsed.answer_text;
    record.well_formed = parsed.well_formed;
    return record;
}

// ============================================================================
// Filtering
// ============================================================================

struct FilterResult {
    std::vector<CurationRecord> kept;
    std::vector<CurationRecord> rejected;  // rejected_reason set on each
};

inline std::optional<RejectReason> rejection_for(const CurationRecord& record,
                                                 const std::vector<std::string>& blocklist) {
    if (!record.well_formed) return RejectReason::BAD_FORMAT;
    for (const auto& phrase : blocklist)
        if (contains_ci(record.think_text, phrase) || contains_ci(record.answer_text, phrase))
            return RejectReason::GT_REFERENCE;
    if (trim(record.answer_text).empty()) return RejectReason::EMPTY_ANSWER;
    return std::nullopt;
}

/// Partition records into kept and rejected. kept + rejected == input as
/// multisets; order within each side follows the input order.
inline FilterResult filter_dataset(const std::vector<CurationRecord>& records,
                                   const std::vector<std::string>& blocklist = default_blocklist()) {
    FilterResult out;
    for (const auto& record : records) {
        auto reason = rejection_for(record, blocklist);
        CurationRecord copy = record;
        copy.rejected_reason = reason;
        if (reason)
            out.rejected.push_back(std::move(copy));
        else
            out.kept.push_back(std::move(copy));
    }
    return out;
}

// ============================================================================
// Persistence
// ============================================================================

namespace detail {

inline json record_to_json(const CurationRecord& r) {
    json row{{"id", r.id},
             {"control_type", ctgen::to_string(r.control_type)},
             {"control_image_path", r.control_image_path},
             {"original_prompt", r.original_prompt},
             {"question_text", r.question_text},
             {"response_text", r.response_text},
             {"think_text", r.think_text},
             {"answer_text", r.answer_text},
             {"well_formed", r.well_formed}};
    if (r.gt_image_path) row["gt_image_path"] = *r.gt_image_path;
    if (r.rejected_reason) row["rejected_reason"] = to_string(*r.rejected_reason);
    return row;
}

inline CurationRecord record_from_json(const json& row, std::size_t line, const std::string& path) {
    static const std::set<std::string> required = {
        "id",          "control_type", "control_image_path", "original_prompt",
        "question_text", "response_text", "think_text",        "answer_text",
        "well_formed"};
    static const std::set<std::string> optional = {"gt_image_path", "rejected_reason"};
    jsonl::require_fields(row, required, optional, line, path);
    CurationRecord r;
    r.id = row.at("id").get<std::string>();
    r.control_type = control_type_from_string(row.at("control_type").get<std::string>());
    r.control_image_path = row.at("control_image_path").get<std::string>();
    if (row.contains("gt_image_path")) r.gt_image_path = row.at("gt_image_path").get<std::string>();
    r.original_prompt = row.at("original_prompt").get<std::string>();
    r.question_text = row.at("question_text").get<std::string>();
    r.response_text = row.at("response_text").get<std::string>();
    r.think_text = row.at("think_text").get<std::string>();
    r.answer_text = row.at("answer_text").get<std::string>();
    r.well_formed = row.at("well_formed").get<bool>();
    if (row.contains("rejected_reason"))
        r.rejected_reason = reject_reason_from_string(row.at("rejected_reason").get<std::string>());
    return r;
}

}  // namespace detail

inline Manifest make_manifest(const std::vector<CurationRecord>& records,
                              const std::string& tool_version, const std::string& config_digest,
                              std::uint64_t seed) {
    Manifest m;
    m.total = records.size();
    m.tool_version = tool_version;
    m.config_digest = config_digest;
    m.seed = seed;
    for (const auto& r : records) ++m.counts_per_type[ctgen::to_string(r.control_type)];
    return m;
}

inline void write_dataset(const Dataset& dataset, const std::string& path) {
    std::vector<json> lines;
    lines.reserve(dataset.records.size() + 1);
    lines.push_back(json{{"manifest_version", 1},
                         {"counts_per_type", dataset.manifest.counts_per_type},
                         {"total", dataset.manifest.total},
                         {"tool_version", dataset.manifest.tool_version},
                         {"config_digest", dataset.manifest.config_digest},
                         {"seed", dataset.manifest.seed}});
    for (const auto& r : dataset.records) lines.push_back(detail::record_to_json(r));
    jsonl::write_lines(path, lines);
}

inline Dataset read_dataset(const std::string& path) {
    auto lines = jsonl::read_lines(path);
    if (lines.empty()) throw DataError(path + ": missing manifest line");
    static const std::set<std::string> manifest_required = {
        "manifest_version", "counts_per_type", "total", "tool_version", "config_digest", "seed"};
    jsonl::require_fields(lines[0].value, manifest_required, {}, lines[0].line_number, path);

    Dataset out;
    out.manifest.counts_per_type =
        lines[0].value.at("counts_per_type").get<std::map<std::string, std::size_t>>();
    out.manifest.total = lines[0].value.at("total").get<std::size_t>();
    out.manifest.tool_version = lines[0].value.at("tool_version").get<std::string>();
    out.manifest.config_digest = lines[0].value.at("config_digest").get<std::string>();
    out.manifest.seed = lines[0].value.at("seed").get<std::uint64_t>();

    for (std::size_t i = 1; i < lines.size(); ++i)
        out.records.push_back(detail::record_from_json(lines[i].value, lines[i].line_number, path));

    if (out.records.size() != out.manifest.total)
        throw DataError(path + ": manifest total does not match record count");
    Manifest recount = make_manifest(out.records, out.manifest.tool_version,
                                     out.manifest.config_digest, out.manifest.seed);
    if (recount.counts_per_type != out.manifest.counts_per_type)
        throw DataError(path + ": manifest per-type counts do not match records");

    std::set<std::string> ids;
    for (const auto& r : out.records)
        if (!ids.insert(r.id).second) throw DataError(path + ": duplicate record id " + r.id);
    return out;
}

inline void write_failures(const std::vector<FailureEntry>& failures, const std::string& path) {
    std::vector<json> lines;
    lines.reserve(failures.size());
    for (const auto& f : failures)
        lines.push_back(json{{"id", f.id},
                             {"question_text", f.question_text},
                             {"fault", f.fault},
                             {"message", f.message}});
    jsonl::write_lines(path, lines);
}

// ============================================================================
// Batch runner
// ============================================================================

struct RunnerConfig {
    std::vector<std::string> blocklist = default_blocklist();
    int concurrency = 8;
    RetryPolicy retry;
};

struct RunnerResult {
    std::vector<CurationRecord> records;  // unfiltered, input order
    std::vector<FailureEntry> failures;
};

/// Issue oracle requests with a bounded in-flight window. Output order is
/// the input order regardless of completion order.
inline RunnerResult run_curation(const std::vector<CurationRequest>& requests,
                                 OracleClient& oracle, const RunnerConfig& config,
                                 std::uint64_t seed) {
    if (config.concurrency < 1) throw ConfigError("curation concurrency must be >= 1");
    struct Slot {
        std::optional<CurationRecord> record;
        std::optional<FailureEntry> failure;
    };
    std::vector<Slot> slots(requests.size());

    auto process = [&](std::size_t i) {
        const auto& req = requests[i];
        std::string question;
        try {
            question = build_question(req.control_type, req.original_prompt,
                                      req.control_image_path);
            Image control = png_io::read_rgb_png(req.control_image_path);
            std::optional<Image> gt;
            if (req.gt_image_path) gt = png_io::read_rgb_png(*req.gt_image_path);
            slots[i].record = curate_record(req, question, control, gt, oracle, config.retry,
                                            derive_seed(seed, "curate", i));
        } catch (const backends::BackendError& e) {
            slots[i].failure = FailureEntry{req.id, question, to_string(e.fault()), e.what()};
        }
        // I/O errors (missing or corrupt images) propagate: they are caller
        // mistakes, not oracle failures.
    };

    std::size_t next = 0;
    while (next < requests.size()) {
        std::size_t batch_end =
            std::min(requests.size(), next + static_cast<std::size_t>(config.concurrency));
        std::vector<std::future<void>> inflight;
        for (std::size_t i = next; i < batch_end; ++i)
            inflight.push_back(std::async(std::launch::async, process, i));
        for (auto& f : inflight) f.get();
        next = batch_end;
    }

    RunnerResult out;
    for (auto& slot : slots) {
        if (slot.record) out.records.push_back(std::move(*slot.record));
        if (slot.failure) out.failures.push_back(std::move(*slot.failure));
    }
    return out;
}

}  // namespace ctgen::curation
