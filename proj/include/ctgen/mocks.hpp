/**
 * ctgen/mocks.hpp
 *
 * Deterministic mock implementations of every backend interface, so the
 * full pipeline runs at desk scale with no model weights.
 *
 * MockPolicy is the interesting one: a trainable categorical token-sequence
 * policy over an 8-token vocabulary (the four reasoning tags plus four
 * filler words). Sequences are a fixed 8 slots long; each slot carries its
 * own logit row, so log pi(o|q) = sum_t log softmax(theta[t])[o_t]. The
 * initial logits put a weak prior on the tagged scaffold (roughly a 10%
 * well-formed rate), leaving plenty of headroom for reinforcement runs to
 * climb. apply_update performs the explicit categorical gradient step
 * described in backends.hpp, so updates provably move sequence
 * probabilities.
 */

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <mutex>
#include <optional>
#include <random>
#include <variant>

#include "ctgen/backends.hpp"
#include "ctgen/canny.hpp"

namespace ctgen::mocks {

using backends::BackendError;
using backends::Fault;
using backends::GradientSignal;
using backends::OracleRequest;
using backends::ScoreRange;
using reasoning::RawResponse;

// ============================================================================
// MockPolicy
// ============================================================================

class MockPolicy final : public backends::PolicyBackend {
public:
    static constexpr int kSeqLen = 8;
    static constexpr int kVocab = 8;

    struct Params {
        double scaffold_bias = 2.5;  // initial logit on the expected tag per tag slot
        double filler_bias = 2.0;    // initial logit on filler words at content slots
    };

    explicit MockPolicy(std::uint64_t seed, Params params = {}) : seed_(seed) {
        for (int t = 0; t < kSeqLen; ++t) logits_[t].fill(0.0);
        // Scaffold: <think> w w </think> <answer> w w </answer>
        logits_[0][0] = params.scaffold_bias;
        logits_[3][1] = params.scaffold_bias;
        logits_[4][2] = params.scaffold_bias;
        logits_[7][3] = params.scaffold_bias;
        for (int t : {1, 2, 5, 6})
            for (int v = 4; v < kVocab; ++v) logits_[t][v] = params.filler_bias;
    }

    static const std::array<std::string, kVocab>& vocabulary() {
        static const std::array<std::string, kVocab> vocab = {
            "<think>", "</think>", "<answer>", "</answer>", "a", "b", "c", "d"};
        return vocab;
    }

    std::vector<RawResponse> sample(const std::string& question, int count, double temperature,
                                    std::uint64_t seed) override {
        if (count < 1) throw DataError("mock policy: sample count must be >= 1");
        if (temperature <= 0.0) throw DataError("mock policy: temperature must be > 0");
        std::uint64_t mixed = fnv1a64_combine(fnv1a64(question), seed);
        std::mt19937_64 rng(splitmix64(fnv1a64_combine(mixed, seed_)));
        std::vector<RawResponse> out;
        out.reserve(static_cast<std::size_t>(count));
        for (int i = 0; i < count; ++i) {
            std::string text;
            for (int t = 0; t < kSeqLen; ++t) {
                auto probs = slot_probs(t, temperature);
                double u = static_cast<double>(rng() >> 11) * (1.0 / 9007199254740992.0);
                int tok = kVocab - 1;
                double acc = 0.0;
                for (int v = 0; v < kVocab; ++v) {
                    acc += probs[v];
                    if (u < acc) {
                        tok = v;
                        break;
                    }
                }
                text += vocabulary()[static_cast<std::size_t>(tok)];
            }
            out.push_back(RawResponse{std::move(text)});
        }
        return out;
    }

    double sequence_logprob(const std::string& /*question*/,
                            const RawResponse& response) const override {
        auto toks = tokenize(response.text);
        if (!toks) return kUnmodeledLogprob;
        double lp = 0.0;
        for (int t = 0; t < kSeqLen; ++t)
            lp += std::log(slot_probs(t, 1.0)[(*toks)[static_cast<std::size_t>(t)]]);
        return lp;
    }

    void apply_update(const GradientSignal& signal) override {
        std::array<std::array<double, kVocab>, kSeqLen> grad{};
        for (auto& row : grad) row.fill(0.0);
        for (const auto& term : signal.terms) {
            auto toks = tokenize(term.response);
            if (!toks) continue;  // unmodeled sequences carry no parameter gradient
            for (int t = 0; t < kSeqLen; ++t) {
                auto probs = slot_probs(t, 1.0);
                int target = (*toks)[static_cast<std::size_t>(t)];
                for (int v = 0; v < kVocab; ++v) {
                    double dlogp = (v == target ? 1.0 : 0.0) - probs[v];
                    grad[t][v] += term.dloss_dlogprob * dlogp;
                }
            }
        }
        for (int t = 0; t < kSeqLen; ++t)
            for (int v = 0; v < kVocab; ++v) logits_[t][v] -= signal.learning_rate * grad[t][v];
    }

    std::shared_ptr<const backends::SequenceScorer> snapshot() const override {
        return std::make_shared<Frozen>(logits_);
    }

    nlohmann::json serialize_state() const override {
        nlohmann::json rows = nlohmann::json::array();
        for (const auto& row : logits_) rows.push_back(row);
        return nlohmann::json{{"kind", "mock-policy"}, {"seed", seed_}, {"logits", rows}};
    }

    void restore_state(const nlohmann::json& state) override {
        if (state.value("kind", "") != "mock-policy")
            throw DataError("mock policy: incompatible checkpoint state");
        seed_ = state.at("seed").get<std::uint64_t>();
        const auto& rows = state.at("logits");
        if (rows.size() != kSeqLen) throw DataError("mock policy: bad logits shape");
        for (int t = 0; t < kSeqLen; ++t)
            for (int v = 0; v < kVocab; ++v)
                logits_[t][v] = rows[static_cast<std::size_t>(t)][static_cast<std::size_t>(v)]
                                    .get<double>();
    }

    /// Greedy longest-match tokenization over the mock vocabulary.
    static std::optional<std::array<int, kSeqLen>> tokenize(std::string_view text) {
        std::array<int, kSeqLen> toks{};
        int count = 0;
        std::size_t pos = 0;
        while (pos < text.size()) {
            if (count >= kSeqLen) return std::nullopt;
            int match = -1;
            std::size_t best_len = 0;
            for (int v = 0; v < kVocab; ++v) {
                const std::string& tok = vocabulary()[static_cast<std::size_t>(v)];
                if (tok.size() > best_len && text.compare(pos, tok.size(), tok) == 0) {
                    match = v;
                    best_len = tok.size();
                }
            }
            if (match < 0) return std::nullopt;
            toks[static_cast<std::size_t>(count++)] = match;
            pos += best_len;
        }
        if (count != kSeqLen) return std::nullopt;
        return toks;
    }

    static constexpr double kUnmodeledLogprob = -1.0e4;

private:
    class Frozen final : public backends::SequenceScorer {
    public:
        explicit Frozen(const std::array<std::array<double, kVocab>, kSeqLen>& logits)
            : logits_(logits) {}
        double sequence_logprob(const std::string&, const RawResponse& r) const override {
            auto toks = tokenize(r.text);
            if (!toks) return kUnmodeledLogprob;
            double lp = 0.0;
            for (int t = 0; t < kSeqLen; ++t) {
                const auto& row = logits_[static_cast<std::size_t>(t)];
                double mx = *std::max_element(row.begin(), row.end());
                double z = 0.0;
                for (double l : row) z += std::exp(l - mx);
                lp += row[static_cast<std::size_t>((*toks)[static_cast<std::size_t>(t)])] - mx -
                      std::log(z);
            }
            return lp;
        }

    private:
        std::array<std::array<double, kVocab>, kSeqLen> logits_;
    };

    std::array<double, kVocab> slot_probs(int t, double temperature) const {
        const auto& row = logits_[static_cast<std::size_t>(t)];
        std::array<double, kVocab> p{};
        double mx = *std::max_element(row.begin(), row.end());
        double z = 0.0;
        for (int v = 0; v < kVocab; ++v) {
            p[v] = std::exp((row[v] - mx) / temperature);
            z += p[v];
        }
        for (auto& v : p) v /= z;
        return p;
    }

    std::uint64_t seed_;
    std::array<std::array<double, kVocab>, kSeqLen> logits_;
};

// ============================================================================
// Generator / scorers / perceptual / extractor / features
// ============================================================================

class MockGenerator final : public backends::GeneratorBackend {
public:
    Image generate(const std::string& prompt, const ControlMap& control,
                   std::uint64_t seed) override {
        if (control.empty()) throw BackendError(Fault::MALFORMED_OUTPUT, "empty control map");
        Image out;
        out.width = control.width;
        out.height = control.height;
        out.rgb.resize(control.size() * 3);
        std::uint64_t h = fnv1a64_combine(fnv1a64(prompt), map_digest(control));
        h = fnv1a64_combine(h, seed);
        for (std::size_t i = 0; i < out.rgb.size(); i += 3) {
            std::uint64_t v = splitmix64(h + i);
            out.rgb[i + 0] = static_cast<std::uint8_t>(v & 0xff);
            out.rgb[i + 1] = static_cast<std::uint8_t>((v >> 8) & 0xff);
            out.rgb[i + 2] = static_cast<std::uint8_t>((v >> 16) & 0xff);
        }
        return out;
    }
};

/// Hashes (image digest, text digest) to a stable score inside the declared range.
class MockScorer final : public backends::ImageTextScorer {
public:
    explicit MockScorer(ScoreRange range = {0.0, 1.0}) : range_(range) {}

    double score(const Image& image, const std::string& text) const override {
        std::uint64_t h = fnv1a64_combine(image_digest(image), fnv1a64(text));
        return range_.lo + unit_from_hash(splitmix64(h)) * (range_.hi - range_.lo);
    }
    ScoreRange range() const override { return range_; }

private:
    ScoreRange range_;
};

/// Mean absolute pixel difference scaled to [0,1]. Symmetric, zero at identity.
class MockPerceptual final : public backends::PerceptualDistance {
public:
    double distance(const Image& a, const Image& b) const override {
        if (a.width != b.width || a.height != b.height)
            throw DataError("perceptual distance: dimension mismatch");
        if (a.rgb.empty()) return 0.0;
        double acc = 0.0;
        for (std::size_t i = 0; i < a.rgb.size(); ++i)
            acc += std::abs(static_cast<int>(a.rgb[i]) - static_cast<int>(b.rgb[i]));
        return acc / (255.0 * static_cast<double>(a.rgb.size()));
    }
};

/// Derives each control type from image content with cheap deterministic ops.
class MockExtractor final : public backends::ControlExtractorBackend {
public:
    explicit MockExtractor(int seg_classes = 8) : seg_classes_(seg_classes) {}

    ControlMap extract(const Image& image, ControlType control_type) const override {
        GrayImage luma = to_luma(image);
        switch (control_type) {
            case ControlType::CANNY:
                return maps::canny_extract(luma, {});
            case ControlType::DEPTH:
                return map_from_gray(luma, ControlType::DEPTH, MapKind::GRAY8);
            case ControlType::HED:
            case ControlType::LINEART: {
                ControlMap m = gradient_map(luma);
                m.control_type = control_type;
                return m;
            }
            case ControlType::SEG: {
                ControlMap m;
                m.control_type = ControlType::SEG;
                m.kind = MapKind::LABELS;
                m.width = luma.width;
                m.height = luma.height;
                m.class_count = seg_classes_;
                m.data.resize(luma.pixels.size());
                for (std::size_t i = 0; i < luma.pixels.size(); ++i)
                    m.data[i] = static_cast<std::uint8_t>(
                        std::min(seg_classes_ - 1, luma.pixels[i] * seg_classes_ / 256));
                return m;
            }
        }
        throw DataError("unknown control type");
    }

private:
    static ControlMap gradient_map(const GrayImage& g) {
        ControlMap m;
        m.kind = MapKind::GRAY8;
        m.width = g.width;
        m.height = g.height;
        m.data.assign(g.pixels.size(), 0);
        auto at = [&](int x, int y) -> int {
            x = std::clamp(x, 0, g.width - 1);
            y = std::clamp(y, 0, g.height - 1);
            return g.pixels[static_cast<std::size_t>(y) * g.width + x];
        };
        for (int y = 0; y < g.height; ++y)
            for (int x = 0; x < g.width; ++x) {
                int gx = at(x + 1, y) - at(x - 1, y);
                int gy = at(x, y + 1) - at(x, y - 1);
                int mag = std::min(255, static_cast<int>(std::sqrt(double(gx * gx + gy * gy))));
                m.data[static_cast<std::size_t>(y) * g.width + x] =
                    static_cast<std::uint8_t>(mag);
            }
        return m;
    }

    int seg_classes_;
};

/// Channel moments padded with digest-derived components up to dimension d.
class MockFeatures final : public backends::FeatureExtractor {
public:
    explicit MockFeatures(int dimension = 4) : dim_(dimension) {
        if (dimension < 1) throw DataError("feature dimension must be >= 1");
    }

    std::vector<double> features(const Image& image) const override {
        std::vector<double> out(static_cast<std::size_t>(dim_), 0.0);
        double means[3] = {0, 0, 0};
        for (std::size_t i = 0; i < image.pixel_count(); ++i)
            for (int c = 0; c < 3; ++c) means[c] += image.rgb[3 * i + c];
        for (int c = 0; c < 3; ++c)
            means[c] /= std::max<std::size_t>(1, image.pixel_count()) * 255.0;
        std::uint64_t digest = image_digest(image);
        for (int k = 0; k < dim_; ++k)
            out[static_cast<std::size_t>(k)] =
                k < 3 ? means[k] : unit_from_hash(splitmix64(digest + static_cast<std::uint64_t>(k)));
        return out;
    }
    int dimension() const override { return dim_; }

private:
    int dim_;
};

// ============================================================================
// MockOracle
// ============================================================================

/**
 * Two modes:
 *   scripted   — replays a fixed sequence of responses/faults; raises a
 *                TRANSPORT error once the script is exhausted.
 *   procedural — derives the response from the request digest, so curation
 *                stays bit-reproducible under any concurrency schedule.
 *                Responses are composed from the MockPolicy vocabulary and
 *                tokenize to exactly one policy sequence. Configurable rates
 *                inject malformed and ground-truth-referencing responses to
 *                exercise filtering.
 */
class MockOracle final : public backends::OracleClient {
public:
    using ScriptEntry = std::variant<std::string, Fault>;

    struct ProceduralParams {
        double malformed_rate = 0.0;
        double blocklist_rate = 0.0;
        std::string blocklist_phrase = "the ground truth image";
    };

    explicit MockOracle(std::vector<ScriptEntry> script) : script_(std::move(script)) {}
    explicit MockOracle(ProceduralParams params) : procedural_(params) {}

    RawResponse complete(const OracleRequest& request) override {
        if (procedural_) return procedural_response(request);
        std::lock_guard<std::mutex> lock(mutex_);
        if (cursor_ >= script_.size())
            throw BackendError(Fault::TRANSPORT, "mock oracle script exhausted");
        ScriptEntry entry = script_[cursor_++];
        if (std::holds_alternative<Fault>(entry))
            throw BackendError(std::get<Fault>(entry), "scripted oracle fault");
        return RawResponse{std::get<std::string>(entry)};
    }

private:
    RawResponse procedural_response(const OracleRequest& request) const {
        std::uint64_t h = fnv1a64_combine(fnv1a64(request.user_prompt), request.seed);
        double u = unit_from_hash(splitmix64(h));
        auto filler = [&](int k) {
            static const char* words[4] = {"a", "b", "c", "d"};
            return std::string(words[splitmix64(h + 17 * static_cast<std::uint64_t>(k) + 1) % 4]);
        };
        if (u < procedural_->malformed_rate)
            return RawResponse{"<think>" + filler(0) + filler(1) + "</think>"};
        if (u < procedural_->malformed_rate + procedural_->blocklist_rate)
            return RawResponse{reasoning::serialize_response(
                "as seen in " + procedural_->blocklist_phrase, filler(2) + filler(3))};
        return RawResponse{
            reasoning::serialize_response(filler(0) + filler(1), filler(2) + filler(3))};
    }

    std::vector<ScriptEntry> script_;
    std::size_t cursor_ = 0;
    std::optional<ProceduralParams> procedural_;
    std::mutex mutex_;
};

// ============================================================================
// Function adapters (test plumbing)
// ============================================================================

class FunctionScorer final : public backends::ImageTextScorer {
public:
    using Fn = std::function<double(const Image&, const std::string&)>;
    FunctionScorer(Fn fn, ScoreRange range) : fn_(std::move(fn)), range_(range) {}
    double score(const Image& image, const std::string& text) const override {
        return fn_(image, text);
    }
    ScoreRange range() const override { return range_; }

private:
    Fn fn_;
    ScoreRange range_;
};

class FunctionPerceptual final : public backends::PerceptualDistance {
public:
    using Fn = std::function<double(const Image&, const Image&)>;
    explicit FunctionPerceptual(Fn fn) : fn_(std::move(fn)) {}
    double distance(const Image& a, const Image& b) const override { return fn_(a, b); }

private:
    Fn fn_;
};

class FunctionExtractor final : public backends::ControlExtractorBackend {
public:
    using Fn = std::function<ControlMap(const Image&, ControlType)>;
    explicit FunctionExtractor(Fn fn) : fn_(std::move(fn)) {}
    ControlMap extract(const Image& image, ControlType t) const override {
        return fn_(image, t);
    }

private:
    Fn fn_;
};

class FunctionFeatures final : public backends::FeatureExtractor {
public:
    using Fn = std::function<std::vector<double>(const Image&)>;
    FunctionFeatures(int dim, Fn fn) : dim_(dim), fn_(std::move(fn)) {}
    std::vector<double> features(const Image& image) const override { return fn_(image); }
    int dimension() const override { return dim_; }

private:
    int dim_;
    Fn fn_;
};

// Factory helpers mirroring the backend wiring names.
inline std::shared_ptr<backends::PolicyBackend> mock_policy(std::uint64_t seed) {
    return std::make_shared<MockPolicy>(seed);
}
inline std::shared_ptr<backends::GeneratorBackend> mock_generator() {
    return std::make_shared<MockGenerator>();
}
inline std::shared_ptr<backends::ImageTextScorer> mock_scorer(ScoreRange range = {0.0, 1.0}) {
    return std::make_shared<MockScorer>(range);
}
inline std::shared_ptr<backends::PerceptualDistance> mock_perceptual() {
    return std::make_shared<MockPerceptual>();
}
inline std::shared_ptr<backends::ControlExtractorBackend> mock_extractor(int seg_classes = 8) {
    return std::make_shared<MockExtractor>(seg_classes);
}
inline std::shared_ptr<backends::OracleClient> mock_oracle(
    std::vector<MockOracle::ScriptEntry> script) {
    return std::make_shared<MockOracle>(std::move(script));
}
inline std::shared_ptr<backends::FeatureExtractor> mock_features(int dimension = 4) {
    return std::make_shared<MockFeatures>(dimension);
}

}  // namespace ctgen::mocks
