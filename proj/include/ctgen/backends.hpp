/**
 * ctgen/backends.hpp
 *
 * Abstract interfaces to every external model the pipeline touches:
 * the reasoning policy, the image generator, image-text scorers,
 * a perceptual distance, control-map extractors, the curation oracle,
 * and a feature extractor for distributional metrics.
 *
 * Gradient exchange is explicit rather than autodiff-bound: the trainer
 * hands the policy a GradientSignal carrying, per sequence, the partial
 * derivative of the loss with respect to that sequence's log-probability.
 * The backend applies
 *
 *     theta <- theta - learning_rate * sum_i dloss_dlogprob_i * grad_theta logpi(o_i | q_i)
 *
 * Concurrency contract: read-only calls (sample, score, distance, extract,
 * sequence_logprob) may run concurrently; apply_update is exclusive.
 */

#pragma once

#include <chrono>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "ctgen/common.hpp"
#include "ctgen/control_map.hpp"
#include "ctgen/image.hpp"
#include "ctgen/reasoning.hpp"

namespace ctgen::backends {

using reasoning::RawResponse;

// ============================================================================
// Typed backend failures
// ============================================================================

enum class Fault { TRANSPORT, TIMEOUT, MALFORMED_OUTPUT };

inline const char* to_string(Fault f) {
    switch (f) {
        case Fault::TRANSPORT: return "TRANSPORT";
        case Fault::TIMEOUT: return "TIMEOUT";
        case Fault::MALFORMED_OUTPUT: return "MALFORMED_OUTPUT";
    }
    return "TRANSPORT";
}

class BackendError : public Error {
public:
    BackendError(Fault fault, const std::string& msg)
        : Error(std::string(to_string(fault)) + ": " + msg), fault_(fault) {}
    Fault fault() const { return fault_; }

private:
    Fault fault_;
};

// ============================================================================
// Policy
// ============================================================================

/// Read-only view of a policy: scores sequences under a fixed parameter state.
class SequenceScorer {
public:
    virtual ~SequenceScorer() = default;

    /// log pi(response | question). Always finite and <= 0.
    virtual double sequence_logprob(const std::string& question,
                                    const RawResponse& response) const = 0;
};

struct SequenceGradTerm {
    std::string question;
    std::string response;
    double dloss_dlogprob = 0.0;  // partial of the scalar loss w.r.t. this logprob
};

/// Opaque gradient-signal handle produced by the trainer.
struct GradientSignal {
    std::vector<SequenceGradTerm> terms;
    double learning_rate = 0.0;
};

class PolicyBackend : public SequenceScorer {
public:
    /// Draw `count` responses for `question`. Deterministic in (question, seed).
    virtual std::vector<RawResponse> sample(const std::string& question, int count,
                                            double temperature, std::uint64_t seed) = 0;

    /// Apply one gradient step. Exclusive: callers serialize updates.
    virtual void apply_update(const GradientSignal& signal) = 0;

    /// Freeze the current parameter state. The returned scorer's outputs
    /// never change, regardless of later updates to this policy.
    virtual std::shared_ptr<const SequenceScorer> snapshot() const = 0;

    /// Checkpointable parameter state.
    virtual nlohmann::json serialize_state() const = 0;
    virtual void restore_state(const nlohmann::json& state) = 0;
    std::string state_digest() const { return hex64(fnv1a64(serialize_state().dump())); }
};

// ============================================================================
// Generation and scoring
// ============================================================================

class GeneratorBackend {
public:
    virtual ~GeneratorBackend() = default;

    /// Output image dimensions equal the control map dimensions.
    virtual Image generate(const std::string& prompt, const ControlMap& control,
                           std::uint64_t seed) = 0;
};

struct ScoreRange {
    double lo = 0.0;
    double hi = 1.0;
};

/// Image-text similarity on the adapter's raw model scale.
class ImageTextScorer {
public:
    virtual ~ImageTextScorer() = default;

    virtual double score(const Image& image, const std::string& text) const = 0;

    /// Declared raw output range, used for [0,1] normalization where needed.
    virtual ScoreRange range() const = 0;
};

/// Symmetric perceptual distance with distance(x, x) = 0.
class PerceptualDistance {
public:
    virtual ~PerceptualDistance() = default;
    virtual double distance(const Image& a, const Image& b) const = 0;
};

class ControlExtractorBackend {
public:
    virtual ~ControlExtractorBackend() = default;

    /// Output map is tagged with the requested control type and keeps the
    /// input dimensions.
    virtual ControlMap extract(const Image& image, ControlType control_type) const = 0;
};

/// Fixed-dimension image embedding for distributional metrics.
class FeatureExtractor {
public:
    virtual ~FeatureExtractor() = default;
    virtual std::vector<double> features(const Image& image) const = 0;
    virtual int dimension() const = 0;
};

// ============================================================================
// Oracle
// ============================================================================

struct OracleRequest {
    std::string system_prompt;
    std::string user_prompt;
    std::vector<Image> attachments;
    std::uint64_t seed = 0;
};

class OracleClient {
public:
    virtual ~OracleClient() = default;

    /// Single completion attempt. Failures raise BackendError.
    virtual RawResponse complete(const OracleRequest& request) = 0;
};

struct RetryPolicy {
    int max_retries = 3;
    std::chrono::milliseconds initial_backoff{10};
    double backoff_multiplier = 2.0;
};

/// At-most-(max_retries) retries with exponential backoff. TRANSPORT and
/// TIMEOUT faults are retryable; MALFORMED_OUTPUT surfaces immediately.
inline RawResponse complete_with_retries(OracleClient& oracle, const OracleRequest& request,
                                         const RetryPolicy& policy = {}) {
    auto backoff = policy.initial_backoff;
    for (int attempt = 0;; ++attempt) {
        try {
            return oracle.complete(request);
        } catch (const BackendError& e) {
            bool retryable = e.fault() == Fault::TRANSPORT || e.fault() == Fault::TIMEOUT;
            if (!retryable || attempt >= policy.max_retries) throw;
            if (backoff.count() > 0) std::this_thread::sleep_for(backoff);
            backoff = std::chrono::milliseconds(
                static_cast<long>(static_cast<double>(backoff.count()) * policy.backoff_multiplier));
        }
    }
}

/// The full backend suite one pipeline run is wired with.
struct BackendSuite {
    std::shared_ptr<PolicyBackend> policy;
    std::shared_ptr<GeneratorBackend> generator;
    std::shared_ptr<ImageTextScorer> alignment_scorer;   // CLIP-class, for RFT rewards
    std::shared_ptr<ImageTextScorer> preference_scorer;  // PickScore-class, for the ORM
    std::shared_ptr<PerceptualDistance> perceptual;
    std::shared_ptr<ControlExtractorBackend> extractor;
    std::shared_ptr<OracleClient> oracle;
    std::shared_ptr<FeatureExtractor> features;
};

}  // namespace ctgen::backends
