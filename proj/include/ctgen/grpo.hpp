/**
 * ctgen/grpo.hpp
 *
 * Two-phase training: supervised fine-tuning on curated records, then
 * group-relative reinforcement fine-tuning with verifiable rewards.
 *
 * SFT minimizes the mean negative sequence log-probability of the target
 * responses.
 *
 * RFT samples G responses per question, scores each with the combined
 * reward, normalizes rewards to per-group advantages
 *
 *     A_i = (R_i - mean(R)) / population_std(R)      (all zero when std <= eps)
 *
 * and minimizes
 *
 *     loss = -(1/G) * sum_i [ A_i * logpi(o_i) - beta * klest_i ]
 *
 * where klest_i = exp(lr - lc) - (lr - lc) - 1 on reference vs current
 * sequence logprobs: a non-negative estimator that vanishes when the
 * policies agree. An optional clipped importance-ratio mode (standard GRPO
 * parity) sits behind config and is off by default: the literal
 * advantage-weighted objective is the default.
 *
 * Population (not sample) standard deviation keeps G = 2 well-defined with
 * advantages exactly {-1, +1}. Degenerate groups carry no preference signal
 * and contribute no policy gradient.
 */

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "ctgen/backends.hpp"
#include "ctgen/curation.hpp"
#include "ctgen/reasoning.hpp"

namespace ctgen::grpo {

using backends::GradientSignal;
using backends::PolicyBackend;
using backends::SequenceGradTerm;
using backends::SequenceScorer;
using curation::CurationRecord;
using nlohmann::json;
using reasoning::RawResponse;

// ============================================================================
// Config and trajectory groups
// ============================================================================

struct TrainConfig {
    int group_size = 12;
    double kl_coefficient = 0.04;  // beta
    double learning_rate = 1e-5;
    int batch_size = 1;
    int epochs = 1;
    int max_steps = 0;  // 0: derive from epochs * ceil(N / batch_size)
    double temperature = 1.0;
    double epsilon = 1e-8;  // degenerate-group reward-std floor
    bool clipped_ratio = false;
    double clip_epsilon = 0.2;
};

inline void validate(const TrainConfig& c) {
    if (c.group_size < 2) throw ConfigError("group_size must be >= 2");
    if (c.kl_coefficient < 0.0) throw ConfigError("kl_coefficient must be >= 0");
    if (c.epsilon <= 0.0) throw ConfigError("epsilon must be > 0");
    if (c.batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (c.temperature <= 0.0) throw ConfigError("temperature must be > 0");
}

struct TrajectoryGroup {
    std::string question;
    std::vector<RawResponse> responses;
    std::vector<double> rewards;
    std::vector<double> advantages;
    std::vector<double> logprobs_current;
    std::vector<double> logprobs_ref;
    std::vector<double> logprobs_behavior;  // at sampling time, for the ratio mode

    std::size_t size() const { return responses.size(); }
};

// ============================================================================
// Core math
// ============================================================================

/// Group-relative advantages: z-scores under the population std. All zero
/// when the reward spread is degenerate (std <= eps).
inline std::vector<double> compute_advantages(const std::vector<double>& rewards, double eps) {
    if (rewards.size() < 2) throw DataError("compute_advantages needs at least 2 rewards");
    const double n = static_cast<double>(rewards.size());
    double mean = std::accumulate(rewards.begin(), rewards.end(), 0.0) / n;
    double var = 0.0;
    for (double r : rewards) var += (r - mean) * (r - mean);
    double std_dev = std::sqrt(var / n);
    std::vector<double> out(rewards.size(), 0.0);
    if (std_dev <= eps) return out;
    for (std::size_t i = 0; i < rewards.size(); ++i) out[i] = (rewards[i] - mean) / std_dev;
    return out;
}

/// Non-negative per-sequence KL estimator; zero iff the logprobs agree.
inline double kl_estimate(double logprob_ref, double logprob_current) {
    double delta = logprob_ref - logprob_current;
    return std::exp(delta) - delta - 1.0;
}

/// Mean negative sequence log-probability of the target responses.
inline double sft_loss(const std::vector<CurationRecord>& batch, const SequenceScorer& policy) {
    if (batch.empty()) throw DataError("sft_loss: empty batch");
    double acc = 0.0;
    for (const auto& r : batch)
        acc += -policy.sequence_logprob(r.question_text, RawResponse{r.response_text});
    return acc / static_cast<double>(batch.size());
}

/// Gradient signal paired with sft_loss: d loss / d logprob_i = -1/B.
inline GradientSignal sft_gradient(const std::vector<CurationRecord>& batch,
                                   double learning_rate) {
    if (batch.empty()) throw DataError("sft_gradient: empty batch");
    GradientSignal signal;
    signal.learning_rate = learning_rate;
    double coeff = -1.0 / static_cast<double>(batch.size());
    for (const auto& r : batch)
        signal.terms.push_back(SequenceGradTerm{r.question_text, r.response_text, coeff});
    return signal;
}

// ============================================================================
// Group sampling and the RFT objective
// ============================================================================

/// Sample a group of G responses and record current/reference logprobs.
/// A failed sampling call is retried once, then surfaced.
inline TrajectoryGroup sample_group(PolicyBackend& policy, const SequenceScorer& reference,
                                    const std::string& question, const TrainConfig& config,
                                    std::uint64_t seed) {
    if (config.group_size < 2) throw ConfigError("sample_group: group_size must be >= 2");
    TrajectoryGroup group;
    group.question = question;
    try {
        group.responses = policy.sample(question, config.group_size, config.temperature, seed);
    } catch (const backends::BackendError&) {
        group.responses = policy.sample(question, config.group_size, config.temperature, seed);
    }
    group.logprobs_current.reserve(group.size());
    group.logprobs_ref.reserve(group.size());
    for (const auto& response : group.responses) {
        group.logprobs_current.push_back(policy.sequence_logprob(question, response));
        group.logprobs_ref.push_back(reference.sequence_logprob(question, response));
    }
    group.logprobs_behavior = group.logprobs_current;
    return group;
}

struct ObjectiveResult {
    double loss = 0.0;
    double kl_mean = 0.0;
    GradientSignal signal;
};

/// Evaluate the RFT loss over one group and assemble the gradient signal.
inline ObjectiveResult rft_objective(const TrajectoryGroup& group, const TrainConfig& config) {
    const std::size_t n = group.size();
    if (n < 2) throw DataError("rft_objective: group too small");
    if (group.advantages.size() != n || group.logprobs_current.size() != n ||
        group.logprobs_ref.size() != n)
        throw DataError("rft_objective: advantages not filled");
    for (std::size_t i = 0; i < n; ++i)
        if (!std::isfinite(group.logprobs_current[i]) || !std::isfinite(group.logprobs_ref[i]))
            throw DataError("rft_objective: non-finite logprob at response index " +
                            std::to_string(i));

    const double beta = config.kl_coefficient;
    const double inv_n = 1.0 / static_cast<double>(n);
    ObjectiveResult out;
    out.signal.learning_rate = config.learning_rate;

    for (std::size_t i = 0; i < n; ++i) {
        double a = group.advantages[i];
        double lc = group.logprobs_current[i];
        double lr = group.logprobs_ref[i];
        double kl = kl_estimate(lr, lc);

        double policy_term;   // contributes +policy_term to the maximized objective
        double dpolicy_dlc;   // its derivative w.r.t. lc
        if (config.clipped_ratio) {
            double lb = group.logprobs_behavior.empty() ? lc : group.logprobs_behavior[i];
            double ratio = std::exp(lc - lb);
            double clipped = std::clamp(ratio, 1.0 - config.clip_epsilon, 1.0 + config.clip_epsilon);
            double unclipped_term = ratio * a;
            double clipped_term = clipped * a;
            if (unclipped_term <= clipped_term) {
                policy_term = unclipped_term;
                dpolicy_dlc = a * ratio;  // d ratio / d lc = ratio
            } else {
                policy_term = clipped_term;
                dpolicy_dlc = 0.0;  // clip bound is constant in lc
            }
        } else {
            policy_term = a * lc;
            dpolicy_dlc = a;
        }

        out.loss += -inv_n * (policy_term - beta * kl);
        out.kl_mean += inv_n * kl;
        // d kl / d lc = 1 - exp(lr - lc)
        double dloss_dlc = -inv_n * (dpolicy_dlc - beta * (1.0 - std::exp(lr - lc)));
        out.signal.terms.push_back(
            SequenceGradTerm{group.question, group.responses[i].text, dloss_dlc});
    }
    return out;
}

// ============================================================================
// Training loops
// ============================================================================

struct TrainResult {
    std::uint64_t final_step = 0;
    json metrics;  // loop-specific summary
};

/// Per-step log rows flow through this sink (JSONL writer, test collector...).
using LogSink = std::function<void(const json& row)>;

inline int derived_step_count(const TrainConfig& config, std::size_t dataset_size) {
    if (config.max_steps > 0) return config.max_steps;
    int batches_per_epoch = static_cast<int>(
        (dataset_size + static_cast<std::size_t>(config.batch_size) - 1) /
        static_cast<std::size_t>(config.batch_size));
    return config.epochs * batches_per_epoch;
}

/// Supervised fine-tuning loop. Batches cycle through a per-epoch shuffled
/// record order; every source of randomness derives from `seed`.
inline TrainResult train_sft(const std::vector<CurationRecord>& records, PolicyBackend& policy,
                             const TrainConfig& config, std::uint64_t seed, const LogSink& log,
                             std::uint64_t start_step = 0) {
    validate(config);
    if (records.empty()) throw DataError("train_sft: empty dataset");
    const int steps = derived_step_count(config, records.size());
    const std::size_t batch = static_cast<std::size_t>(config.batch_size);

    std::vector<std::size_t> order(records.size());
    std::iota(order.begin(), order.end(), 0);
    std::size_t cursor = 0;
    std::uint64_t epoch = 0;
    auto reshuffle = [&]() {
        std::mt19937_64 rng(derive_seed(seed, "sft-epoch", epoch++));
        for (std::size_t i = order.size(); i > 1; --i)
            std::swap(order[i - 1], order[rng() % i]);
        cursor = 0;
    };
    reshuffle();

    double first_loss = 0.0, last_loss = 0.0;
    for (int s = 0; s < steps; ++s) {
        std::vector<CurationRecord> slice;
        for (std::size_t b = 0; b < batch; ++b) {
            if (cursor >= order.size()) reshuffle();
            slice.push_back(records[order[cursor++]]);
        }
        double loss = sft_loss(slice, policy);
        policy.apply_update(sft_gradient(slice, config.learning_rate));
        if (s == 0) first_loss = loss;
        last_loss = loss;
        if (log) log(json{{"step", start_step + static_cast<std::uint64_t>(s) + 1}, {"loss", loss}});
    }
    TrainResult out;
    out.final_step = start_step + static_cast<std::uint64_t>(steps);
    out.metrics = json{{"steps", steps}, {"first_loss", first_loss}, {"last_loss", last_loss}};
    return out;
}

/// Reward for one sampled response in the context of its source record.
using RewardFn = std::function<double(const CurationRecord&, const RawResponse&)>;

/// Group-relative reinforcement fine-tuning loop. Records cycle in dataset
/// order; one group, one update per step.
inline TrainResult train_rft(const std::vector<CurationRecord>& records, PolicyBackend& policy,
                             const SequenceScorer& reference, const RewardFn& reward_fn,
                             const TrainConfig& config, std::uint64_t seed, const LogSink& log,
                             std::uint64_t start_step = 0) {
    validate(config);
    if (records.empty()) throw DataError("train_rft: empty dataset");
    if (!reward_fn) throw ConfigError("train_rft: reward function not wired");
    const int steps = config.max_steps > 0 ? config.max_steps
                                           : derived_step_count(config, records.size());

    double reward_mean_acc = 0.0;
    for (int s = 0; s < steps; ++s) {
        const CurationRecord& record =
            records[static_cast<std::size_t>(s) % records.size()];
        TrajectoryGroup group =
            sample_group(policy, reference, record.question_text, config,
                         derive_seed(seed, "rft-step", static_cast<std::uint64_t>(s)));

        group.rewards.reserve(group.size());
        double format_hits = 0.0;
        for (const auto& response : group.responses) {
            group.rewards.push_back(reward_fn(record, response));
            format_hits += reasoning::format_reward(response);
        }
        group.advantages = compute_advantages(group.rewards, config.epsilon);

        ObjectiveResult obj = rft_objective(group, config);
        policy.apply_update(obj.signal);

        double n = static_cast<double>(group.size());
        double reward_mean = std::accumulate(group.rewards.begin(), group.rewards.end(), 0.0) / n;
        double var = 0.0;
        for (double r : group.rewards) var += (r - reward_mean) * (r - reward_mean);
        reward_mean_acc += reward_mean;
        if (log)
            log(json{{"step", start_step + static_cast<std::uint64_t>(s) + 1},
                     {"loss", obj.loss},
                     {"reward_mean", reward_mean},
                     {"reward_std", std::sqrt(var / n)},
                     {"format_rate", format_hits / n},
                     {"kl_mean", obj.kl_mean}});
    }
    TrainResult out;
    out.final_step = start_step + static_cast<std::uint64_t>(steps);
    out.metrics = json{{"steps", steps},
                       {"mean_reward", steps > 0 ? reward_mean_acc / steps : 0.0}};
    return out;
}

}  // namespace ctgen::grpo
