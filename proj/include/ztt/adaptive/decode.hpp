// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "ztt/adaptive/policy.hpp"
#include "ztt/model/params.hpp"
#include "ztt/model/schedule.hpp"
#include "ztt/numerics/ops.hpp"

namespace ztt::adaptive {

using model::ModelConfig;
using model::ModelParameters;
using numerics::Real;
using numerics::Tensor;
using numerics::TokenId;

template <Real S>
class Decoder;

// Key/value cache for incremental decoding. Every layer application gets its
// own slot: one per schedule entry, plus one per suffix layer for each
// intermediate exit (the tail re-applied to an earlier cycle's state). A
// position that exited early leaves deeper slots absent; they are filled on
// demand when a later position needs them, so every cached key matches what
// a full forward pass over the prefix would compute.
template <Real S>
class DecodeCache {
public:
    explicit DecodeCache(const ModelConfig& config);

    std::size_t position() const { return tokens_.size(); }
    const std::vector<TokenId>& tokens() const { return tokens_; }
    const ModelConfig& config() const { return config_; }
    // Number of (slot, position) applications computed so far.
    std::uint64_t applications_computed() const { return computed_; }

    struct Slot {
        Tensor<S> keys, values, outputs;  // t_max x d_model
        std::vector<double> zero_attn;    // per position, mean over heads
        std::vector<double> gate;         // per position
        std::vector<char> ready;
    };

private:
    template <Real U>
    friend class Decoder;

    ModelConfig config_;
    model::CycleSchedule schedule_;
    std::vector<TokenId> tokens_;
    Tensor<S> embedded_;       // t_max x d_model
    std::vector<Slot> main_;   // per schedule application
    std::vector<Slot> exits_;  // [cycle * suffix_len + i] for cycles before the last
    std::uint64_t computed_ = 0;
};

template <Real S>
struct DecodeStep {
    Tensor<S> logits;  // vocab
    std::size_t cycles_used = 0;
    CycleTelemetry telemetry;  // this position only
};

// Appends one token and returns next-token logits for it. In adaptive mode
// the position's own zero attention (mean over heads and the cycle's layers)
// decides after each cycle whether to stop.
template <Real S>
DecodeStep<S> decode_step(DecodeCache<S>& cache, TokenId token, const ModelParameters<S>& params,
                          const ModelConfig& config, const ExitPolicy& policy);

struct Sampler {
    enum class Kind { greedy, temperature } kind = Kind::greedy;
    double temperature = 1.0;
    std::uint64_t seed = 0;
};

struct Generation {
    std::vector<TokenId> ids;              // prompt followed by new tokens
    std::vector<std::size_t> cycles_used;  // one per generated token
};

template <Real S>
Generation generate(std::span<const TokenId> prompt, std::size_t max_new_tokens,
                    const ModelParameters<S>& params, const ModelConfig& config,
                    const ExitPolicy& policy, const Sampler& sampler);

}  // namespace ztt::adaptive
