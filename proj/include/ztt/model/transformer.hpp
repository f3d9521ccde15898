// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "ztt/adaptive/telemetry.hpp"
#include "ztt/model/layers.hpp"
#include "ztt/model/schedule.hpp"

namespace ztt::model {

using numerics::TokenId;

// What one layer application saw and produced.
template <Real S>
struct ApplicationRecord {
    Application application;
    bool exit_path = false;  // tail re-applied for an intermediate exit
    Tensor<S> attention_weights;             // [batch, heads, seq, seq + 1]
    std::vector<double> zero_attn_per_query; // batch*seq
    std::vector<double> gate_per_token;      // batch*seq, empty when ungated
};

// Drives one forward pass cycle by cycle, so callers can stop early:
//
//   CycleRunner r(tape, params, config, tokens, batch, seq);
//   r.run_prefix();
//   for (c = 0; c < N; ++c) { r.run_cycle(c); ... r.exit_logits(c); }
//
// Variants without a cycled block run everything in run_prefix() and use
// final_logits().
template <Real S>
class CycleRunner {
public:
    CycleRunner(Tape<S>& tape, ModelParameters<S>& params, const ModelConfig& config,
                std::span<const TokenId> tokens, std::size_t batch, std::size_t seq,
                bool keep_weights = false);

    const CycleSchedule& schedule() const { return schedule_; }

    // Embedding plus every application before the cycled block.
    void run_prefix();
    // Cycled block for cycle c; cycles must run in order.
    void run_cycle(std::size_t cycle);
    // Logits after cycle c through the exit path. For the last cycle this is
    // the regular suffix and advances the main hidden state.
    Var exit_logits(std::size_t cycle);
    // Suffix, final norm and head; used when there is no cycled block.
    Var final_logits();

    Var hidden() const { return hidden_; }
    std::size_t cycles_run() const { return cycles_run_; }
    const adaptive::CycleTelemetry& telemetry() const { return telemetry_; }
    std::vector<ApplicationRecord<S>>& records() { return records_; }

private:
    Var apply(Var h, const Application& app, bool exit_path);
    Var head(Var h);

    Tape<S>& tape_;
    ModelParameters<S>& params_;
    const ModelConfig& config_;
    CycleSchedule schedule_;
    AttentionShape shape_;
    std::vector<TokenId> tokens_;
    bool keep_weights_;
    Var hidden_;
    std::size_t cycles_run_ = 0;
    adaptive::CycleTelemetry telemetry_;
    std::vector<ApplicationRecord<S>> records_;
};

template <Real S>
struct ForwardResult {
    std::vector<Var> exit_logits;  // one per exit, final exit last
    adaptive::CycleTelemetry telemetry;
    std::vector<ApplicationRecord<S>> records;
};

// Full forward pass over `batch` sequences of `seq` tokens (row-major). With
// capture_exits, every cycle produces an exit; otherwise only the final one.
template <Real S>
ForwardResult<S> forward(Tape<S>& tape, ModelParameters<S>& params, const ModelConfig& config,
                         std::span<const TokenId> tokens, std::size_t batch, std::size_t seq,
                         bool capture_exits, bool keep_weights = false);

}  // namespace ztt::model
