// SPDX-License-Identifier: Apache-2.0
#include "ztt/model/transformer.hpp"

#include <string>

#include "ztt/errors.hpp"

namespace ztt::model {

namespace {

std::vector<double> per_sequence_means(const std::vector<double>& values, std::size_t batch,
                                       std::size_t seq) {
    std::vector<double> out(batch, 0.0);
    for (std::size_t b = 0; b < batch; ++b) {
        double acc = 0.0;
        for (std::size_t t = 0; t < seq; ++t) {
            acc += values[b * seq + t];
        }
        out[b] = acc / static_cast<double>(seq);
    }
    return out;
}

}  // namespace

template <Real S>
CycleRunner<S>::CycleRunner(Tape<S>& tape, ModelParameters<S>& params, const ModelConfig& config,
                            std::span<const TokenId> tokens, std::size_t batch, std::size_t seq,
                            bool keep_weights)
    : tape_(tape),
      params_(params),
      config_(config),
      schedule_(build_schedule(config)),
      shape_{batch, seq, config.n_heads},
      tokens_(tokens.begin(), tokens.end()),
      keep_weights_(keep_weights) {
    if (batch == 0 || seq == 0) {
        throw DimensionError("forward needs at least one sequence of one token");
    }
    if (tokens.size() != batch * seq) {
        throw DimensionError("forward: " + std::to_string(tokens.size()) + " tokens for " +
                             std::to_string(batch) + " x " + std::to_string(seq));
    }
    if (seq > config.t_max) {
        throw DimensionError("sequence length " + std::to_string(seq) + " exceeds t_max " +
                             std::to_string(config.t_max));
    }
    for (TokenId id : tokens_) {
        if (id < 0 || static_cast<std::size_t>(id) >= config.vocab) {
            throw IndexError("token id " + std::to_string(id) + " outside vocabulary of " +
                             std::to_string(config.vocab));
        }
    }
    telemetry_.loop_count = config.loop_count;
}

template <Real S>
Var CycleRunner<S>::apply(Var h, const Application& app, bool exit_path) {
    LayerParameters<S>& layer = params_.layers.at(app.layer);
    std::optional<Var> zkey;
    if (config_.use_zero_token && app.cycled) {
        zkey = tape_.param(params_.zero_keys.at(config_.zero_key_index(app.layer, app.cycle)));
    }
    const S eps = static_cast<S>(config_.ln_eps);
    auto att = attention_with_zero_token(tape_, h, layer, zkey, shape_, eps);
    auto ffn = gated_ffn(tape_, att.output, layer, eps);

    if (app.cycled && !exit_path) {
        adaptive::LayerCycleStats stats;
        stats.layer = app.layer;
        stats.cycle = app.cycle;
        if (zkey) {
            stats.zero_attn_by_sequence =
                per_sequence_means(att.zero_attn_per_query, shape_.batch, shape_.seq);
        }
        if (!ffn.gate_per_token.empty()) {
            stats.gate_by_sequence = per_sequence_means(ffn.gate_per_token, shape_.batch, shape_.seq);
        }
        telemetry_.entries.push_back(std::move(stats));
    }
    ApplicationRecord<S> rec;
    rec.application = app;
    rec.exit_path = exit_path;
    if (keep_weights_) {
        rec.attention_weights = std::move(att.weights);
    }
    rec.zero_attn_per_query = std::move(att.zero_attn_per_query);
    rec.gate_per_token = std::move(ffn.gate_per_token);
    records_.push_back(std::move(rec));
    return ffn.output;
}

template <Real S>
Var CycleRunner<S>::head(Var h) {
    using namespace numerics;
    Var n = layer_norm(tape_, h, tape_.param(params_.final_gamma), tape_.param(params_.final_beta),
                       static_cast<S>(config_.ln_eps));
    return matmul_nt(tape_, n, tape_.param(params_.output_matrix()));
}

template <Real S>
void CycleRunner<S>::run_prefix() {
    using namespace numerics;
    const std::size_t B = shape_.batch, T = shape_.seq;
    std::vector<TokenId> positions(B * T);
    for (std::size_t b = 0; b < B; ++b) {
        for (std::size_t t = 0; t < T; ++t) {
            positions[b * T + t] = static_cast<TokenId>(t);
        }
    }
    Var tok = embedding(tape_, tape_.param(params_.token_embedding), tokens_);
    Var pos = embedding(tape_, tape_.param(params_.position_embedding), positions);
    hidden_ = add(tape_, tok, pos);
    for (std::size_t i = 0; i < schedule_.prefix_length; ++i) {
        hidden_ = apply(hidden_, schedule_.applications[i], false);
    }
}

template <Real S>
void CycleRunner<S>::run_cycle(std::size_t cycle) {
    if (cycle != cycles_run_ || cycle >= schedule_.loop_count || schedule_.block_length == 0) {
        throw UsageError("run_cycle(" + std::to_string(cycle) + ") out of order or out of range");
    }
    const std::size_t begin = schedule_.prefix_length + cycle * schedule_.block_length;
    for (std::size_t i = begin; i < begin + schedule_.block_length; ++i) {
        hidden_ = apply(hidden_, schedule_.applications[i], false);
    }
    ++cycles_run_;
}

template <Real S>
Var CycleRunner<S>::exit_logits(std::size_t cycle) {
    if (cycle + 1 != cycles_run_) {
        throw UsageError("exit after cycle " + std::to_string(cycle) +
                         " requested, but the last completed cycle is " +
                         std::to_string(cycles_run_));
    }
    const bool last = cycle + 1 == schedule_.loop_count;
    Var h = hidden_;
    for (std::size_t i = schedule_.suffix_begin(); i < schedule_.length(); ++i) {
        h = apply(h, schedule_.applications[i], !last);
    }
    if (last) {
        hidden_ = h;
    }
    return head(h);
}

template <Real S>
Var CycleRunner<S>::final_logits() {
    if (schedule_.block_length != 0) {
        if (cycles_run_ == 0) {
            throw UsageError("final_logits before any cycle ran");
        }
        return exit_logits(cycles_run_ - 1);
    }
    return head(hidden_);
}

template <Real S>
ForwardResult<S> forward(Tape<S>& tape, ModelParameters<S>& params, const ModelConfig& config,
                         std::span<const TokenId> tokens, std::size_t batch, std::size_t seq,
                         bool capture_exits, bool keep_weights) {
    CycleRunner<S> runner(tape, params, config, tokens, batch, seq, keep_weights);
    ForwardResult<S> res;
    runner.run_prefix();
    const CycleSchedule& s = runner.schedule();
    if (s.block_length == 0) {
        res.exit_logits.push_back(runner.final_logits());
    } else {
        for (std::size_t c = 0; c < s.loop_count; ++c) {
            runner.run_cycle(c);
            if (capture_exits || c + 1 == s.loop_count) {
                res.exit_logits.push_back(runner.exit_logits(c));
            }
        }
    }
    res.telemetry = runner.telemetry();
    res.records = std::move(runner.records());
    return res;
}

template class CycleRunner<float>;
template class CycleRunner<double>;
template ForwardResult<float> forward<float>(Tape<float>&, ModelParameters<float>&,
                                             const ModelConfig&, std::span<const TokenId>,
                                             std::size_t, std::size_t, bool, bool);
template ForwardResult<double> forward<double>(Tape<double>&, ModelParameters<double>&,
                                               const ModelConfig&, std::span<const TokenId>,
                                               std::size_t, std::size_t, bool, bool);

}  // namespace ztt::model
