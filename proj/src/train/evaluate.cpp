// SPDX-License-Identifier: Apache-2.0
#include "ztt/train/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ztt/adaptive/telemetry.hpp"
#include "ztt/data/batches.hpp"
#include "ztt/errors.hpp"
#include "ztt/model/transformer.hpp"

namespace ztt::train {

namespace {

template <Real S>
double token_nll(std::span<const S> logits, TokenId target) {
    double max = -INFINITY;
    for (S v : logits) {
        max = std::max(max, static_cast<double>(v));
    }
    double total = 0.0;
    for (S v : logits) {
        total += std::exp(static_cast<double>(v) - max);
    }
    return std::log(total) + max - static_cast<double>(logits[static_cast<std::size_t>(target)]);
}

}  // namespace

template <Real S>
EvalReport evaluate(const model::ModelParameters<S>& params, const model::ModelConfig& config,
                    std::span<const TokenId> corpus, const EvalOptions& options) {
    config.validate();
    model::check_shapes(params, config);
    const bool adaptive_mode = options.policy.mode == adaptive::ExitMode::adaptive;
    if (adaptive_mode && !config.use_zero_token) {
        throw UsageError("adaptive evaluation needs a model with zero tokens");
    }
    const std::size_t T = config.t_max;
    std::size_t windows = data::window_count(corpus.size(), T);
    if (options.max_windows > 0) {
        windows = std::min(windows, options.max_windows);
    }
    if (windows == 0) {
        throw DataError("evaluation corpus of " + std::to_string(corpus.size()) +
                        " tokens is shorter than one window of " + std::to_string(T + 1));
    }
    const std::size_t batch_size = std::max<std::size_t>(options.batch, 1);
    // The forward pass only reads parameters, but takes them mutably.
    model::ModelParameters<S> local = params;

    std::vector<double> exit_nll;
    double adaptive_nll = 0.0;
    double cycles_total = 0.0;
    std::size_t tokens = 0;
    std::vector<std::vector<double>> zero_by_cycle, gate_by_cycle;

    for (std::size_t w0 = 0; w0 < windows; w0 += batch_size) {
        const std::size_t B = std::min(batch_size, windows - w0);
        std::vector<TokenId> inputs(B * T), targets(B * T);
        for (std::size_t b = 0; b < B; ++b) {
            const std::size_t off = (w0 + b) * T;
            std::copy_n(corpus.begin() + static_cast<std::ptrdiff_t>(off), T,
                        inputs.begin() + static_cast<std::ptrdiff_t>(b * T));
            std::copy_n(corpus.begin() + static_cast<std::ptrdiff_t>(off + 1), T,
                        targets.begin() + static_cast<std::ptrdiff_t>(b * T));
        }
        numerics::Tape<S> tape(false);
        auto fr = model::forward(tape, local, config, inputs, B, T, true);
        const std::size_t exits = fr.exit_logits.size();
        exit_nll.resize(exits, 0.0);
        zero_by_cycle.resize(exits);
        gate_by_cycle.resize(exits);

        // nll[e][r] for every exit and token row.
        std::vector<std::vector<double>> nll(exits, std::vector<double>(B * T));
        for (std::size_t e = 0; e < exits; ++e) {
            const auto& logits = tape.value(fr.exit_logits[e]);
            for (std::size_t r = 0; r < B * T; ++r) {
                nll[e][r] = token_nll<S>(logits.row(r), targets[r]);
                exit_nll[e] += nll[e][r];
            }
        }

        const adaptive::CycleTelemetry& tel = fr.telemetry;
        for (std::size_t c = 0; c < tel.cycles_recorded(); ++c) {
            const auto entries = tel.cycle_entries(c);
            for (std::size_t b = 0; b < B; ++b) {
                double z = 0.0, g = 0.0;
                std::size_t nz = 0, ng = 0;
                for (const auto* e : entries) {
                    if (!e->zero_attn_by_sequence.empty()) {
                        z += e->zero_attn_by_sequence[b];
                        ++nz;
                    }
                    if (!e->gate_by_sequence.empty()) {
                        g += e->gate_by_sequence[b];
                        ++ng;
                    }
                }
                if (nz > 0) {
                    zero_by_cycle[c].push_back(z / static_cast<double>(nz));
                }
                if (ng > 0) {
                    gate_by_cycle[c].push_back(g / static_cast<double>(ng));
                }
            }
        }

        if (adaptive_mode) {
            // One exit per sequence, from its zero attention averaged over
            // all of its positions.
            for (std::size_t b = 0; b < B; ++b) {
                adaptive::CycleTelemetry seq_tel;
                seq_tel.loop_count = tel.loop_count;
                for (const auto& e : tel.entries) {
                    adaptive::LayerCycleStats s;
                    s.layer = e.layer;
                    s.cycle = e.cycle;
                    if (!e.zero_attn_by_sequence.empty()) {
                        s.zero_attn_by_sequence = {e.zero_attn_by_sequence[b]};
                    }
                    seq_tel.entries.push_back(std::move(s));
                }
                std::vector<double> trace;
                std::size_t chosen = exits - 1;
                for (std::size_t c = 0; c < exits; ++c) {
                    trace.push_back(
                        adaptive::cycle_zero_attention(seq_tel, c, options.policy.aggregation));
                    if (adaptive::should_exit(trace, options.policy)) {
                        chosen = c;
                        break;
                    }
                }
                for (std::size_t t = 0; t < T; ++t) {
                    adaptive_nll += nll[chosen][b * T + t];
                }
                cycles_total += static_cast<double>((chosen + 1) * T);
            }
        }
        tokens += B * T;
    }

    EvalReport report;
    report.tokens = tokens;
    const double n = static_cast<double>(tokens);
    const std::size_t exits = exit_nll.size();
    for (std::size_t e = 0; e < exits; ++e) {
        const double loss = exit_nll[e] / n;
        report.exits.push_back({e + 1, loss, std::exp(loss)});
    }
    if (adaptive_mode) {
        const double loss = adaptive_nll / n;
        report.adaptive = AdaptiveResult{loss, std::exp(loss), cycles_total / n};
    }
    for (std::size_t c = 0; c < zero_by_cycle.size(); ++c) {
        CycleMean m;
        m.cycle = c + 1;
        if (!zero_by_cycle[c].empty()) {
            m.zero_attn = adaptive::order_free_mean(zero_by_cycle[c]);
        }
        if (!gate_by_cycle[c].empty()) {
            m.gate = adaptive::order_free_mean(gate_by_cycle[c]);
        }
        if (m.zero_attn || m.gate) {
            report.cycles.push_back(m);
        }
    }
    return report;
}

template EvalReport evaluate<float>(const model::ModelParameters<float>&, const model::ModelConfig&,
                                    std::span<const TokenId>, const EvalOptions&);
template EvalReport evaluate<double>(const model::ModelParameters<double>&,
                                     const model::ModelConfig&, std::span<const TokenId>,
                                     const EvalOptions&);

}  // namespace ztt::train
