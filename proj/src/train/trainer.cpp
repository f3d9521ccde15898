// SPDX-License-Identifier: Apache-2.0
#include "ztt/train/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ztt/data/batches.hpp"
#include "ztt/errors.hpp"
#include "ztt/model/transformer.hpp"

namespace ztt::train {

template <Real S>
TrainState<S> fresh_state(const ModelConfig& config, std::uint64_t seed) {
    config.validate();
    return TrainState<S>{model::init_parameters<S>(config, seed), {}, 0};
}

namespace {

void log_telemetry(const MetricsSink& sink, std::size_t step, const adaptive::CycleTelemetry& tel) {
    for (std::size_t c = 0; c < tel.cycles_recorded(); ++c) {
        MetricsRow row;
        row.step = step;
        row.split = "train";
        row.cycle = c + 1;
        bool any = false;
        for (const auto* e : tel.cycle_entries(c)) {
            any = any || e->zero_attn_mean().has_value();
        }
        if (any) {
            row.zero_attn_mean = adaptive::cycle_zero_attention(tel, c);
        }
        row.gate_mean = tel.cycle_gate(c);
        if (row.zero_attn_mean || row.gate_mean) {
            sink(row);
        }
    }
}

}  // namespace

template <Real S>
std::vector<StepLog> train(TrainState<S>& state, const TrainPlan& plan, const ModelConfig& config,
                           std::span<const TokenId> corpus, const MetricsSink& sink) {
    config.validate();
    model::check_shapes(state.params, config);
    if (plan.batch == 0 || plan.grad_accum == 0) {
        throw ConfigError("batch and grad_accum must be positive");
    }
    data::BatchPlan bp;
    bp.seq_len = config.t_max;
    bp.batch = plan.batch;
    bp.seed = plan.seed;

    std::vector<numerics::Parameter<S>*> params = state.params.all();
    std::vector<StepLog> log;
    const S micro_scale = S{1} / static_cast<S>(plan.grad_accum);

    const std::size_t end = plan.stop_after > 0 ? std::min(plan.steps, plan.stop_after) : plan.steps;
    for (; state.step < end; ++state.step) {
        const std::size_t step = state.step;
        const double lr = learning_rate(plan, step);
        state.params.zero_grad();
        double loss_total = 0.0;
        std::vector<double> exit_loss;
        adaptive::CycleTelemetry telemetry;
        for (std::size_t a = 0; a < plan.grad_accum; ++a) {
            const data::Batch batch = data::next_batch(bp, corpus, step * plan.grad_accum + a);
            numerics::Tape<S> tape(true);
            auto fr = model::forward(tape, state.params, config, batch.inputs, batch.batch,
                                     batch.seq_len, config.early_exit_heads);
            const auto weights = resolve_exit_weights(plan, fr.exit_logits.size());
            Var loss = multi_exit_loss<S>(tape, fr.exit_logits, batch.targets, weights);
            const double value = static_cast<double>(tape.value(loss).item());
            if (!std::isfinite(value)) {
                throw NumericError("non-finite training loss " + std::to_string(value) +
                                   " at step " + std::to_string(step) + " (lr " +
                                   std::to_string(lr) + ")");
            }
            tape.backward(plan.grad_accum > 1 ? numerics::scale(tape, loss, micro_scale) : loss);
            loss_total += value;
            if (a + 1 == plan.grad_accum && sink && plan.log_interval > 0 &&
                (step % plan.log_interval == 0 || step + 1 == plan.steps)) {
                for (Var e : fr.exit_logits) {
                    numerics::Tape<S> scratch(false);
                    Var logits = scratch.constant(tape.value(e));
                    exit_loss.push_back(static_cast<double>(
                        scratch.value(numerics::cross_entropy(scratch, logits, batch.targets)).item()));
                }
                telemetry = std::move(fr.telemetry);
            }
        }
        state.optimizer.hyper.lr = lr;
        state.optimizer.hyper.weight_decay = plan.weight_decay;
        numerics::adamw_step<S>(state.optimizer, params);

        const double loss = loss_total / static_cast<double>(plan.grad_accum);
        log.push_back({step, loss, lr});
        if (sink) {
            MetricsRow row;
            row.step = step;
            row.split = "train";
            row.loss = loss;
            row.ppl = std::exp(loss);
            row.lr = lr;
            sink(row);
            for (std::size_t e = 0; e < exit_loss.size(); ++e) {
                MetricsRow er;
                er.step = step;
                er.split = "train";
                er.exit = e + 1;
                er.loss = exit_loss[e];
                er.ppl = std::exp(exit_loss[e]);
                sink(er);
            }
            if (!exit_loss.empty()) {
                log_telemetry(sink, step, telemetry);
            }
        }
    }
    return log;
}

template TrainState<float> fresh_state<float>(const ModelConfig&, std::uint64_t);
template TrainState<double> fresh_state<double>(const ModelConfig&, std::uint64_t);
template std::vector<StepLog> train<float>(TrainState<float>&, const TrainPlan&, const ModelConfig&,
                                           std::span<const TokenId>, const MetricsSink&);
template std::vector<StepLog> train<double>(TrainState<double>&, const TrainPlan&,
                                            const ModelConfig&, std::span<const TokenId>,
                                            const MetricsSink&);

}  // namespace ztt::train
