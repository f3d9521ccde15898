// SPDX-License-Identifier: Apache-2.0
#include "ztt/train/plan.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "ztt/errors.hpp"

namespace ztt::train {

std::size_t warmup_steps(const TrainPlan& plan) {
    if (plan.warmup_frac <= 0.0) {
        return 0;
    }
    const auto w = static_cast<std::size_t>(std::ceil(plan.warmup_frac * static_cast<double>(plan.steps)));
    return std::max<std::size_t>(w, 1);
}

double learning_rate(const TrainPlan& plan, std::size_t step) {
    const std::size_t warm = warmup_steps(plan);
    if (step < warm) {
        return plan.lr * static_cast<double>(step) / static_cast<double>(warm);
    }
    if (plan.steps <= warm) {
        return plan.lr;
    }
    const double progress =
        std::min(1.0, static_cast<double>(step - warm) / static_cast<double>(plan.steps - warm));
    return plan.lr * 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
}

std::vector<double> resolve_exit_weights(const TrainPlan& plan, std::size_t exits) {
    if (exits == 0) {
        throw ConfigError("multi-exit loss needs at least one exit");
    }
    if (plan.exit_weights.empty()) {
        return std::vector<double>(exits, 1.0 / static_cast<double>(exits));
    }
    if (plan.exit_weights.size() != exits) {
        throw ConfigError("exit_weights has " + std::to_string(plan.exit_weights.size()) +
                          " entries but the model has " + std::to_string(exits) + " exits");
    }
    double total = 0.0;
    for (double w : plan.exit_weights) {
        if (!(w >= 0.0)) {
            throw ConfigError("exit weights must be non-negative");
        }
        total += w;
    }
    if (std::abs(total - 1.0) > 1e-9) {
        throw ConfigError("exit weights sum to " + std::to_string(total) + ", expected 1");
    }
    return plan.exit_weights;
}

template <Real S>
Var multi_exit_loss(numerics::Tape<S>& tape, std::span<const Var> exit_logits,
                    std::span<const TokenId> targets, std::span<const double> weights) {
    if (exit_logits.empty()) {
        throw ConfigError("multi-exit loss needs at least one exit");
    }
    if (weights.size() != exit_logits.size()) {
        throw ConfigError(std::to_string(weights.size()) + " exit weights for " +
                          std::to_string(exit_logits.size()) + " exits");
    }
    std::vector<Var> losses;
    std::vector<S> w;
    for (std::size_t i = 0; i < exit_logits.size(); ++i) {
        losses.push_back(numerics::cross_entropy(tape, exit_logits[i], targets));
        w.push_back(static_cast<S>(weights[i]));
    }
    if (losses.size() == 1 && w[0] == S{1}) {
        return losses[0];
    }
    return numerics::weighted_sum<S>(tape, losses, w);
}

template Var multi_exit_loss<float>(numerics::Tape<float>&, std::span<const Var>,
                                    std::span<const TokenId>, std::span<const double>);
template Var multi_exit_loss<double>(numerics::Tape<double>&, std::span<const Var>,
                                     std::span<const TokenId>, std::span<const double>);

}  // namespace ztt::train
