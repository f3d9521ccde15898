// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "ztt/numerics/ops.hpp"

namespace ztt::train {

using numerics::Real;
using numerics::TokenId;
using numerics::Var;

struct TrainPlan {
    std::size_t steps = 2000;
    double lr = 1e-3;  // peak
    double warmup_frac = 0.01;
    double weight_decay = 0.01;
    std::size_t batch = 8;
    std::size_t grad_accum = 1;
    std::uint64_t seed = 1;
    std::size_t log_interval = 50;
    // Stop once this many steps are done (0: run to `steps`). The schedule
    // still spans `steps`, so a later resume continues the same run.
    std::size_t stop_after = 0;
    // One weight per exit; empty means uniform.
    std::vector<double> exit_weights;
};

std::size_t warmup_steps(const TrainPlan& plan);

// Linear warmup from 0 to the peak, then cosine decay towards 0 at `steps`.
double learning_rate(const TrainPlan& plan, std::size_t step);

// Exit weights for `exits` exits: uniform when the plan gives none. Throws
// ConfigError on a count mismatch, negative weights or a sum other than 1.
std::vector<double> resolve_exit_weights(const TrainPlan& plan, std::size_t exits);

// Weighted sum of the per-exit mean cross-entropies.
template <Real S>
Var multi_exit_loss(numerics::Tape<S>& tape, std::span<const Var> exit_logits,
                    std::span<const TokenId> targets, std::span<const double> weights);

}  // namespace ztt::train
