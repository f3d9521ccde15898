// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "ztt/model/params.hpp"
#include "ztt/numerics/adamw.hpp"
#include "ztt/train/metrics.hpp"
#include "ztt/train/plan.hpp"

namespace ztt::train {

using model::ModelConfig;
using model::ModelParameters;

// Everything a resumed run needs.
template <Real S>
struct TrainState {
    ModelParameters<S> params;
    numerics::OptimizerState<S> optimizer;
    std::size_t step = 0;  // optimizer steps completed
};

template <Real S>
TrainState<S> fresh_state(const ModelConfig& config, std::uint64_t seed);

struct StepLog {
    std::size_t step = 0;
    double loss = 0.0;  // training objective, mean over micro-batches
    double lr = 0.0;
};

// Runs optimizer steps from state.step up to plan.steps on `corpus`, using
// windows of config.t_max tokens. Micro-batch a of step s reads sample slots
// (s*grad_accum + a)*batch onwards, so accumulation k with batch B sees the
// same windows as accumulation 1 with batch k*B. Throws NumericError on a
// non-finite loss.
template <Real S>
std::vector<StepLog> train(TrainState<S>& state, const TrainPlan& plan, const ModelConfig& config,
                           std::span<const TokenId> corpus, const MetricsSink& sink = {});

}  // namespace ztt::train
