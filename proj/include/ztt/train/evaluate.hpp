// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "ztt/adaptive/policy.hpp"
#include "ztt/model/params.hpp"
#include "ztt/train/plan.hpp"

namespace ztt::train {

struct EvalOptions {
    adaptive::ExitPolicy policy;
    std::size_t batch = 8;
    std::size_t max_windows = 0;  // 0 = every window
};

struct ExitResult {
    std::size_t exit = 0;  // 1-based cycle
    double loss = 0.0;
    double ppl = 0.0;
};

struct AdaptiveResult {
    double loss = 0.0;
    double ppl = 0.0;
    double avg_loop = 0.0;
};

struct CycleMean {
    std::size_t cycle = 0;  // 1-based
    std::optional<double> zero_attn;
    std::optional<double> gate;
};

struct EvalReport {
    std::size_t tokens = 0;
    std::vector<ExitResult> exits;  // one per cycle (one total without a cycled block)
    std::optional<AdaptiveResult> adaptive;
    std::vector<CycleMean> cycles;
};

// Teacher-forced evaluation over consecutive t_max windows of `corpus`.
// Perplexity is exp of the per-token mean nll. In adaptive mode each window
// leaves at the first cycle whose zero attention, averaged over the window's
// positions and aggregated over the cycle's layers, reaches the threshold.
// Avg_Loop is the token-weighted mean of the cycles used.
template <Real S>
EvalReport evaluate(const model::ModelParameters<S>& params, const model::ModelConfig& config,
                    std::span<const TokenId> corpus, const EvalOptions& options = {});

}  // namespace ztt::train
