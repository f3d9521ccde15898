// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace ztt::adaptive {

// Mean that does not depend on the order of its inputs: values are sorted
// before the sequential sum.
double order_free_mean(std::span<const double> values);

// Statistics of one cycled application (layer, cycle). Means are kept per
// sequence so batch-level aggregates are permutation invariant.
struct LayerCycleStats {
    std::size_t layer = 0;
    std::size_t cycle = 0;
    // Mean slot-0 attention over heads and query positions, per sequence.
    // Empty when the layer has no zero token.
    std::vector<double> zero_attn_by_sequence;
    // Mean gate output over positions, per sequence. Empty when ungated.
    std::vector<double> gate_by_sequence;

    std::optional<double> zero_attn_mean() const;
    std::optional<double> gate_mean() const;
};

enum class Aggregation { all_cycled_layers, last_cycled_layer };

struct CycleTelemetry {
    std::size_t loop_count = 0;
    std::vector<LayerCycleStats> entries;  // schedule order

    std::vector<const LayerCycleStats*> cycle_entries(std::size_t cycle) const;
    std::size_t cycles_recorded() const;
    // Mean gate over the cycle's gated layers, if any.
    std::optional<double> cycle_gate(std::size_t cycle) const;
};

// Mean over the cycle's cycled layers of their zero-attention means (or the
// last layer's only). UsageError when the cycle is absent or carries no
// zero-token statistics.
double cycle_zero_attention(const CycleTelemetry& telemetry, std::size_t cycle,
                            Aggregation aggregation = Aggregation::all_cycled_layers);

}  // namespace ztt::adaptive
