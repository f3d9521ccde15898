// SPDX-License-Identifier: Apache-2.0
#include "ztt/adaptive/telemetry.hpp"

#include <algorithm>
#include <string>

#include "ztt/errors.hpp"

namespace ztt::adaptive {

double order_free_mean(std::span<const double> values) {
    if (values.empty()) {
        throw UsageError("mean of an empty set");
    }
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    double total = 0.0;
    for (double v : sorted) {
        total += v;
    }
    return total / static_cast<double>(sorted.size());
}

std::optional<double> LayerCycleStats::zero_attn_mean() const {
    if (zero_attn_by_sequence.empty()) {
        return std::nullopt;
    }
    return order_free_mean(zero_attn_by_sequence);
}

std::optional<double> LayerCycleStats::gate_mean() const {
    if (gate_by_sequence.empty()) {
        return std::nullopt;
    }
    return order_free_mean(gate_by_sequence);
}

std::vector<const LayerCycleStats*> CycleTelemetry::cycle_entries(std::size_t cycle) const {
    std::vector<const LayerCycleStats*> out;
    for (const auto& e : entries) {
        if (e.cycle == cycle) {
            out.push_back(&e);
        }
    }
    return out;
}

std::size_t CycleTelemetry::cycles_recorded() const {
    std::size_t n = 0;
    for (const auto& e : entries) {
        n = std::max(n, e.cycle + 1);
    }
    return n;
}

std::optional<double> CycleTelemetry::cycle_gate(std::size_t cycle) const {
    std::vector<double> means;
    for (const LayerCycleStats* e : cycle_entries(cycle)) {
        if (auto g = e->gate_mean()) {
            means.push_back(*g);
        }
    }
    if (means.empty()) {
        return std::nullopt;
    }
    return order_free_mean(means);
}

double cycle_zero_attention(const CycleTelemetry& telemetry, std::size_t cycle,
                            Aggregation aggregation) {
    const auto layers = telemetry.cycle_entries(cycle);
    if (layers.empty()) {
        throw UsageError("no telemetry recorded for cycle " + std::to_string(cycle));
    }
    if (aggregation == Aggregation::last_cycled_layer) {
        auto v = layers.back()->zero_attn_mean();
        if (!v) {
            throw UsageError("cycle " + std::to_string(cycle) + " has no zero-token attention");
        }
        return *v;
    }
    std::vector<double> means;
    for (const LayerCycleStats* e : layers) {
        auto v = e->zero_attn_mean();
        if (!v) {
            throw UsageError("cycle " + std::to_string(cycle) + " has no zero-token attention");
        }
        means.push_back(*v);
    }
    return order_free_mean(means);
}

}  // namespace ztt::adaptive
