// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <optional>
#include <span>

#include "ztt/adaptive/telemetry.hpp"

namespace ztt::adaptive {

enum class ExitMode { fixed_n, adaptive };

struct ExitPolicy {
    ExitMode mode = ExitMode::fixed_n;
    double threshold = 1.0;  // P
    Aggregation aggregation = Aggregation::all_cycled_layers;

    static ExitPolicy fixed() { return {}; }
    static ExitPolicy adaptive_at(double p,
                                  Aggregation agg = Aggregation::all_cycled_layers) {
        return {ExitMode::adaptive, p, agg};
    }
};

// True when the latest cycle in `trace` (per-cycle zero attention, oldest
// first) is the first one whose value reaches the threshold. Thresholds >= 1
// never fire: softmax mass on one slot is below 1, and rounding must not make
// it look otherwise.
bool should_exit(std::span<const double> trace, const ExitPolicy& policy);

// 1-based cycle at which `trace` triggers an exit, or nullopt if it never does.
std::optional<std::size_t> first_exit_cycle(std::span<const double> trace,
                                            const ExitPolicy& policy);

}  // namespace ztt::adaptive
