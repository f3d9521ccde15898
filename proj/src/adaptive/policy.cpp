// SPDX-License-Identifier: Apache-2.0
#include "ztt/adaptive/policy.hpp"

namespace ztt::adaptive {

namespace {

bool crosses(double value, const ExitPolicy& policy) {
    return policy.threshold < 1.0 && value >= policy.threshold;
}

}  // namespace

bool should_exit(std::span<const double> trace, const ExitPolicy& policy) {
    if (policy.mode != ExitMode::adaptive || trace.empty()) {
        return false;
    }
    for (std::size_t i = 0; i + 1 < trace.size(); ++i) {
        if (crosses(trace[i], policy)) {
            return false;  // already exited earlier
        }
    }
    return crosses(trace.back(), policy);
}

std::optional<std::size_t> first_exit_cycle(std::span<const double> trace,
                                            const ExitPolicy& policy) {
    for (std::size_t n = 1; n <= trace.size(); ++n) {
        if (should_exit(trace.first(n), policy)) {
            return n;
        }
    }
    return std::nullopt;
}

}  // namespace ztt::adaptive
