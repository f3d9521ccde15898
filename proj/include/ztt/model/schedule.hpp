// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <vector>

#include "ztt/model/config.hpp"

namespace ztt::model {

struct Application {
    std::size_t layer = 0;  // distinct layer id, 0-based
    std::size_t cycle = 0;  // 0-based; 0 for layers outside the cycled block
    bool cycled = false;

    friend bool operator==(const Application&, const Application&) = default;
};

// Ordered layer applications of one forward pass. exit_points[c] is the index
// of the application that completes cycle c; an exit after cycle c routes
// the hidden state from there through the layers after the cycled block
// (the tail for HTC/ZTT, nothing for BC), the final norm and the LM head.
struct CycleSchedule {
    std::vector<Application> applications;
    std::vector<std::size_t> exit_points;
    std::size_t loop_count = 1;
    std::size_t prefix_length = 0;  // applications before the first cycled one
    std::size_t block_length = 0;   // cycled applications per cycle

    std::size_t length() const { return applications.size(); }
    std::size_t suffix_begin() const { return prefix_length + block_length * loop_count; }
};

CycleSchedule build_schedule(const ModelConfig& config);

}  // namespace ztt::model
