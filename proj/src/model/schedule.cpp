// SPDX-License-Identifier: Apache-2.0
#include "ztt/model/schedule.hpp"

#include "ztt/errors.hpp"

namespace ztt::model {

CycleSchedule build_schedule(const ModelConfig& config) {
    config.validate();
    const std::vector<std::size_t> cycled = config.cycled_layers();
    if (cycled.empty() && config.loop_count > 1) {
        throw ConfigError("loop_count > 1 with an empty cycled set");
    }

    CycleSchedule s;
    s.loop_count = config.loop_count;
    s.block_length = cycled.size();

    if (cycled.empty()) {
        for (std::size_t l = 0; l < config.all_layers; ++l) {
            s.applications.push_back({l, 0, false});
        }
        s.prefix_length = config.all_layers;
        s.exit_points.push_back(config.all_layers - 1);
        return s;
    }

    const std::size_t first = cycled.front();
    const std::size_t last = cycled.back();
    for (std::size_t l = 0; l < first; ++l) {
        s.applications.push_back({l, 0, false});
    }
    s.prefix_length = first;
    for (std::size_t c = 0; c < config.loop_count; ++c) {
        for (std::size_t l : cycled) {
            s.applications.push_back({l, c, true});
        }
        s.exit_points.push_back(s.applications.size() - 1);
    }
    for (std::size_t l = last + 1; l < config.all_layers; ++l) {
        s.applications.push_back({l, 0, false});
    }
    return s;
}

}  // namespace ztt::model
