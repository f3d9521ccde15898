// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <fstream>
#include <functional>
#include <optional>
#include <string>

namespace ztt::train {

inline constexpr const char* kMetricsHeader =
    "step,split,exit,loss,ppl,cycle,zero_attn_mean,gate_mean,lr,avg_loop";

// One line of the metrics stream; unset fields are written empty. `exit` and
// `cycle` are 1-based.
struct MetricsRow {
    std::size_t step = 0;
    std::string split;
    std::optional<std::size_t> exit;
    std::optional<double> loss;
    std::optional<double> ppl;
    std::optional<std::size_t> cycle;
    std::optional<double> zero_attn_mean;
    std::optional<double> gate_mean;
    std::optional<double> lr;
    std::optional<double> avg_loop;
};

std::string format_row(const MetricsRow& row);

using MetricsSink = std::function<void(const MetricsRow&)>;

// Appends rows to a CSV file, writing the header first if the file is empty.
class CsvMetrics {
public:
    explicit CsvMetrics(const std::string& path);
    void write(const MetricsRow& row);
    MetricsSink sink() {
        return [this](const MetricsRow& r) { write(r); };
    }

private:
    std::ofstream out_;
};

}  // namespace ztt::train
