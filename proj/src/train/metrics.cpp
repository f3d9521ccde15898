// SPDX-License-Identifier: Apache-2.0
#include "ztt/train/metrics.hpp"

#include <cstdio>
#include <filesystem>

#include "ztt/errors.hpp"

namespace ztt::train {

namespace {

std::string field(const std::optional<double>& v) {
    if (!v) {
        return {};
    }
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.9g", *v);
    return buf;
}

std::string field(const std::optional<std::size_t>& v) {
    return v ? std::to_string(*v) : std::string{};
}

}  // namespace

std::string format_row(const MetricsRow& row) {
    std::string s = std::to_string(row.step);
    for (const std::string& f :
         {row.split, field(row.exit), field(row.loss), field(row.ppl), field(row.cycle),
          field(row.zero_attn_mean), field(row.gate_mean), field(row.lr), field(row.avg_loop)}) {
        s += ',';
        s += f;
    }
    return s;
}

CsvMetrics::CsvMetrics(const std::string& path) {
    std::error_code ec;
    const bool fresh = !std::filesystem::exists(path, ec) || std::filesystem::file_size(path, ec) == 0;
    out_.open(path, std::ios::app);
    if (!out_) {
        throw Error("cannot open metrics file " + path);
    }
    if (fresh) {
        out_ << kMetricsHeader << '\n';
    }
}

void CsvMetrics::write(const MetricsRow& row) {
    out_ << format_row(row) << '\n';
    out_.flush();
}

}  // namespace ztt::train
