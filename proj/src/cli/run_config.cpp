// SPDX-License-Identifier: Apache-2.0
#include "ztt/cli/run_config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <vector>

#include "ztt/errors.hpp"

namespace ztt::cli {

namespace {

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

struct Key {
    std::string name;
    std::function<void(RunConfig&, std::string_view)> set;
    std::function<std::string(const RunConfig&)> get;
};

[[noreturn]] void bad_value(std::string_view key, std::string_view value, std::string_view want) {
    throw ConfigError("key '" + std::string(key) + "': cannot parse '" + std::string(value) +
                      "' as " + std::string(want));
}

std::size_t parse_size(std::string_view key, std::string_view v) {
    std::size_t out = 0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || p != v.data() + v.size()) {
        bad_value(key, v, "a non-negative integer");
    }
    return out;
}

double parse_double(std::string_view key, std::string_view v) {
    std::string s(v);
    char* end = nullptr;
    const double out = std::strtod(s.c_str(), &end);
    if (s.empty() || end != s.c_str() + s.size()) {
        bad_value(key, v, "a number");
    }
    return out;
}

bool parse_bool(std::string_view key, std::string_view v) {
    if (v == "true" || v == "1") {
        return true;
    }
    if (v == "false" || v == "0") {
        return false;
    }
    bad_value(key, v, "a boolean (true/false)");
}

template <typename T>
Key size_key(std::string name, T RunConfig::*group, std::size_t T::*field) {
    return {name,
            [name, group, field](RunConfig& c, std::string_view v) {
                c.*group.*field = parse_size(name, v);
            },
            [group, field](const RunConfig& c) { return std::to_string(c.*group.*field); }};
}

template <typename T>
Key bool_key(std::string name, T RunConfig::*group, bool T::*field) {
    return {name,
            [name, group, field](RunConfig& c, std::string_view v) {
                c.*group.*field = parse_bool(name, v);
            },
            [group, field](const RunConfig& c) {
                return std::string(c.*group.*field ? "true" : "false");
            }};
}

template <typename T>
Key double_key(std::string name, T RunConfig::*group, double T::*field) {
    return {name,
            [name, group, field](RunConfig& c, std::string_view v) {
                c.*group.*field = parse_double(name, v);
            },
            [group, field](const RunConfig& c) { return format_double(c.*group.*field); }};
}

const std::vector<Key>& keys() {
    using model::ModelConfig;
    using train::TrainPlan;
    static const std::vector<Key> table = [] {
        auto m = &RunConfig::model;
        auto p = &RunConfig::plan;
        std::vector<Key> k;
        k.push_back({"variant",
                     [](RunConfig& c, std::string_view v) {
                         try {
                             c.model.variant = model::parse_variant(v);
                         } catch (const Error&) {
                             bad_value("variant", v, "one of V, BC, HTC, ZTT");
                         }
                     },
                     [](const RunConfig& c) { return std::string(model::variant_name(c.model.variant)); }});
        k.push_back(size_key("all_layers", m, &ModelConfig::all_layers));
        k.push_back(size_key("loop_count", m, &ModelConfig::loop_count));
        k.push_back(size_key("d_model", m, &ModelConfig::d_model));
        k.push_back(size_key("n_heads", m, &ModelConfig::n_heads));
        k.push_back(size_key("d_ff", m, &ModelConfig::d_ff));
        k.push_back(size_key("vocab", m, &ModelConfig::vocab));
        k.push_back(size_key("t_max", m, &ModelConfig::t_max));
        k.push_back(bool_key("use_gate", m, &ModelConfig::use_gate));
        k.push_back(bool_key("use_zero_token", m, &ModelConfig::use_zero_token));
        k.push_back(bool_key("early_exit_heads", m, &ModelConfig::early_exit_heads));
        k.push_back(bool_key("tie_embeddings", m, &ModelConfig::tie_embeddings));
        k.push_back(size_key("steps", p, &TrainPlan::steps));
        k.push_back(double_key("lr", p, &TrainPlan::lr));
        k.push_back(double_key("warmup_frac", p, &TrainPlan::warmup_frac));
        k.push_back(double_key("weight_decay", p, &TrainPlan::weight_decay));
        k.push_back(size_key("batch", p, &TrainPlan::batch));
        k.push_back(size_key("grad_accum", p, &TrainPlan::grad_accum));
        k.push_back({"seed",
                     [](RunConfig& c, std::string_view v) { c.plan.seed = parse_size("seed", v); },
                     [](const RunConfig& c) { return std::to_string(c.plan.seed); }});
        k.push_back(size_key("log_interval", p, &TrainPlan::log_interval));
        k.push_back({"exit_threshold",
                     [](RunConfig& c, std::string_view v) {
                         c.exit_threshold = parse_double("exit_threshold", v);
                     },
                     [](const RunConfig& c) { return format_double(c.exit_threshold); }});
        k.push_back({"corpus_path",
                     [](RunConfig& c, std::string_view v) { c.corpus_path = std::string(v); },
                     [](const RunConfig& c) { return c.corpus_path.value_or(""); }});
        return k;
    }();
    return table;
}

}  // namespace

const std::string& RunConfig::corpus() const {
    if (!corpus_path || corpus_path->empty()) {
        throw ConfigError("missing required key 'corpus_path'");
    }
    return *corpus_path;
}

RunConfig parse_run_config(std::string_view text, std::string_view source) {
    RunConfig config;
    std::set<std::string, std::less<>> seen;
    std::size_t line_no = 0;
    while (!text.empty()) {
        const auto nl = text.find('\n');
        std::string_view line = text.substr(0, nl);
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
        ++line_no;
        line = trim(line);
        if (line.empty() || line.front() == '#') {
            continue;
        }
        const std::string where = std::string(source) + ":" + std::to_string(line_no) + ": ";
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) {
            throw ConfigError(where + "expected key=value, got '" + std::string(line) + "'");
        }
        const std::string_view key = trim(line.substr(0, eq));
        const std::string_view value = trim(line.substr(eq + 1));
        const Key* match = nullptr;
        for (const Key& k : keys()) {
            if (k.name == key) {
                match = &k;
            }
        }
        if (match == nullptr) {
            throw ConfigError(where + "unknown key '" + std::string(key) + "'");
        }
        if (!seen.insert(std::string(key)).second) {
            throw ConfigError(where + "key '" + std::string(key) + "' given twice");
        }
        try {
            match->set(config, value);
        } catch (const ConfigError& e) {
            throw ConfigError(where + e.what());
        }
    }
    return config;
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ConfigError("cannot open config file " + path);
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_run_config(buf.str(), path);
}

std::string to_text(const RunConfig& config) {
    std::string out;
    for (const Key& k : keys()) {
        if (k.name == "corpus_path" && !config.corpus_path) {
            continue;
        }
        out += k.name + "=" + k.get(config) + "\n";
    }
    return out;
}

}  // namespace ztt::cli
