// SPDX-License-Identifier: Apache-2.0
// Central finite-difference check of the full model loss.
#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "ztt/model/transformer.hpp"
#include "ztt/train/plan.hpp"

namespace ztt_test {

inline std::string param_group(const std::string& name) {
    auto has = [&](const char* s) { return name.find(s) != std::string::npos; };
    if (has("embedding")) {
        return "embeddings";
    }
    if (has("zero_key")) {
        return "zero_token_pool";
    }
    if (has("gate.")) {
        return "gates";
    }
    if (has("attn.")) {
        return "attention";
    }
    if (has("ffn.")) {
        return "ffn";
    }
    if (has("gamma") || has("beta")) {
        return "norms";
    }
    return name;
}

struct GradCheck {
    double worst = 0.0;
    std::string worst_name;
    std::size_t checked = 0;
    std::map<std::string, double> worst_by_group;
    std::map<std::string, std::size_t> count_by_group;
};

// Loss: mean of the per-exit cross-entropies over every exit.
inline double model_loss(ztt::model::ModelParameters<double>& params,
                         const ztt::model::ModelConfig& config, const std::vector<int>& tokens,
                         const std::vector<int>& targets, std::size_t batch, std::size_t seq,
                         bool backward) {
    ztt::numerics::Tape<double> tape(backward);
    auto fr = ztt::model::forward(tape, params, config, tokens, batch, seq, true);
    ztt::train::TrainPlan plan;
    const auto w = ztt::train::resolve_exit_weights(plan, fr.exit_logits.size());
    auto loss = ztt::train::multi_exit_loss<double>(tape, fr.exit_logits, targets, w);
    if (backward) {
        tape.backward(loss);
    }
    return tape.value(loss).item();
}

// Relative error |a - n| / max(|a|, |n|, floor).
inline GradCheck check_gradients(ztt::model::ModelParameters<double>& params,
                                 const ztt::model::ModelConfig& config,
                                 const std::vector<int>& tokens, const std::vector<int>& targets,
                                 std::size_t batch, std::size_t seq, double h = 1e-5,
                                 double floor = 1e-6) {
    params.zero_grad();
    model_loss(params, config, tokens, targets, batch, seq, true);
    GradCheck out;
    for (auto* p : params.all()) {
        const std::string group = param_group(p->name);
        auto& worst_group = out.worst_by_group[group];
        for (std::size_t i = 0; i < p->value.size(); ++i) {
            const double keep = p->value[i];
            p->value[i] = keep + h;
            const double up = model_loss(params, config, tokens, targets, batch, seq, false);
            p->value[i] = keep - h;
            const double down = model_loss(params, config, tokens, targets, batch, seq, false);
            p->value[i] = keep;
            const double numeric = (up - down) / (2.0 * h);
            const double analytic = p->grad[i];
            const double rel = std::abs(analytic - numeric) /
                               std::max({std::abs(analytic), std::abs(numeric), floor});
            worst_group = std::max(worst_group, rel);
            ++out.count_by_group[group];
            ++out.checked;
            if (rel > out.worst) {
                out.worst = rel;
                out.worst_name = p->name + "[" + std::to_string(i) + "]";
            }
        }
    }
    return out;
}

}  // namespace ztt_test
