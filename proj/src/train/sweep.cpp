// SPDX-License-Identifier: Apache-2.0
#include "ztt/train/sweep.hpp"

#include <cstdio>
#include <string>

#include "ztt/errors.hpp"
#include "ztt/model/schedule.hpp"
#include "ztt/train/trainer.hpp"

namespace ztt::train {

using model::Variant;

std::vector<Layout> enumerate_layouts(std::size_t budget, std::span<const Variant> variants) {
    if (budget == 0) {
        throw ConfigError("budget must be at least 1");
    }
    std::vector<Layout> out;
    for (Variant v : variants) {
        switch (v) {
            case Variant::vanilla:
                out.push_back({v, budget, 1});
                break;
            case Variant::basic_cycling:
                // L * N == budget
                for (std::size_t L = 1; L <= budget / 2; ++L) {
                    if (budget % L == 0) {
                        out.push_back({v, L, budget / L});
                    }
                }
                break;
            case Variant::head_tail_cycling:
            case Variant::zero_token:
                // 2 + (L - 2) * N == budget
                for (std::size_t L = 3; budget >= 2 && L - 2 <= (budget - 2) / 2; ++L) {
                    if ((budget - 2) % (L - 2) == 0) {
                        out.push_back({v, L, (budget - 2) / (L - 2)});
                    }
                }
                break;
        }
    }
    if (out.empty()) {
        throw ConfigError("no layout of the requested variants has exactly " +
                          std::to_string(budget) + " layer applications");
    }
    return out;
}

model::ModelConfig layout_config(const Layout& layout, const model::ModelConfig& base) {
    model::ModelConfig c = model::config_for(layout.variant, layout.all_layers, layout.loop_count);
    c.d_model = base.d_model;
    c.n_heads = base.n_heads;
    c.d_ff = base.d_ff;
    c.vocab = base.vocab;
    c.t_max = base.t_max;
    c.tie_embeddings = base.tie_embeddings;
    c.ln_eps = base.ln_eps;
    c.validate();
    return c;
}

std::vector<SweepRow> run_sweep(std::span<const Layout> layouts, const SweepSpec& spec,
                                std::span<const TokenId> train_tokens,
                                std::span<const TokenId> valid_tokens,
                                const SweepProgress& progress) {
    std::vector<SweepRow> rows;
    for (const Layout& layout : layouts) {
        const model::ModelConfig config = layout_config(layout, spec.base);
        for (std::uint64_t seed : spec.seeds) {
            TrainPlan plan = spec.plan;
            plan.seed = seed;
            auto state = fresh_state<float>(config, seed);
            const auto log = train(state, plan, config, train_tokens);
            const EvalReport report = evaluate(state.params, config, valid_tokens, spec.eval);
            SweepRow row;
            row.layout = layout;
            row.seed = seed;
            row.effective_depth = model::build_schedule(config).length();
            row.parameters = model::param_count(config).total;
            row.train_loss = log.empty() ? 0.0 : log.back().loss;
            row.valid_loss = report.exits.back().loss;
            row.valid_ppl = report.exits.back().ppl;
            if (progress) {
                progress(row);
            }
            rows.push_back(row);
        }
    }
    return rows;
}

std::vector<SweepRow> budget_sweep(std::size_t budget, std::span<const Variant> variants,
                                   const SweepSpec& spec, std::span<const TokenId> train_tokens,
                                   std::span<const TokenId> valid_tokens,
                                   const SweepProgress& progress) {
    const auto layouts = enumerate_layouts(budget, variants);
    return run_sweep(layouts, spec, train_tokens, valid_tokens, progress);
}

void write_sweep_csv(std::ostream& out, std::span<const SweepRow> rows) {
    out << "variant,all_layers,loop_count,seed,effective_depth,parameters,train_loss,valid_loss,"
           "valid_ppl\n";
    char buf[128];
    for (const SweepRow& r : rows) {
        std::snprintf(buf, sizeof buf, "%.9g,%.9g,%.9g", r.train_loss, r.valid_loss, r.valid_ppl);
        out << model::variant_name(r.layout.variant) << ',' << r.layout.all_layers << ','
            << r.layout.loop_count << ',' << r.seed << ',' << r.effective_depth << ','
            << r.parameters << ',' << buf << '\n';
    }
}

}  // namespace ztt::train
