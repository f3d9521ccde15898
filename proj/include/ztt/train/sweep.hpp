// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <ostream>
#include <span>
#include <vector>

#include "ztt/model/config.hpp"
#include "ztt/train/evaluate.hpp"
#include "ztt/train/plan.hpp"

namespace ztt::train {

struct Layout {
    model::Variant variant = model::Variant::vanilla;
    std::size_t all_layers = 0;
    std::size_t loop_count = 1;

    bool operator==(const Layout&) const = default;
};

// Every (L, N) whose schedule length equals `budget`, per variant, in variant
// order then ascending L. Cycled variants use N >= 2 (N = 1 is the vanilla
// stack). Throws ConfigError when nothing fits.
std::vector<Layout> enumerate_layouts(std::size_t budget, std::span<const model::Variant> variants);

// Architecture for a layout: widths and embedding tying from `base`, the
// variant's own feature flags.
model::ModelConfig layout_config(const Layout& layout, const model::ModelConfig& base);

struct SweepSpec {
    model::ModelConfig base;
    TrainPlan plan;
    std::vector<std::uint64_t> seeds{1};
    EvalOptions eval;
};

struct SweepRow {
    Layout layout;
    std::uint64_t seed = 0;
    std::size_t effective_depth = 0;
    std::size_t parameters = 0;
    double train_loss = 0.0;  // last step
    double valid_loss = 0.0;  // final exit
    double valid_ppl = 0.0;
};

using SweepProgress = std::function<void(const SweepRow&)>;

// Trains every layout under every seed with the same plan and evaluates the
// final exit on `valid`.
std::vector<SweepRow> run_sweep(std::span<const Layout> layouts, const SweepSpec& spec,
                                std::span<const TokenId> train_tokens,
                                std::span<const TokenId> valid_tokens,
                                const SweepProgress& progress = {});

std::vector<SweepRow> budget_sweep(std::size_t budget, std::span<const model::Variant> variants,
                                   const SweepSpec& spec, std::span<const TokenId> train_tokens,
                                   std::span<const TokenId> valid_tokens,
                                   const SweepProgress& progress = {});

void write_sweep_csv(std::ostream& out, std::span<const SweepRow> rows);

}  // namespace ztt::train
