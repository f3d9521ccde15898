// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace ztt::model {

// V: plain stack. BC: whole stack cycled. HTC: middle block cycled, first and
// last layers kept distinct. ZTT: HTC plus zero-token attention and FFN gate.
enum class Variant { vanilla, basic_cycling, head_tail_cycling, zero_token };

std::string_view variant_name(Variant v);
Variant parse_variant(std::string_view name);  // "V", "BC", "HTC", "ZTT"

struct ModelConfig {
    Variant variant = Variant::zero_token;
    std::size_t all_layers = 4;  // distinct layers
    std::size_t loop_count = 3;  // cycles of the cycled block
    std::size_t d_model = 128;
    std::size_t n_heads = 4;
    std::size_t d_ff = 512;
    std::size_t vocab = 259;
    std::size_t t_max = 64;
    bool use_gate = true;
    bool use_zero_token = true;
    bool early_exit_heads = true;
    bool tie_embeddings = true;
    double ln_eps = 1e-5;

    // Throws ConfigError naming the violated constraint.
    void validate() const;

    // 0-based ids of the distinct layers reused every cycle, ascending.
    std::vector<std::size_t> cycled_layers() const;
    std::size_t cycled_count() const;
    bool is_cycled(std::size_t layer) const;
    // Position of a cycled layer inside the cycled block.
    std::size_t cycled_rank(std::size_t layer) const;

    // All Layers - Looped Layers + Looped Layers * Loop Count
    std::size_t effective_depth() const;

    std::size_t head_dim() const { return d_model / n_heads; }
    bool has_zero_token() const { return use_zero_token; }
    // Pool slot of the key used by `layer` at `cycle`.
    std::size_t zero_key_index(std::size_t layer, std::size_t cycle) const;

    bool operator==(const ModelConfig&) const = default;
};

// Defaults for a variant: flags follow the variant (gate and zero token only
// for ZTT), loop count 1 for V.
ModelConfig config_for(Variant v, std::size_t all_layers, std::size_t loop_count);

}  // namespace ztt::model
