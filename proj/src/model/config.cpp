// SPDX-License-Identifier: Apache-2.0
#include "ztt/model/config.hpp"

#include <algorithm>

#include "ztt/errors.hpp"

namespace ztt::model {

std::string_view variant_name(Variant v) {
    switch (v) {
        case Variant::vanilla:
            return "V";
        case Variant::basic_cycling:
            return "BC";
        case Variant::head_tail_cycling:
            return "HTC";
        case Variant::zero_token:
            return "ZTT";
    }
    return "?";
}

Variant parse_variant(std::string_view name) {
    if (name == "V") {
        return Variant::vanilla;
    }
    if (name == "BC") {
        return Variant::basic_cycling;
    }
    if (name == "HTC") {
        return Variant::head_tail_cycling;
    }
    if (name == "ZTT") {
        return Variant::zero_token;
    }
    throw ConfigError("unknown variant '" + std::string(name) + "' (expected V, BC, HTC or ZTT)");
}

void ModelConfig::validate() const {
    auto fail = [](const std::string& msg) { throw ConfigError(msg); };
    if (all_layers == 0) {
        fail("all_layers must be at least 1");
    }
    if (loop_count == 0) {
        fail("loop_count must be at least 1");
    }
    if (d_model == 0 || n_heads == 0 || d_ff == 0 || vocab == 0 || t_max == 0) {
        fail("d_model, n_heads, d_ff, vocab and t_max must be positive");
    }
    if (d_model % n_heads != 0) {
        fail("d_model " + std::to_string(d_model) + " is not divisible by n_heads " +
             std::to_string(n_heads));
    }
    if (!(ln_eps > 0.0)) {
        fail("layer-norm eps must be positive");
    }
    switch (variant) {
        case Variant::vanilla:
            if (loop_count != 1) {
                fail("variant V has no cycled layers, so loop_count must be 1");
            }
            break;
        case Variant::basic_cycling:
            break;
        case Variant::head_tail_cycling:
        case Variant::zero_token:
            if (all_layers < 3) {
                fail("head-tail cycling needs all_layers >= 3 (head, cycled block, tail)");
            }
            break;
    }
    if (use_zero_token && variant != Variant::zero_token) {
        fail("use_zero_token requires variant ZTT");
    }
}

std::vector<std::size_t> ModelConfig::cycled_layers() const {
    std::vector<std::size_t> out;
    switch (variant) {
        case Variant::vanilla:
            break;
        case Variant::basic_cycling:
            for (std::size_t l = 0; l < all_layers; ++l) {
                out.push_back(l);
            }
            break;
        case Variant::head_tail_cycling:
        case Variant::zero_token:
            for (std::size_t l = 1; l + 1 < all_layers; ++l) {
                out.push_back(l);
            }
            break;
    }
    return out;
}

std::size_t ModelConfig::cycled_count() const {
    switch (variant) {
        case Variant::vanilla:
            return 0;
        case Variant::basic_cycling:
            return all_layers;
        case Variant::head_tail_cycling:
        case Variant::zero_token:
            return all_layers >= 2 ? all_layers - 2 : 0;
    }
    return 0;
}

bool ModelConfig::is_cycled(std::size_t layer) const {
    switch (variant) {
        case Variant::vanilla:
            return false;
        case Variant::basic_cycling:
            return layer < all_layers;
        case Variant::head_tail_cycling:
        case Variant::zero_token:
            return layer >= 1 && layer + 1 < all_layers;
    }
    return false;
}

std::size_t ModelConfig::cycled_rank(std::size_t layer) const {
    if (!is_cycled(layer)) {
        throw UsageError("layer " + std::to_string(layer) + " is not cycled");
    }
    return variant == Variant::basic_cycling ? layer : layer - 1;
}

std::size_t ModelConfig::effective_depth() const {
    const std::size_t looped = cycled_count();
    return all_layers - looped + looped * loop_count;
}

std::size_t ModelConfig::zero_key_index(std::size_t layer, std::size_t cycle) const {
    return cycled_rank(layer) * loop_count + cycle;
}

ModelConfig config_for(Variant v, std::size_t all_layers, std::size_t loop_count) {
    ModelConfig c;
    c.variant = v;
    c.all_layers = all_layers;
    c.loop_count = v == Variant::vanilla ? 1 : loop_count;
    c.use_gate = v == Variant::zero_token;
    c.use_zero_token = v == Variant::zero_token;
    c.early_exit_heads = v != Variant::vanilla;
    return c;
}

}  // namespace ztt::model
