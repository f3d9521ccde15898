// SPDX-License-Identifier: Apache-2.0
#include "ztt/model/retrofit.hpp"

#include <random>
#include <string>
#include <vector>

#include "ztt/errors.hpp"

namespace ztt::model {

namespace {

// Arrays every layer has (everything but the optional gate), in for_each order.
constexpr std::size_t kCoreArrays = 16;

template <Real S>
std::vector<const Parameter<S>*> arrays(const LayerParameters<S>& layer) {
    std::vector<const Parameter<S>*> out;
    layer.for_each([&](const Parameter<S>& p) { out.push_back(&p); });
    return out;
}

template <Real S>
void copy_layer(const LayerParameters<S>& src, LayerParameters<S>& dst) {
    std::vector<const Parameter<S>*> from;
    src.for_each([&](const Parameter<S>& p) { from.push_back(&p); });
    std::vector<Parameter<S>*> to;
    dst.for_each([&](Parameter<S>& p) { to.push_back(&p); });
    for (std::size_t i = 0; i < kCoreArrays; ++i) {
        to[i]->value = from[i]->value;
    }
}

template <Real S>
void mean_layers(std::span<const LayerParameters<S>> group, LayerParameters<S>& dst) {
    std::vector<Parameter<S>*> to;
    dst.for_each([&](Parameter<S>& p) { to.push_back(&p); });
    for (std::size_t i = 0; i < kCoreArrays; ++i) {
        // Wide accumulator: a mean of identical layers reproduces them exactly.
        const std::size_t n = to[i]->value.size();
        std::vector<long double> acc(n, 0.0L);
        for (const auto& layer : group) {
            const Tensor<S>& v = arrays(layer)[i]->value;
            for (std::size_t j = 0; j < n; ++j) {
                acc[j] += static_cast<long double>(v[j]);
            }
        }
        Tensor<S> mean(to[i]->value.shape());
        for (std::size_t j = 0; j < n; ++j) {
            mean[j] = static_cast<S>(acc[j] / static_cast<long double>(group.size()));
        }
        to[i]->value = std::move(mean);
    }
}

}  // namespace

template <Real S>
ModelParameters<S> init_from_vanilla(const ModelParameters<S>& vanilla,
                                     const ModelConfig& vanilla_config,
                                     const ModelConfig& target_config, std::uint64_t seed) {
    if (vanilla_config.variant != Variant::vanilla) {
        throw ConversionError("retrofit source must be a vanilla (V) model, got " +
                              std::string(variant_name(vanilla_config.variant)));
    }
    if (target_config.variant != Variant::head_tail_cycling &&
        target_config.variant != Variant::zero_token) {
        throw ConversionError("retrofit target must be HTC or ZTT");
    }
    try {
        check_shapes(vanilla, vanilla_config);
        target_config.validate();
    } catch (const Error& e) {
        throw ConversionError(e.what());
    }
    if (vanilla_config.d_model != target_config.d_model ||
        vanilla_config.d_ff != target_config.d_ff ||
        vanilla_config.vocab != target_config.vocab ||
        vanilla_config.t_max != target_config.t_max ||
        vanilla_config.n_heads != target_config.n_heads ||
        vanilla_config.tie_embeddings != target_config.tie_embeddings) {
        throw ConversionError("retrofit: vanilla and target widths, vocabulary, t_max or "
                              "embedding tying differ");
    }
    const std::size_t vanilla_middle = vanilla_config.all_layers >= 2 ? vanilla_config.all_layers - 2 : 0;
    const std::size_t target_middle = target_config.all_layers - 2;
    if (vanilla_middle == 0 || vanilla_middle % target_middle != 0) {
        throw ConversionError("retrofit: " + std::to_string(vanilla_middle) +
                              " vanilla middle layers cannot be grouped into " +
                              std::to_string(target_middle) + " shared layers");
    }
    const std::size_t group = vanilla_middle / target_middle;

    ModelParameters<S> out = init_parameters<S>(target_config, seed);
    out.token_embedding.value = vanilla.token_embedding.value;
    out.position_embedding.value = vanilla.position_embedding.value;
    out.final_gamma.value = vanilla.final_gamma.value;
    out.final_beta.value = vanilla.final_beta.value;
    if (vanilla.lm_head) {
        out.lm_head->value = vanilla.lm_head->value;
    }
    copy_layer(vanilla.layers.front(), out.layers.front());
    copy_layer(vanilla.layers.back(), out.layers.back());
    std::span<const LayerParameters<S>> middle(vanilla.layers.data() + 1, vanilla_middle);
    for (std::size_t m = 0; m < target_middle; ++m) {
        mean_layers(middle.subspan(m * group, group), out.layers[1 + m]);
    }
    for (auto& layer : out.layers) {
        if (layer.gate_w) {
            layer.gate_w->value.fill(S{0});
            layer.gate_b->value.fill(S{2});
        }
    }
    // Zero keys keep the N(0, 0.02) draw from init_parameters.
    return out;
}

template ModelParameters<float> init_from_vanilla<float>(const ModelParameters<float>&,
                                                         const ModelConfig&, const ModelConfig&,
                                                         std::uint64_t);
template ModelParameters<double> init_from_vanilla<double>(const ModelParameters<double>&,
                                                           const ModelConfig&, const ModelConfig&,
                                                           std::uint64_t);

}  // namespace ztt::model
