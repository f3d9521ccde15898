// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>

#include "ztt/model/params.hpp"

namespace ztt::model {

// Builds a cycled model (HTC or ZTT) from a trained vanilla one. The first and
// last vanilla layers are copied verbatim. The vanilla middle layers are split
// into target.all_layers - 2 equal contiguous groups and each target middle
// layer is the element-wise mean of its group; with the default three-layer
// target that is one shared layer averaging every vanilla middle layer.
// Embeddings, final norm and LM head are copied. Zero-token keys draw from
// N(0, 0.02) with `seed`; gates start with zero weights and bias +2.
//
// Throws ConversionError when the source is not vanilla, the target is not
// head-tail cycled, or widths/groups do not line up.
template <Real S>
ModelParameters<S> init_from_vanilla(const ModelParameters<S>& vanilla,
                                     const ModelConfig& vanilla_config,
                                     const ModelConfig& target_config, std::uint64_t seed);

}  // namespace ztt::model
