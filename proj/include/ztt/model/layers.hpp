// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "ztt/model/params.hpp"
#include "ztt/numerics/ops.hpp"

namespace ztt::model {

using numerics::Tape;
using numerics::Var;

struct AttentionShape {
    std::size_t batch = 1;
    std::size_t seq = 1;
    std::size_t heads = 1;
};

// Causal multi-head attention with an optional zero slot. Rows of q, k, v are
// (batch, position) pairs; columns are split into heads. With a zero key, each
// head prepends slot 0 whose key is the head's slice of `zero_key` (scaled like
// any key) and whose value is identically zero. Slot 0 is visible to every
// query. Returns the concatenated head outputs, [batch*seq x d].
//
// `weights`, when given, receives the attention probabilities laid out as
// [batch, heads, seq, seq + 1]: column 0 is the zero slot (0 when absent),
// column 1 + j is key position j (0 for masked positions).
template <Real S>
Var zero_token_attention(Tape<S>& tape, Var q, Var k, Var v, std::optional<Var> zero_key,
                         AttentionShape shape, Tensor<S>* weights = nullptr);

template <Real S>
struct AttentionResult {
    Var output;                              // H_in + W_o * attention(...) + b_o
    Tensor<S> weights;                       // [batch, heads, seq, seq + 1]
    std::vector<double> zero_attn_per_query; // batch*seq, mean over heads of slot-0 weight
};

// Pre-norm attention sublayer with residual: H_in + MultiHead(LN(H_in)).
template <Real S>
AttentionResult<S> attention_with_zero_token(Tape<S>& tape, Var h_in, LayerParameters<S>& layer,
                                             std::optional<Var> zero_key, AttentionShape shape,
                                             S ln_eps);

template <Real S>
struct FfnResult {
    Var output;                         // H_A + FFN(LN(H_A)) * gate
    std::vector<double> gate_per_token; // empty when the layer is ungated
};

// gate = logistic(LN(H_A) w_g + b_g), one scalar per row; gate = 1 without
// gate parameters.
template <Real S>
FfnResult<S> gated_ffn(Tape<S>& tape, Var h_a, LayerParameters<S>& layer, S ln_eps);

}  // namespace ztt::model
