// SPDX-License-Identifier: Apache-2.0
#pragma once

// Differentiable primitives recorded on a Tape. Every op validates shapes,
// computes its forward value with the plain kernels, and registers a closure
// that adds input gradients during Tape::backward.

#include <cstdint>
#include <span>
#include <vector>

#include "ztt/numerics/tape.hpp"

namespace ztt::numerics {

using TokenId = std::int32_t;

template <Real S>
Var matmul(Tape<S>& t, Var a, Var b);

// a * b^T, used for the tied output projection.
template <Real S>
Var matmul_nt(Tape<S>& t, Var a, Var b);

// x * w + bias, bias broadcast over rows.
template <Real S>
Var linear(Tape<S>& t, Var x, Var w, Var bias);

template <Real S>
Var add(Tape<S>& t, Var a, Var b);

template <Real S>
Var add_bias(Tape<S>& t, Var x, Var bias);

template <Real S>
Var scale(Tape<S>& t, Var x, S factor);

// Multiplies row r of x by s[r]. s holds one value per row.
template <Real S>
Var mul_rows(Tape<S>& t, Var x, Var s);

template <Real S>
Var layer_norm(Tape<S>& t, Var x, Var gamma, Var beta, S eps);

template <Real S>
Var gelu(Tape<S>& t, Var x);

template <Real S>
Var sigmoid(Tape<S>& t, Var x);

template <Real S>
Var softmax(Tape<S>& t, Var x, std::size_t axis);

// Mean over rows of -log softmax(logits)[target]. Returns a rank-0 tensor.
template <Real S>
Var cross_entropy(Tape<S>& t, Var logits, std::span<const TokenId> targets);

template <Real S>
Var sum(Tape<S>& t, Var x);

// sum_i weights[i] * scalars[i]
template <Real S>
Var weighted_sum(Tape<S>& t, std::span<const Var> scalars, std::span<const S> weights);

// Gathers rows of table[V x d] -> [ids.size() x d].
template <Real S>
Var embedding(Tape<S>& t, Var table, std::span<const TokenId> ids);

}  // namespace ztt::numerics
