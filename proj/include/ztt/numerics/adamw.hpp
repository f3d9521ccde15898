// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "ztt/numerics/tape.hpp"

namespace ztt::numerics {

struct AdamWHyper {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.01;
};

// Moments are stored per parameter in the order the parameters were handed to
// the first step().
template <Real S>
struct OptimizerState {
    AdamWHyper hyper;
    std::uint64_t step = 0;
    std::vector<Tensor<S>> first_moment;
    std::vector<Tensor<S>> second_moment;
};

// One decoupled-weight-decay Adam update using each parameter's grad:
//   w <- w - lr*wd*w
//   w <- w - lr * m_hat / (sqrt(v_hat) + eps)
// Uses state.hyper.lr, so schedules set it before calling.
template <Real S>
void adamw_step(OptimizerState<S>& state, std::span<Parameter<S>* const> params);

}  // namespace ztt::numerics
