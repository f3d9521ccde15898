// SPDX-License-Identifier: Apache-2.0
#include "ztt/numerics/adamw.hpp"

#include <cmath>
#include <string>

namespace ztt::numerics {

template <Real S>
void adamw_step(OptimizerState<S>& state, std::span<Parameter<S>* const> params) {
    if (state.first_moment.empty() && state.step == 0) {
        for (const Parameter<S>* p : params) {
            state.first_moment.emplace_back(p->value.shape());
            state.second_moment.emplace_back(p->value.shape());
        }
    }
    if (state.first_moment.size() != params.size()) {
        throw DimensionError("adamw_step: optimizer tracks " +
                             std::to_string(state.first_moment.size()) + " parameters, got " +
                             std::to_string(params.size()));
    }
    ++state.step;
    const AdamWHyper& h = state.hyper;
    const double t = static_cast<double>(state.step);
    const double bc1 = 1.0 - std::pow(h.beta1, t);
    const double bc2 = 1.0 - std::pow(h.beta2, t);
    const double decay = 1.0 - h.lr * h.weight_decay;

    for (std::size_t i = 0; i < params.size(); ++i) {
        Parameter<S>& p = *params[i];
        Tensor<S>& m = state.first_moment[i];
        Tensor<S>& v = state.second_moment[i];
        if (m.shape() != p.value.shape() || p.grad.shape() != p.value.shape()) {
            throw DimensionError("adamw_step: shape mismatch for parameter " + p.name);
        }
        auto w = p.value.data();
        auto g = p.grad.data();
        auto md = m.data();
        auto vd = v.data();
        for (std::size_t j = 0; j < w.size(); ++j) {
            const double gj = g[j];
            const double mj = h.beta1 * md[j] + (1.0 - h.beta1) * gj;
            const double vj = h.beta2 * vd[j] + (1.0 - h.beta2) * gj * gj;
            md[j] = static_cast<S>(mj);
            vd[j] = static_cast<S>(vj);
            const double m_hat = mj / bc1;
            const double v_hat = vj / bc2;
            double wj = static_cast<double>(w[j]) * decay;
            wj -= h.lr * m_hat / (std::sqrt(v_hat) + h.eps);
            w[j] = static_cast<S>(wj);
        }
    }
}

template void adamw_step<float>(OptimizerState<float>&, std::span<Parameter<float>* const>);
template void adamw_step<double>(OptimizerState<double>&, std::span<Parameter<double>* const>);

}  // namespace ztt::numerics
