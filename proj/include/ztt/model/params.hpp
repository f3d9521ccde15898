// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ztt/model/config.hpp"
#include "ztt/numerics/tape.hpp"

namespace ztt::model {

using numerics::Parameter;
using numerics::Real;
using numerics::Tensor;

// Parameters of one distinct layer. Cycled applications of the layer alias
// this record, so they share weights and their gradients sum.
template <Real S>
struct LayerParameters {
    Parameter<S> ln1_gamma, ln1_beta;
    Parameter<S> wq, bq, wk, bk, wv, bv, wo, bo;
    Parameter<S> ln2_gamma, ln2_beta;
    Parameter<S> w_in, b_in, w_out, b_out;
    // d_model -> 1 affine feeding the logistic gate; present iff use_gate.
    std::optional<Parameter<S>> gate_w, gate_b;

    template <typename F>
    void for_each(F&& fn) {
        for (Parameter<S>* p : {&ln1_gamma, &ln1_beta, &wq, &bq, &wk, &bk, &wv, &bv, &wo, &bo,
                                &ln2_gamma, &ln2_beta, &w_in, &b_in, &w_out, &b_out}) {
            fn(*p);
        }
        if (gate_w) {
            fn(*gate_w);
            fn(*gate_b);
        }
    }

    template <typename F>
    void for_each(F&& fn) const {
        const_cast<LayerParameters&>(*this).for_each(
            [&](const Parameter<S>& p) { fn(p); });
    }
};

template <Real S>
struct ModelParameters {
    Parameter<S> token_embedding;     // vocab x d_model
    Parameter<S> position_embedding;  // t_max x d_model
    std::vector<LayerParameters<S>> layers;
    Parameter<S> final_gamma, final_beta;
    std::optional<Parameter<S>> lm_head;  // vocab x d_model, only when untied
    // Zero-token keys, one d_model vector per (cycled layer, cycle); see
    // ModelConfig::zero_key_index. There is no value or query state.
    std::vector<Parameter<S>> zero_keys;

    // Stable order: embeddings, layers, final norm, lm head, zero keys.
    std::vector<Parameter<S>*> all();
    std::vector<const Parameter<S>*> all() const;

    const Parameter<S>& output_matrix() const { return lm_head ? *lm_head : token_embedding; }
    Parameter<S>& output_matrix() { return lm_head ? *lm_head : token_embedding; }

    void zero_grad();

    template <Real T>
    ModelParameters<T> cast() const;
};

// GPT-2 style init: N(0, 0.02) weights and embeddings, residual output
// projections scaled by 1/sqrt(2 * effective depth), zero biases, unit norm
// gains, zero gate weights with zero bias, N(0, 0.02) zero-token keys.
template <Real S>
ModelParameters<S> init_parameters(const ModelConfig& config, std::uint64_t seed);

// Checks every array against the shapes the config implies.
template <Real S>
void check_shapes(const ModelParameters<S>& params, const ModelConfig& config);

struct ParamCount {
    std::size_t total = 0;
    std::map<std::string, std::size_t> by_group;
};

// Closed-form count from the config; cycled layers are counted once.
ParamCount param_count(const ModelConfig& config);

}  // namespace ztt::model
