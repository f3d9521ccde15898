// SPDX-License-Identifier: Apache-2.0
#include "ztt/model/params.hpp"

#include <cmath>
#include <random>

#include "ztt/errors.hpp"

namespace ztt::model {

using numerics::Shape;

namespace {

std::string layer_prefix(std::size_t l) { return "layers." + std::to_string(l) + "."; }

template <Real S>
Parameter<S> make(std::string name, Shape shape, S fill = S{0}) {
    return Parameter<S>(std::move(name), Tensor<S>(std::move(shape), fill));
}

template <Real S>
void fill_normal(Parameter<S>& p, std::mt19937_64& rng, double std) {
    std::normal_distribution<double> dist(0.0, std);
    for (S& v : p.value.data()) {
        v = static_cast<S>(dist(rng));
    }
}

template <Real S>
LayerParameters<S> make_layer(const ModelConfig& c, std::size_t l) {
    const std::string pre = layer_prefix(l);
    const std::size_t d = c.d_model;
    const std::size_t f = c.d_ff;
    LayerParameters<S> lp;
    lp.ln1_gamma = make<S>(pre + "ln1.gamma", {d}, S{1});
    lp.ln1_beta = make<S>(pre + "ln1.beta", {d});
    lp.wq = make<S>(pre + "attn.wq", {d, d});
    lp.bq = make<S>(pre + "attn.bq", {d});
    lp.wk = make<S>(pre + "attn.wk", {d, d});
    lp.bk = make<S>(pre + "attn.bk", {d});
    lp.wv = make<S>(pre + "attn.wv", {d, d});
    lp.bv = make<S>(pre + "attn.bv", {d});
    lp.wo = make<S>(pre + "attn.wo", {d, d});
    lp.bo = make<S>(pre + "attn.bo", {d});
    lp.ln2_gamma = make<S>(pre + "ln2.gamma", {d}, S{1});
    lp.ln2_beta = make<S>(pre + "ln2.beta", {d});
    lp.w_in = make<S>(pre + "ffn.w_in", {d, f});
    lp.b_in = make<S>(pre + "ffn.b_in", {f});
    lp.w_out = make<S>(pre + "ffn.w_out", {f, d});
    lp.b_out = make<S>(pre + "ffn.b_out", {d});
    if (c.use_gate) {
        lp.gate_w = make<S>(pre + "gate.w", {d, 1});
        lp.gate_b = make<S>(pre + "gate.b", {1});
    }
    return lp;
}

// Builds the arrays with their final shapes; values are filled by the caller.
template <Real S>
ModelParameters<S> make_model(const ModelConfig& c) {
    c.validate();
    ModelParameters<S> m;
    m.token_embedding = make<S>("token_embedding", {c.vocab, c.d_model});
    m.position_embedding = make<S>("position_embedding", {c.t_max, c.d_model});
    m.layers.reserve(c.all_layers);
    for (std::size_t l = 0; l < c.all_layers; ++l) {
        m.layers.push_back(make_layer<S>(c, l));
    }
    m.final_gamma = make<S>("final_norm.gamma", {c.d_model}, S{1});
    m.final_beta = make<S>("final_norm.beta", {c.d_model});
    if (!c.tie_embeddings) {
        m.lm_head = make<S>("lm_head", {c.vocab, c.d_model});
    }
    if (c.use_zero_token) {
        for (std::size_t l : c.cycled_layers()) {
            for (std::size_t n = 0; n < c.loop_count; ++n) {
                m.zero_keys.push_back(make<S>(
                    "zero_key." + std::to_string(l) + "." + std::to_string(n), {c.d_model}));
            }
        }
    }
    return m;
}

}  // namespace

template <Real S>
std::vector<Parameter<S>*> ModelParameters<S>::all() {
    std::vector<Parameter<S>*> out{&token_embedding, &position_embedding};
    for (auto& layer : layers) {
        layer.for_each([&](Parameter<S>& p) { out.push_back(&p); });
    }
    out.push_back(&final_gamma);
    out.push_back(&final_beta);
    if (lm_head) {
        out.push_back(&*lm_head);
    }
    for (auto& k : zero_keys) {
        out.push_back(&k);
    }
    return out;
}

template <Real S>
std::vector<const Parameter<S>*> ModelParameters<S>::all() const {
    auto mut = const_cast<ModelParameters<S>&>(*this).all();
    return {mut.begin(), mut.end()};
}

template <Real S>
void ModelParameters<S>::zero_grad() {
    for (Parameter<S>* p : all()) {
        p->zero_grad();
    }
}

template <Real S>
template <Real T>
ModelParameters<T> ModelParameters<S>::cast() const {
    ModelParameters<T> out;
    auto conv = [](const Parameter<S>& p) { return Parameter<T>(p.name, p.value.template cast<T>()); };
    out.token_embedding = conv(token_embedding);
    out.position_embedding = conv(position_embedding);
    for (const auto& layer : layers) {
        LayerParameters<T> lt;
        std::vector<Parameter<T>*> dst;
        std::vector<const Parameter<S>*> src;
        layer.for_each([&](const Parameter<S>& p) { src.push_back(&p); });
        if (layer.gate_w) {
            lt.gate_w.emplace();
            lt.gate_b.emplace();
        }
        lt.for_each([&](Parameter<T>& p) { dst.push_back(&p); });
        for (std::size_t i = 0; i < src.size(); ++i) {
            *dst[i] = conv(*src[i]);
        }
        out.layers.push_back(std::move(lt));
    }
    out.final_gamma = conv(final_gamma);
    out.final_beta = conv(final_beta);
    if (lm_head) {
        out.lm_head = conv(*lm_head);
    }
    for (const auto& k : zero_keys) {
        out.zero_keys.push_back(conv(k));
    }
    return out;
}

template <Real S>
ModelParameters<S> init_parameters(const ModelConfig& config, std::uint64_t seed) {
    ModelParameters<S> m = make_model<S>(config);
    std::mt19937_64 rng(seed);
    constexpr double kStd = 0.02;
    const double residual_std =
        kStd / std::sqrt(2.0 * static_cast<double>(config.effective_depth()));
    fill_normal(m.token_embedding, rng, kStd);
    fill_normal(m.position_embedding, rng, kStd);
    for (auto& layer : m.layers) {
        fill_normal(layer.wq, rng, kStd);
        fill_normal(layer.wk, rng, kStd);
        fill_normal(layer.wv, rng, kStd);
        fill_normal(layer.wo, rng, residual_std);
        fill_normal(layer.w_in, rng, kStd);
        fill_normal(layer.w_out, rng, residual_std);
    }
    if (m.lm_head) {
        fill_normal(*m.lm_head, rng, kStd);
    }
    for (auto& k : m.zero_keys) {
        fill_normal(k, rng, kStd);
    }
    return m;
}

template <Real S>
void check_shapes(const ModelParameters<S>& params, const ModelConfig& config) {
    ModelParameters<S> expect = make_model<S>(config);
    auto a = expect.all();
    auto b = params.all();
    if (a.size() != b.size()) {
        throw DimensionError("model has " + std::to_string(b.size()) + " arrays, config implies " +
                             std::to_string(a.size()));
    }
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i]->value.shape() != b[i]->value.shape()) {
            throw DimensionError("array " + b[i]->name + " has shape " +
                                 numerics::shape_string(b[i]->value.shape()) + ", expected " +
                                 numerics::shape_string(a[i]->value.shape()));
        }
    }
}

ParamCount param_count(const ModelConfig& c) {
    c.validate();
    const std::size_t d = c.d_model;
    const std::size_t f = c.d_ff;
    ParamCount pc;
    pc.by_group["embeddings"] = c.vocab * d + c.t_max * d;
    const std::size_t attention = 4 * (d * d + d);
    const std::size_t ffn = d * f + f + f * d + d;
    const std::size_t norms = 4 * d;
    pc.by_group["attention"] = c.all_layers * attention;
    pc.by_group["ffn"] = c.all_layers * ffn;
    pc.by_group["norms"] = c.all_layers * norms + 2 * d;
    pc.by_group["gates"] = c.use_gate ? c.all_layers * (d + 1) : 0;
    pc.by_group["lm_head"] = c.tie_embeddings ? 0 : c.vocab * d;
    pc.by_group["zero_token_pool"] = c.use_zero_token ? c.cycled_count() * c.loop_count * d : 0;
    for (const auto& [name, n] : pc.by_group) {
        pc.total += n;
    }
    return pc;
}

template struct ModelParameters<float>;
template struct ModelParameters<double>;
template ModelParameters<double> ModelParameters<float>::cast<double>() const;
template ModelParameters<float> ModelParameters<double>::cast<float>() const;
template ModelParameters<float> init_parameters<float>(const ModelConfig&, std::uint64_t);
template ModelParameters<double> init_parameters<double>(const ModelConfig&, std::uint64_t);
template void check_shapes<float>(const ModelParameters<float>&, const ModelConfig&);
template void check_shapes<double>(const ModelParameters<double>&, const ModelConfig&);

}  // namespace ztt::model
