// SPDX-License-Identifier: Apache-2.0
#include "ztt/model/layers.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "ztt/numerics/kernels.hpp"

namespace ztt::model {

using numerics::Shape;

namespace {

template <Real S>
S dot(const S* a, const S* b, std::size_t n) {
    S acc = 0;
    for (std::size_t i = 0; i < n; ++i) {
        acc += a[i] * b[i];
    }
    return acc;
}

}  // namespace

template <Real S>
Var zero_token_attention(Tape<S>& tape, Var q, Var k, Var v, std::optional<Var> zero_key,
                         AttentionShape shape, Tensor<S>* weights) {
    const Tensor<S>& qv = tape.value(q);
    const Tensor<S>& kv = tape.value(k);
    const Tensor<S>& vv = tape.value(v);
    const std::size_t rows = shape.batch * shape.seq;
    if (qv.rank() != 2 || qv.shape() != kv.shape() || qv.shape() != vv.shape() ||
        qv.dim(0) != rows) {
        throw DimensionError("zero_token_attention: q/k/v must all be [" + std::to_string(rows) +
                             " x d], got " + numerics::shape_string(qv.shape()) + ", " +
                             numerics::shape_string(kv.shape()) + ", " +
                             numerics::shape_string(vv.shape()));
    }
    const std::size_t d = qv.dim(1);
    if (shape.heads == 0 || d % shape.heads != 0) {
        throw DimensionError("zero_token_attention: width " + std::to_string(d) +
                             " not divisible by " + std::to_string(shape.heads) + " heads");
    }
    const bool has_zero = zero_key.has_value();
    if (has_zero && tape.value(*zero_key).size() != d) {
        throw DimensionError("zero_token_attention: zero key has " +
                             std::to_string(tape.value(*zero_key).size()) + " entries, expected " +
                             std::to_string(d));
    }
    const std::size_t B = shape.batch, T = shape.seq, H = shape.heads;
    const std::size_t dh = d / H;
    const S scale = S{1} / std::sqrt(static_cast<S>(dh));
    const S* zk = has_zero ? tape.value(*zero_key).data().data() : nullptr;

    // probs[b, h, t, 0..T]: slot 0 then key positions.
    Tensor<S> probs(Shape{B, H, T, T + 1});
    Tensor<S> out(Shape{rows, d});
    std::vector<S> logits(T + 1);
    for (std::size_t b = 0; b < B; ++b) {
        for (std::size_t h = 0; h < H; ++h) {
            const std::size_t col = h * dh;
            for (std::size_t t = 0; t < T; ++t) {
                const S* qt = &qv.at(b * T + t, col);
                const std::size_t first = has_zero ? 0 : 1;
                if (has_zero) {
                    logits[0] = dot(qt, zk + col, dh) * scale;
                }
                for (std::size_t j = 0; j <= t; ++j) {
                    logits[1 + j] = dot(qt, &kv.at(b * T + j, col), dh) * scale;
                }
                std::span<S> visible(logits.data() + first, t + 2 - first);
                numerics::kernels::softmax_row<S>(visible);
                S* prow = &probs[((b * H + h) * T + t) * (T + 1)];
                for (std::size_t j = first; j <= t + 1; ++j) {
                    prow[j] = logits[j];
                }
                S* orow = &out.at(b * T + t, col);
                for (std::size_t j = 0; j <= t; ++j) {
                    const S p = prow[1 + j];
                    const S* vj = &vv.at(b * T + j, col);
                    for (std::size_t c = 0; c < dh; ++c) {
                        orow[c] += p * vj[c];
                    }
                }
            }
        }
    }
    if (weights != nullptr) {
        *weights = probs;
    }

    std::vector<Var> inputs{q, k, v};
    if (has_zero) {
        inputs.push_back(*zero_key);
    }
    return tape.record(
        std::move(out), inputs,
        [q, k, v, zero_key, B, T, H, dh, scale, probs = std::move(probs)](Tape<S>& tp,
                                                                          const Tensor<S>& g) {
            const Tensor<S>& qv = tp.value(q);
            const Tensor<S>& kv = tp.value(k);
            const Tensor<S>& vv = tp.value(v);
            const S* zk = zero_key ? tp.value(*zero_key).data().data() : nullptr;
            Tensor<S>* gq = tp.grad_target(q);
            Tensor<S>* gk = tp.grad_target(k);
            Tensor<S>* gv = tp.grad_target(v);
            Tensor<S>* gz = zero_key ? tp.grad_target(*zero_key) : nullptr;
            std::vector<S> dlogit(T + 1);
            for (std::size_t b = 0; b < B; ++b) {
                for (std::size_t h = 0; h < H; ++h) {
                    const std::size_t col = h * dh;
                    for (std::size_t t = 0; t < T; ++t) {
                        const S* prow = &probs[((b * H + h) * T + t) * (T + 1)];
                        const S* gt = &g.at(b * T + t, col);
                        // d(prob_j) = g_t . v_j; the zero slot's value is 0.
                        S weighted = 0;
                        dlogit[0] = 0;
                        for (std::size_t j = 0; j <= t; ++j) {
                            const S dp = dot(gt, &vv.at(b * T + j, col), dh);
                            dlogit[1 + j] = dp;
                            weighted += prow[1 + j] * dp;
                        }
                        dlogit[0] = zk != nullptr ? prow[0] * (S{0} - weighted) : S{0};
                        for (std::size_t j = 0; j <= t; ++j) {
                            dlogit[1 + j] = prow[1 + j] * (dlogit[1 + j] - weighted);
                        }
                        if (gv != nullptr) {
                            for (std::size_t j = 0; j <= t; ++j) {
                                S* dst = &gv->at(b * T + j, col);
                                const S p = prow[1 + j];
                                for (std::size_t c = 0; c < dh; ++c) {
                                    dst[c] += p * gt[c];
                                }
                            }
                        }
                        const S* qt = &qv.at(b * T + t, col);
                        if (gq != nullptr) {
                            S* dst = &gq->at(b * T + t, col);
                            for (std::size_t j = 0; j <= t; ++j) {
                                const S a = dlogit[1 + j] * scale;
                                const S* kj = &kv.at(b * T + j, col);
                                for (std::size_t c = 0; c < dh; ++c) {
                                    dst[c] += a * kj[c];
                                }
                            }
                            if (zk != nullptr) {
                                const S a = dlogit[0] * scale;
                                for (std::size_t c = 0; c < dh; ++c) {
                                    dst[c] += a * zk[col + c];
                                }
                            }
                        }
                        if (gk != nullptr) {
                            for (std::size_t j = 0; j <= t; ++j) {
                                const S a = dlogit[1 + j] * scale;
                                S* dst = &gk->at(b * T + j, col);
                                for (std::size_t c = 0; c < dh; ++c) {
                                    dst[c] += a * qt[c];
                                }
                            }
                        }
                        if (gz != nullptr) {
                            const S a = dlogit[0] * scale;
                            S* dst = gz->data().data() + col;
                            for (std::size_t c = 0; c < dh; ++c) {
                                dst[c] += a * qt[c];
                            }
                        }
                    }
                }
            }
        });
}

template <Real S>
AttentionResult<S> attention_with_zero_token(Tape<S>& tape, Var h_in, LayerParameters<S>& layer,
                                             std::optional<Var> zero_key, AttentionShape shape,
                                             S ln_eps) {
    using namespace numerics;
    Var x = layer_norm(tape, h_in, tape.param(layer.ln1_gamma), tape.param(layer.ln1_beta), ln_eps);
    Var q = linear(tape, x, tape.param(layer.wq), tape.param(layer.bq));
    Var k = linear(tape, x, tape.param(layer.wk), tape.param(layer.bk));
    Var v = linear(tape, x, tape.param(layer.wv), tape.param(layer.bv));
    AttentionResult<S> res;
    Var ctx = zero_token_attention(tape, q, k, v, zero_key, shape, &res.weights);
    Var proj = linear(tape, ctx, tape.param(layer.wo), tape.param(layer.bo));
    res.output = add(tape, h_in, proj);

    const std::size_t B = shape.batch, T = shape.seq, H = shape.heads;
    res.zero_attn_per_query.assign(B * T, 0.0);
    for (std::size_t b = 0; b < B; ++b) {
        for (std::size_t t = 0; t < T; ++t) {
            double acc = 0.0;
            for (std::size_t h = 0; h < H; ++h) {
                acc += static_cast<double>(res.weights[((b * H + h) * T + t) * (T + 1)]);
            }
            res.zero_attn_per_query[b * T + t] = acc / static_cast<double>(H);
        }
    }
    return res;
}

template <Real S>
FfnResult<S> gated_ffn(Tape<S>& tape, Var h_a, LayerParameters<S>& layer, S ln_eps) {
    using namespace numerics;
    Var y = layer_norm(tape, h_a, tape.param(layer.ln2_gamma), tape.param(layer.ln2_beta), ln_eps);
    Var hidden = gelu(tape, linear(tape, y, tape.param(layer.w_in), tape.param(layer.b_in)));
    Var f = linear(tape, hidden, tape.param(layer.w_out), tape.param(layer.b_out));
    FfnResult<S> res;
    if (layer.gate_w) {
        Var gate =
            sigmoid(tape, linear(tape, y, tape.param(*layer.gate_w), tape.param(*layer.gate_b)));
        const Tensor<S>& gv = tape.value(gate);
        res.gate_per_token.assign(gv.data().begin(), gv.data().end());
        f = mul_rows(tape, f, gate);
    }
    res.output = add(tape, h_a, f);
    return res;
}

#define ZTT_INSTANTIATE(S)                                                                    \
    template Var zero_token_attention<S>(Tape<S>&, Var, Var, Var, std::optional<Var>,         \
                                         AttentionShape, Tensor<S>*);                         \
    template AttentionResult<S> attention_with_zero_token<S>(                                 \
        Tape<S>&, Var, LayerParameters<S>&, std::optional<Var>, AttentionShape, S);           \
    template FfnResult<S> gated_ffn<S>(Tape<S>&, Var, LayerParameters<S>&, S);

ZTT_INSTANTIATE(float)
ZTT_INSTANTIATE(double)

#undef ZTT_INSTANTIATE

}  // namespace ztt::model
