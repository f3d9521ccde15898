// SPDX-License-Identifier: Apache-2.0
#include "ztt/numerics/ops.hpp"

#include <cmath>
#include <string>

#include "ztt/numerics/kernels.hpp"

namespace ztt::numerics {

namespace {

template <Real S>
void require_same_shape(const Tensor<S>& a, const Tensor<S>& b, const char* op) {
    if (a.shape() != b.shape()) {
        throw DimensionError(std::string(op) + ": shape mismatch " + shape_string(a.shape()) +
                             " vs " + shape_string(b.shape()));
    }
}

template <Real S>
void require_rank2(const Tensor<S>& a, const char* op) {
    if (a.rank() != 2) {
        throw DimensionError(std::string(op) + ": expected rank-2 tensor, got " +
                             shape_string(a.shape()));
    }
}

template <Real S>
void axpy(Tensor<S>& dst, const Tensor<S>& src, S alpha = S{1}) {
    auto d = dst.data();
    auto s = src.data();
    for (std::size_t i = 0; i < d.size(); ++i) {
        d[i] += alpha * s[i];
    }
}

// Column sums of a matrix-shaped gradient into a bias gradient.
template <Real S>
void accumulate_bias(Tensor<S>& dbias, const Tensor<S>& g) {
    const std::size_t n = g.cols();
    auto db = dbias.data();
    for (std::size_t r = 0; r < g.rows(); ++r) {
        auto row = g.row(r);
        for (std::size_t c = 0; c < n; ++c) {
            db[c] += row[c];
        }
    }
}

}  // namespace

template <Real S>
Var matmul(Tape<S>& t, Var a, Var b) {
    const Tensor<S>& av = t.value(a);
    const Tensor<S>& bv = t.value(b);
    Tensor<S> out = kernels::matmul(av, bv);
    const std::size_t m = av.dim(0), k = av.dim(1), n = bv.dim(1);
    return t.record(std::move(out), {a, b}, [a, b, m, k, n](Tape<S>& tp, const Tensor<S>& g) {
        if (Tensor<S>* ga = tp.grad_target(a)) {
            kernels::gemm_nt<S>(g.data(), tp.value(b).data(), ga->data(), m, n, k, true);
        }
        if (Tensor<S>* gb = tp.grad_target(b)) {
            kernels::gemm_tn<S>(tp.value(a).data(), g.data(), gb->data(), m, k, n, true);
        }
    });
}

template <Real S>
Var matmul_nt(Tape<S>& t, Var a, Var b) {
    const Tensor<S>& av = t.value(a);
    const Tensor<S>& bv = t.value(b);
    Tensor<S> out = kernels::matmul_nt(av, bv);
    const std::size_t m = av.dim(0), k = av.dim(1), n = bv.dim(0);
    return t.record(std::move(out), {a, b}, [a, b, m, k, n](Tape<S>& tp, const Tensor<S>& g) {
        // out = a b^T: da = g b, db = g^T a
        if (Tensor<S>* ga = tp.grad_target(a)) {
            kernels::gemm_nn<S>(g.data(), tp.value(b).data(), ga->data(), m, n, k, true);
        }
        if (Tensor<S>* gb = tp.grad_target(b)) {
            kernels::gemm_tn<S>(g.data(), tp.value(a).data(), gb->data(), m, n, k, true);
        }
    });
}

template <Real S>
Var linear(Tape<S>& t, Var x, Var w, Var bias) {
    const Tensor<S>& xv = t.value(x);
    const Tensor<S>& wv = t.value(w);
    Tensor<S> out = kernels::matmul(xv, wv);
    kernels::add_row_bias(out, t.value(bias));
    const std::size_t m = xv.dim(0), k = xv.dim(1), n = wv.dim(1);
    return t.record(std::move(out), {x, w, bias},
                    [x, w, bias, m, k, n](Tape<S>& tp, const Tensor<S>& g) {
                        if (Tensor<S>* gx = tp.grad_target(x)) {
                            kernels::gemm_nt<S>(g.data(), tp.value(w).data(), gx->data(), m, n, k,
                                                true);
                        }
                        if (Tensor<S>* gw = tp.grad_target(w)) {
                            kernels::gemm_tn<S>(tp.value(x).data(), g.data(), gw->data(), m, k, n,
                                                true);
                        }
                        if (Tensor<S>* gb = tp.grad_target(bias)) {
                            accumulate_bias(*gb, g);
                        }
                    });
}

template <Real S>
Var add(Tape<S>& t, Var a, Var b) {
    const Tensor<S>& av = t.value(a);
    const Tensor<S>& bv = t.value(b);
    require_same_shape(av, bv, "add");
    Tensor<S> out = av;
    axpy(out, bv);
    return t.record(std::move(out), {a, b}, [a, b](Tape<S>& tp, const Tensor<S>& g) {
        if (Tensor<S>* ga = tp.grad_target(a)) {
            axpy(*ga, g);
        }
        if (Tensor<S>* gb = tp.grad_target(b)) {
            axpy(*gb, g);
        }
    });
}

template <Real S>
Var add_bias(Tape<S>& t, Var x, Var bias) {
    Tensor<S> out = t.value(x);
    kernels::add_row_bias(out, t.value(bias));
    return t.record(std::move(out), {x, bias}, [x, bias](Tape<S>& tp, const Tensor<S>& g) {
        if (Tensor<S>* gx = tp.grad_target(x)) {
            axpy(*gx, g);
        }
        if (Tensor<S>* gb = tp.grad_target(bias)) {
            accumulate_bias(*gb, g);
        }
    });
}

template <Real S>
Var scale(Tape<S>& t, Var x, S factor) {
    Tensor<S> out = t.value(x);
    for (S& v : out.data()) {
        v *= factor;
    }
    return t.record(std::move(out), {x}, [x, factor](Tape<S>& tp, const Tensor<S>& g) {
        if (Tensor<S>* gx = tp.grad_target(x)) {
            axpy(*gx, g, factor);
        }
    });
}

template <Real S>
Var mul_rows(Tape<S>& t, Var x, Var s) {
    const Tensor<S>& xv = t.value(x);
    const Tensor<S>& sv = t.value(s);
    if (sv.size() != xv.rows()) {
        throw DimensionError("mul_rows: " + std::to_string(sv.size()) + " scales for " +
                             std::to_string(xv.rows()) + " rows");
    }
    Tensor<S> out = xv;
    for (std::size_t r = 0; r < out.rows(); ++r) {
        for (S& v : out.row(r)) {
            v *= sv[r];
        }
    }
    return t.record(std::move(out), {x, s}, [x, s](Tape<S>& tp, const Tensor<S>& g) {
        const Tensor<S>& xv = tp.value(x);
        const Tensor<S>& sv = tp.value(s);
        if (Tensor<S>* gx = tp.grad_target(x)) {
            for (std::size_t r = 0; r < g.rows(); ++r) {
                auto gr = g.row(r);
                auto dst = gx->row(r);
                for (std::size_t c = 0; c < gr.size(); ++c) {
                    dst[c] += gr[c] * sv[r];
                }
            }
        }
        if (Tensor<S>* gs = tp.grad_target(s)) {
            for (std::size_t r = 0; r < g.rows(); ++r) {
                auto gr = g.row(r);
                auto xr = xv.row(r);
                S acc = 0;
                for (std::size_t c = 0; c < gr.size(); ++c) {
                    acc += gr[c] * xr[c];
                }
                (*gs)[r] += acc;
            }
        }
    });
}

template <Real S>
Var layer_norm(Tape<S>& t, Var x, Var gamma, Var beta, S eps) {
    auto res = kernels::layer_norm(t.value(x), t.value(gamma), t.value(beta), eps);
    return t.record(
        std::move(res.y), {x, gamma, beta},
        [x, gamma, beta, mean = std::move(res.mean), rstd = std::move(res.rstd)](
            Tape<S>& tp, const Tensor<S>& g) {
            const Tensor<S>& xv = tp.value(x);
            const Tensor<S>& gv = tp.value(gamma);
            const std::size_t d = xv.cols();
            Tensor<S>* gx = tp.grad_target(x);
            Tensor<S>* gg = tp.grad_target(gamma);
            Tensor<S>* gb = tp.grad_target(beta);
            std::vector<S> xhat(d), dxhat(d);
            for (std::size_t r = 0; r < xv.rows(); ++r) {
                auto xr = xv.row(r);
                auto gr = g.row(r);
                S sum_dxhat = 0;
                S sum_dxhat_xhat = 0;
                for (std::size_t c = 0; c < d; ++c) {
                    xhat[c] = (xr[c] - mean[r]) * rstd[r];
                    dxhat[c] = gr[c] * gv[c];
                    sum_dxhat += dxhat[c];
                    sum_dxhat_xhat += dxhat[c] * xhat[c];
                }
                if (gg != nullptr) {
                    for (std::size_t c = 0; c < d; ++c) {
                        (*gg)[c] += gr[c] * xhat[c];
                    }
                }
                if (gb != nullptr) {
                    for (std::size_t c = 0; c < d; ++c) {
                        (*gb)[c] += gr[c];
                    }
                }
                if (gx != nullptr) {
                    auto dst = gx->row(r);
                    const S inv_d = S{1} / static_cast<S>(d);
                    for (std::size_t c = 0; c < d; ++c) {
                        dst[c] += rstd[r] *
                                  (dxhat[c] - inv_d * sum_dxhat - xhat[c] * inv_d * sum_dxhat_xhat);
                    }
                }
            }
        });
}

template <Real S>
Var gelu(Tape<S>& t, Var x) {
    Tensor<S> out = t.value(x);
    for (S& v : out.data()) {
        v = kernels::gelu(v);
    }
    return t.record(std::move(out), {x}, [x](Tape<S>& tp, const Tensor<S>& g) {
        if (Tensor<S>* gx = tp.grad_target(x)) {
            const Tensor<S>& xv = tp.value(x);
            for (std::size_t i = 0; i < g.size(); ++i) {
                (*gx)[i] += g[i] * kernels::gelu_grad(xv[i]);
            }
        }
    });
}

template <Real S>
Var sigmoid(Tape<S>& t, Var x) {
    Tensor<S> out = t.value(x);
    for (S& v : out.data()) {
        v = kernels::sigmoid(v);
    }
    return t.record(std::move(out), {x}, [x](Tape<S>& tp, const Tensor<S>& g) {
        if (Tensor<S>* gx = tp.grad_target(x)) {
            const Tensor<S>& xv = tp.value(x);
            for (std::size_t i = 0; i < g.size(); ++i) {
                const S s = kernels::sigmoid(xv[i]);
                (*gx)[i] += g[i] * s * (S{1} - s);
            }
        }
    });
}

template <Real S>
Var softmax(Tape<S>& t, Var x, std::size_t axis) {
    Tensor<S> out = kernels::softmax(t.value(x), axis);
    Tensor<S> probs = out;
    const Shape shape = out.shape();
    return t.record(
        std::move(out), {x}, [x, axis, shape, probs = std::move(probs)](Tape<S>& tp,
                                                                        const Tensor<S>& g) {
            Tensor<S>* gx = tp.grad_target(x);
            if (gx == nullptr) {
                return;
            }
            const std::size_t len = shape[axis];
            std::size_t inner = 1;
            for (std::size_t i = axis + 1; i < shape.size(); ++i) {
                inner *= shape[i];
            }
            const std::size_t outer = probs.size() / (len * inner);
            for (std::size_t o = 0; o < outer; ++o) {
                for (std::size_t in = 0; in < inner; ++in) {
                    const std::size_t base = o * len * inner + in;
                    S dot = 0;
                    for (std::size_t j = 0; j < len; ++j) {
                        dot += g[base + j * inner] * probs[base + j * inner];
                    }
                    for (std::size_t j = 0; j < len; ++j) {
                        const std::size_t idx = base + j * inner;
                        (*gx)[idx] += probs[idx] * (g[idx] - dot);
                    }
                }
            }
        });
}

template <Real S>
Var cross_entropy(Tape<S>& t, Var logits, std::span<const TokenId> targets) {
    const Tensor<S>& lv = t.value(logits);
    require_rank2(lv, "cross_entropy");
    const std::size_t rows = lv.dim(0);
    const std::size_t vocab = lv.dim(1);
    if (targets.size() != rows) {
        throw DimensionError("cross_entropy: " + std::to_string(targets.size()) +
                             " targets for " + std::to_string(rows) + " rows");
    }
    if (rows == 0) {
        throw DimensionError("cross_entropy over zero positions");
    }
    std::vector<TokenId> tgt(targets.begin(), targets.end());
    for (TokenId id : tgt) {
        if (id < 0 || static_cast<std::size_t>(id) >= vocab) {
            throw IndexError("cross_entropy: target " + std::to_string(id) +
                             " outside vocabulary of " + std::to_string(vocab));
        }
    }
    Tensor<S> probs(lv.shape());
    S total = 0;
    for (std::size_t r = 0; r < rows; ++r) {
        auto in = lv.row(r);
        auto p = probs.row(r);
        S max = in[0];
        for (S v : in) {
            max = std::max(max, v);
        }
        S z = 0;
        for (std::size_t c = 0; c < vocab; ++c) {
            p[c] = std::exp(in[c] - max);
            z += p[c];
        }
        const S log_z = std::log(z) + max;
        total += log_z - in[static_cast<std::size_t>(tgt[r])];
        for (std::size_t c = 0; c < vocab; ++c) {
            p[c] /= z;
        }
    }
    const S mean = total / static_cast<S>(rows);
    return t.record(Tensor<S>::scalar(mean), {logits},
                    [logits, tgt = std::move(tgt), probs = std::move(probs)](Tape<S>& tp,
                                                                             const Tensor<S>& g) {
                        Tensor<S>* gl = tp.grad_target(logits);
                        if (gl == nullptr) {
                            return;
                        }
                        const S scale = g[0] / static_cast<S>(tgt.size());
                        for (std::size_t r = 0; r < tgt.size(); ++r) {
                            auto p = probs.row(r);
                            auto dst = gl->row(r);
                            for (std::size_t c = 0; c < p.size(); ++c) {
                                dst[c] += scale * p[c];
                            }
                            dst[static_cast<std::size_t>(tgt[r])] -= scale;
                        }
                    });
}

template <Real S>
Var sum(Tape<S>& t, Var x) {
    S total = 0;
    for (S v : t.value(x).data()) {
        total += v;
    }
    return t.record(Tensor<S>::scalar(total), {x}, [x](Tape<S>& tp, const Tensor<S>& g) {
        if (Tensor<S>* gx = tp.grad_target(x)) {
            for (S& v : gx->data()) {
                v += g[0];
            }
        }
    });
}

template <Real S>
Var weighted_sum(Tape<S>& t, std::span<const Var> scalars, std::span<const S> weights) {
    if (scalars.size() != weights.size()) {
        throw DimensionError("weighted_sum: " + std::to_string(scalars.size()) + " terms, " +
                             std::to_string(weights.size()) + " weights");
    }
    S total = 0;
    for (std::size_t i = 0; i < scalars.size(); ++i) {
        total += weights[i] * t.value(scalars[i]).item();
    }
    std::vector<Var> ins(scalars.begin(), scalars.end());
    std::vector<S> w(weights.begin(), weights.end());
    return t.record(Tensor<S>::scalar(total), ins, [ins, w](Tape<S>& tp, const Tensor<S>& g) {
        for (std::size_t i = 0; i < ins.size(); ++i) {
            if (Tensor<S>* gi = tp.grad_target(ins[i])) {
                (*gi)[0] += w[i] * g[0];
            }
        }
    });
}

template <Real S>
Var embedding(Tape<S>& t, Var table, std::span<const TokenId> ids) {
    const Tensor<S>& tv = t.value(table);
    require_rank2(tv, "embedding");
    const std::size_t rows = tv.dim(0);
    const std::size_t d = tv.dim(1);
    std::vector<TokenId> idx(ids.begin(), ids.end());
    Tensor<S> out(Shape{idx.size(), d});
    for (std::size_t i = 0; i < idx.size(); ++i) {
        if (idx[i] < 0 || static_cast<std::size_t>(idx[i]) >= rows) {
            throw IndexError("embedding: id " + std::to_string(idx[i]) + " outside table of " +
                             std::to_string(rows) + " rows");
        }
        auto src = tv.row(static_cast<std::size_t>(idx[i]));
        std::copy(src.begin(), src.end(), out.row(i).begin());
    }
    return t.record(std::move(out), {table},
                    [table, idx = std::move(idx)](Tape<S>& tp, const Tensor<S>& g) {
                        Tensor<S>* gt = tp.grad_target(table);
                        if (gt == nullptr) {
                            return;
                        }
                        for (std::size_t i = 0; i < idx.size(); ++i) {
                            auto src = g.row(i);
                            auto dst = gt->row(static_cast<std::size_t>(idx[i]));
                            for (std::size_t c = 0; c < src.size(); ++c) {
                                dst[c] += src[c];
                            }
                        }
                    });
}

#define ZTT_INSTANTIATE(S)                                                               \
    template Var matmul<S>(Tape<S>&, Var, Var);                                          \
    template Var matmul_nt<S>(Tape<S>&, Var, Var);                                       \
    template Var linear<S>(Tape<S>&, Var, Var, Var);                                     \
    template Var add<S>(Tape<S>&, Var, Var);                                             \
    template Var add_bias<S>(Tape<S>&, Var, Var);                                        \
    template Var scale<S>(Tape<S>&, Var, S);                                             \
    template Var mul_rows<S>(Tape<S>&, Var, Var);                                        \
    template Var layer_norm<S>(Tape<S>&, Var, Var, Var, S);                              \
    template Var gelu<S>(Tape<S>&, Var);                                                 \
    template Var sigmoid<S>(Tape<S>&, Var);                                              \
    template Var softmax<S>(Tape<S>&, Var, std::size_t);                                 \
    template Var cross_entropy<S>(Tape<S>&, Var, std::span<const TokenId>);              \
    template Var sum<S>(Tape<S>&, Var);                                                  \
    template Var weighted_sum<S>(Tape<S>&, std::span<const Var>, std::span<const S>);    \
    template Var embedding<S>(Tape<S>&, Var, std::span<const TokenId>);

ZTT_INSTANTIATE(float)
ZTT_INSTANTIATE(double)

#undef ZTT_INSTANTIATE

}  // namespace ztt::numerics
