// SPDX-License-Identifier: Apache-2.0
#include "ztt/numerics/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

namespace ztt::numerics {

std::string shape_string(const Shape& shape) {
    std::string out = "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i != 0) {
            out += "x";
        }
        out += std::to_string(shape[i]);
    }
    return out + "]";
}

namespace kernels {

namespace {

void require_rank2(const Shape& shape, const char* what) {
    if (shape.size() != 2) {
        throw DimensionError(std::string(what) + " expects a rank-2 tensor, got " +
                             shape_string(shape));
    }
}

// out[M x N] += A[M x K] * B[K x N] where A(r, q) = pa[r * rs + q * qs].
// Every output element sums its K products in ascending q, whatever the
// blocking, so results do not depend on how many rows are in the call.
template <Real S>
void gemm_strided(const S* __restrict pa, std::size_t rs, std::size_t qs, const S* __restrict pb,
                  S* __restrict po, std::size_t m, std::size_t k, std::size_t n) {
    constexpr std::size_t R = 4;
    constexpr std::size_t J = 128 / sizeof(S);
    // Rows of A for one block, interleaved so the inner loops read them
    // contiguously.
    std::vector<S> pack(R * k);
    std::size_t i = 0;
    for (; i + R <= m; i += R) {
        for (std::size_t q = 0; q < k; ++q) {
            for (std::size_t r = 0; r < R; ++r) {
                pack[q * R + r] = pa[(i + r) * rs + q * qs];
            }
        }
        const S* __restrict ap = pack.data();
        std::size_t j = 0;
        for (; j + J <= n; j += J) {
            S acc[R][J];
            for (std::size_t r = 0; r < R; ++r) {
                for (std::size_t c = 0; c < J; ++c) {
                    acc[r][c] = po[(i + r) * n + j + c];
                }
            }
            for (std::size_t q = 0; q < k; ++q) {
                const S* __restrict brow = pb + q * n + j;
                for (std::size_t r = 0; r < R; ++r) {
                    const S a = ap[q * R + r];
                    for (std::size_t c = 0; c < J; ++c) {
                        acc[r][c] += a * brow[c];
                    }
                }
            }
            for (std::size_t r = 0; r < R; ++r) {
                for (std::size_t c = 0; c < J; ++c) {
                    po[(i + r) * n + j + c] = acc[r][c];
                }
            }
        }
        for (std::size_t r = 0; r < R && j < n; ++r) {
            S* __restrict orow = po + (i + r) * n;
            for (std::size_t q = 0; q < k; ++q) {
                const S a = ap[q * R + r];
                const S* __restrict brow = pb + q * n;
                for (std::size_t c = j; c < n; ++c) {
                    orow[c] += a * brow[c];
                }
            }
        }
    }
    for (; i < m; ++i) {
        S* __restrict orow = po + i * n;
        for (std::size_t q = 0; q < k; ++q) {
            const S a = pa[i * rs + q * qs];
            const S* __restrict brow = pb + q * n;
            for (std::size_t c = 0; c < n; ++c) {
                orow[c] += a * brow[c];
            }
        }
    }
}

}  // namespace

template <Real S>
void gemm_nn(std::span<const S> a, std::span<const S> b, std::span<S> out, std::size_t m,
             std::size_t k, std::size_t n, bool accumulate) {
    if (!accumulate) {
        std::fill(out.begin(), out.begin() + static_cast<std::ptrdiff_t>(m * n), S{0});
    }
    gemm_strided(a.data(), k, 1, b.data(), out.data(), m, k, n);
}

template <Real S>
void gemm_nt(std::span<const S> a, std::span<const S> b, std::span<S> out, std::size_t m,
             std::size_t k, std::size_t n, bool accumulate) {
    // b is n x k; transpose once so the inner loop stays contiguous.
    std::vector<S> bt(k * n);
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t c = 0; c < k; ++c) {
            bt[c * n + r] = b[r * k + c];
        }
    }
    gemm_nn<S>(a, bt, out, m, k, n, accumulate);
}

template <Real S>
void gemm_tn(std::span<const S> a, std::span<const S> b, std::span<S> out, std::size_t m,
             std::size_t k, std::size_t n, bool accumulate) {
    if (!accumulate) {
        std::fill(out.begin(), out.begin() + static_cast<std::ptrdiff_t>(k * n), S{0});
    }
    // out = a^T b: output row p reads column p of a.
    gemm_strided(a.data(), 1, k, b.data(), out.data(), k, m, n);
}

template <Real S>
Tensor<S> matmul(const Tensor<S>& a, const Tensor<S>& b) {
    require_rank2(a.shape(), "matmul");
    require_rank2(b.shape(), "matmul");
    if (a.dim(1) != b.dim(0)) {
        throw DimensionError("matmul inner extents differ: " + shape_string(a.shape()) + " x " +
                             shape_string(b.shape()));
    }
    Tensor<S> out(Shape{a.dim(0), b.dim(1)});
    gemm_nn<S>(a.data(), b.data(), out.data(), a.dim(0), a.dim(1), b.dim(1), false);
    return out;
}

template <Real S>
Tensor<S> matmul_nt(const Tensor<S>& a, const Tensor<S>& b) {
    require_rank2(a.shape(), "matmul_nt");
    require_rank2(b.shape(), "matmul_nt");
    if (a.dim(1) != b.dim(1)) {
        throw DimensionError("matmul_nt inner extents differ: " + shape_string(a.shape()) +
                             " x " + shape_string(b.shape()) + "^T");
    }
    Tensor<S> out(Shape{a.dim(0), b.dim(0)});
    gemm_nt<S>(a.data(), b.data(), out.data(), a.dim(0), a.dim(1), b.dim(0), false);
    return out;
}

template <Real S>
Tensor<S> transpose(const Tensor<S>& a) {
    require_rank2(a.shape(), "transpose");
    Tensor<S> out(Shape{a.dim(1), a.dim(0)});
    for (std::size_t r = 0; r < a.dim(0); ++r) {
        for (std::size_t c = 0; c < a.dim(1); ++c) {
            out.at(c, r) = a.at(r, c);
        }
    }
    return out;
}

template <Real S>
void softmax_row(std::span<S> row) {
    if (row.empty()) {
        throw DimensionError("softmax over an empty axis");
    }
    S max = -std::numeric_limits<S>::infinity();
    for (S v : row) {
        max = std::max(max, v);
    }
    S total = 0;
    for (S& v : row) {
        v = std::exp(v - max);
        total += v;
    }
    for (S& v : row) {
        v /= total;
    }
}

template <Real S>
Tensor<S> softmax(const Tensor<S>& x, std::size_t axis) {
    if (axis >= x.rank()) {
        throw DimensionError("softmax axis " + std::to_string(axis) + " out of range for " +
                             shape_string(x.shape()));
    }
    const std::size_t len = x.dim(axis);
    if (len == 0) {
        throw DimensionError("softmax over an empty axis");
    }
    std::size_t inner = 1;
    for (std::size_t i = axis + 1; i < x.rank(); ++i) {
        inner *= x.dim(i);
    }
    const std::size_t outer = x.size() / (len * inner);
    Tensor<S> out = x;
    std::vector<S> scratch(len);
    for (std::size_t o = 0; o < outer; ++o) {
        for (std::size_t in = 0; in < inner; ++in) {
            const std::size_t base = o * len * inner + in;
            for (std::size_t j = 0; j < len; ++j) {
                scratch[j] = x[base + j * inner];
            }
            softmax_row<S>(scratch);
            for (std::size_t j = 0; j < len; ++j) {
                out[base + j * inner] = scratch[j];
            }
        }
    }
    return out;
}

template <Real S>
LayerNormResult<S> layer_norm(const Tensor<S>& x, const Tensor<S>& gamma, const Tensor<S>& beta,
                              S eps) {
    const std::size_t d = x.cols();
    if (x.rank() == 0 || d == 0) {
        throw DimensionError("layer_norm needs a non-empty last axis");
    }
    if (gamma.size() != d || beta.size() != d) {
        throw DimensionError("layer_norm affine extent mismatch: row " + std::to_string(d) +
                             ", gamma " + shape_string(gamma.shape()) + ", beta " +
                             shape_string(beta.shape()));
    }
    LayerNormResult<S> res{Tensor<S>(x.shape()), std::vector<S>(x.rows()),
                           std::vector<S>(x.rows())};
    for (std::size_t r = 0; r < x.rows(); ++r) {
        auto in = x.row(r);
        S mean = 0;
        for (S v : in) {
            mean += v;
        }
        mean /= static_cast<S>(d);
        S var = 0;
        for (S v : in) {
            var += (v - mean) * (v - mean);
        }
        var /= static_cast<S>(d);
        const S rstd = S{1} / std::sqrt(var + eps);
        auto out = res.y.row(r);
        for (std::size_t c = 0; c < d; ++c) {
            out[c] = (in[c] - mean) * rstd * gamma[c] + beta[c];
        }
        res.mean[r] = mean;
        res.rstd[r] = rstd;
    }
    return res;
}

template <Real S>
S gelu(S x) {
    constexpr S k = static_cast<S>(0.7978845608028654);  // sqrt(2/pi)
    return S{0.5} * x * (S{1} + std::tanh(k * (x + S{0.044715} * x * x * x)));
}

template <Real S>
S gelu_grad(S x) {
    constexpr S k = static_cast<S>(0.7978845608028654);
    const S inner = k * (x + S{0.044715} * x * x * x);
    const S t = std::tanh(inner);
    const S dinner = k * (S{1} + S{3} * S{0.044715} * x * x);
    return S{0.5} * (S{1} + t) + S{0.5} * x * (S{1} - t * t) * dinner;
}

template <Real S>
S sigmoid(S x) {
    if (x >= 0) {
        return S{1} / (S{1} + std::exp(-x));
    }
    const S e = std::exp(x);
    return e / (S{1} + e);
}

template <Real S>
void add_row_bias(Tensor<S>& x, const Tensor<S>& bias) {
    if (bias.size() != x.cols()) {
        throw DimensionError("bias extent " + shape_string(bias.shape()) + " vs rows of " +
                             shape_string(x.shape()));
    }
    for (std::size_t r = 0; r < x.rows(); ++r) {
        auto row = x.row(r);
        for (std::size_t c = 0; c < row.size(); ++c) {
            row[c] += bias[c];
        }
    }
}

#define ZTT_INSTANTIATE(S)                                                                     \
    template void gemm_nn<S>(std::span<const S>, std::span<const S>, std::span<S>, std::size_t, \
                             std::size_t, std::size_t, bool);                                  \
    template void gemm_nt<S>(std::span<const S>, std::span<const S>, std::span<S>, std::size_t, \
                             std::size_t, std::size_t, bool);                                  \
    template void gemm_tn<S>(std::span<const S>, std::span<const S>, std::span<S>, std::size_t, \
                             std::size_t, std::size_t, bool);                                  \
    template Tensor<S> matmul<S>(const Tensor<S>&, const Tensor<S>&);                          \
    template Tensor<S> matmul_nt<S>(const Tensor<S>&, const Tensor<S>&);                       \
    template Tensor<S> transpose<S>(const Tensor<S>&);                                         \
    template Tensor<S> softmax<S>(const Tensor<S>&, std::size_t);                              \
    template void softmax_row<S>(std::span<S>);                                                \
    template LayerNormResult<S> layer_norm<S>(const Tensor<S>&, const Tensor<S>&,              \
                                              const Tensor<S>&, S);                            \
    template S gelu<S>(S);                                                                     \
    template S gelu_grad<S>(S);                                                                \
    template S sigmoid<S>(S);                                                                  \
    template void add_row_bias<S>(Tensor<S>&, const Tensor<S>&);

ZTT_INSTANTIATE(float)
ZTT_INSTANTIATE(double)

#undef ZTT_INSTANTIATE

}  // namespace kernels
}  // namespace ztt::numerics
