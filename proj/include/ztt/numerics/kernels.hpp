// SPDX-License-Identifier: Apache-2.0
#pragma once

// Plain (non-differentiable) dense kernels. The autodiff ops and the
// incremental decoder both sit on top of these, so the two paths share
// arithmetic order exactly.

#include <cstddef>
#include <span>

#include "ztt/numerics/tensor.hpp"

namespace ztt::numerics::kernels {

// out[m x n] (+)= a[m x k] * b[k x n]; sums run over k in ascending order.
template <Real S>
void gemm_nn(std::span<const S> a, std::span<const S> b, std::span<S> out, std::size_t m,
             std::size_t k, std::size_t n, bool accumulate);

// out[m x n] (+)= a[m x k] * b[n x k]^T
template <Real S>
void gemm_nt(std::span<const S> a, std::span<const S> b, std::span<S> out, std::size_t m,
             std::size_t k, std::size_t n, bool accumulate);

// out[k x n] (+)= a[m x k]^T * b[m x n]
template <Real S>
void gemm_tn(std::span<const S> a, std::span<const S> b, std::span<S> out, std::size_t m,
             std::size_t k, std::size_t n, bool accumulate);

template <Real S>
Tensor<S> matmul(const Tensor<S>& a, const Tensor<S>& b);

template <Real S>
Tensor<S> matmul_nt(const Tensor<S>& a, const Tensor<S>& b);

template <Real S>
Tensor<S> transpose(const Tensor<S>& a);

// Softmax along `axis` with max subtraction.
template <Real S>
Tensor<S> softmax(const Tensor<S>& x, std::size_t axis);

// In-place softmax of one contiguous row.
template <Real S>
void softmax_row(std::span<S> row);

template <Real S>
struct LayerNormResult {
    Tensor<S> y;
    std::vector<S> mean;
    std::vector<S> rstd;
};

// Normalizes every row (last axis) then applies gamma/beta.
template <Real S>
LayerNormResult<S> layer_norm(const Tensor<S>& x, const Tensor<S>& gamma, const Tensor<S>& beta,
                              S eps);

// GELU, tanh approximation.
template <Real S>
S gelu(S x);

template <Real S>
S gelu_grad(S x);

template <Real S>
S sigmoid(S x);

// out[r, :] += bias for every row.
template <Real S>
void add_row_bias(Tensor<S>& x, const Tensor<S>& bias);

}  // namespace ztt::numerics::kernels
