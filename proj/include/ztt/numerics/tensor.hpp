// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <numeric>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

#include "ztt/errors.hpp"

namespace ztt::numerics {

enum class DType : std::uint8_t { f32 = 0, f64 = 1 };

template <typename S>
concept Real = std::is_same_v<S, float> || std::is_same_v<S, double>;

template <Real S>
constexpr DType dtype_of() {
    return std::is_same_v<S, float> ? DType::f32 : DType::f64;
}

using Shape = std::vector<std::size_t>;

inline std::size_t shape_size(const Shape& shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                           [](std::size_t a, std::size_t b) { return a * b; });
}

std::string shape_string(const Shape& shape);

// Dense row-major tensor. Rank-0 tensors hold one scalar.
template <Real S>
class Tensor {
public:
    using value_type = S;

    Tensor() = default;

    explicit Tensor(Shape shape, S fill = S{0})
        : shape_(std::move(shape)), data_(shape_size(shape_), fill) {}

    Tensor(Shape shape, std::vector<S> data) : shape_(std::move(shape)), data_(std::move(data)) {
        if (shape_size(shape_) != data_.size()) {
            throw DimensionError("tensor data length " + std::to_string(data_.size()) +
                                 " does not match shape " + shape_string(shape_));
        }
    }

    static Tensor scalar(S value) { return Tensor(Shape{}, std::vector<S>{value}); }

    static Tensor vector(std::initializer_list<S> values) {
        return Tensor(Shape{values.size()}, std::vector<S>(values));
    }

    static Tensor matrix(std::initializer_list<std::initializer_list<S>> rows) {
        const std::size_t r = rows.size();
        const std::size_t c = r == 0 ? 0 : rows.begin()->size();
        std::vector<S> data;
        data.reserve(r * c);
        for (const auto& row : rows) {
            if (row.size() != c) {
                throw DimensionError("ragged matrix literal");
            }
            data.insert(data.end(), row.begin(), row.end());
        }
        return Tensor(Shape{r, c}, std::move(data));
    }

    const Shape& shape() const { return shape_; }
    std::size_t rank() const { return shape_.size(); }
    std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }
    static constexpr DType dtype() { return dtype_of<S>(); }

    // Leading extents flattened; the last axis is the row.
    std::size_t rows() const { return shape_.empty() ? 1 : size() / shape_.back(); }
    std::size_t cols() const { return shape_.empty() ? 1 : shape_.back(); }

    std::span<S> data() { return data_; }
    std::span<const S> data() const { return data_; }
    std::vector<S>& storage() { return data_; }
    const std::vector<S>& storage() const { return data_; }

    S& operator[](std::size_t i) { return data_[i]; }
    const S& operator[](std::size_t i) const { return data_[i]; }

    S& at(std::size_t r, std::size_t c) { return data_[r * cols() + c]; }
    const S& at(std::size_t r, std::size_t c) const { return data_[r * cols() + c]; }

    std::span<S> row(std::size_t r) { return std::span<S>(data_).subspan(r * cols(), cols()); }
    std::span<const S> row(std::size_t r) const {
        return std::span<const S>(data_).subspan(r * cols(), cols());
    }

    S item() const {
        if (data_.size() != 1) {
            throw DimensionError("item() on tensor of shape " + shape_string(shape_));
        }
        return data_[0];
    }

    Tensor reshaped(Shape shape) const {
        if (shape_size(shape) != size()) {
            throw DimensionError("cannot reshape " + shape_string(shape_) + " to " +
                                 shape_string(shape));
        }
        return Tensor(std::move(shape), data_);
    }

    template <Real T>
    Tensor<T> cast() const {
        std::vector<T> out(data_.begin(), data_.end());
        return Tensor<T>(shape_, std::move(out));
    }

    void fill(S value) { std::fill(data_.begin(), data_.end(), value); }

    bool all_finite() const {
        for (S x : data_) {
            if (!std::isfinite(x)) {
                return false;
            }
        }
        return true;
    }

    friend bool operator==(const Tensor& a, const Tensor& b) {
        return a.shape_ == b.shape_ && a.data_ == b.data_;
    }

private:
    Shape shape_;
    std::vector<S> data_;
};

}  // namespace ztt::numerics
