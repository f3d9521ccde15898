// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "ztt/errors.hpp"
#include "ztt/numerics/tensor.hpp"

namespace ztt::numerics {

// A trainable array. `grad` accumulates across backward passes until
// zero_grad(), which is what gradient accumulation relies on.
template <Real S>
struct Parameter {
    std::string name;
    Tensor<S> value;
    Tensor<S> grad;

    Parameter() = default;
    Parameter(std::string n, Tensor<S> v)
        : name(std::move(n)), value(std::move(v)), grad(value.shape()) {}

    void zero_grad() { grad = Tensor<S>(value.shape()); }
};

// Handle to a value recorded on a Tape.
class Var {
public:
    Var() = default;
    Var(std::uint64_t tape_id, std::size_t index) : tape_id_(tape_id), index_(index) {}

    std::size_t index() const { return index_; }
    std::uint64_t tape_id() const { return tape_id_; }
    bool valid() const { return tape_id_ != 0; }

private:
    std::uint64_t tape_id_ = 0;
    std::size_t index_ = 0;
};

template <Real S>
class Tape {
public:
    // Receives the gradient of the node's output; adds input contributions via
    // grad_target().
    using BackwardFn = std::function<void(Tape&, const Tensor<S>&)>;

    explicit Tape(bool grad_enabled = true) : id_(next_id()), grad_enabled_(grad_enabled) {}

    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    bool grad_enabled() const { return grad_enabled_; }
    std::size_t size() const { return nodes_.size(); }
    std::uint64_t id() const { return id_; }

    Var constant(Tensor<S> value) {
        Node node;
        node.owned = std::move(value);
        return push(std::move(node));
    }

    // One leaf per parameter; repeated uses share it so contributions sum in
    // its gradient buffer before landing in Parameter::grad.
    Var param(Parameter<S>& p) {
        if (auto it = param_leaves_.find(&p); it != param_leaves_.end()) {
            return Var(id_, it->second);
        }
        Node node;
        node.external = &p.value;
        node.parameter = &p;
        node.needs_grad = grad_enabled_;
        Var v = push(std::move(node));
        param_leaves_.emplace(&p, v.index());
        return v;
    }

    Var record(Tensor<S> value, std::initializer_list<Var> inputs, BackwardFn fn) {
        return record(std::move(value), std::vector<Var>(inputs), std::move(fn));
    }

    Var record(Tensor<S> value, const std::vector<Var>& inputs, BackwardFn fn) {
        Node node;
        node.owned = std::move(value);
        if (grad_enabled_) {
            for (const Var& in : inputs) {
                check(in);
                node.needs_grad = node.needs_grad || nodes_[in.index()].needs_grad;
            }
        }
        if (node.needs_grad) {
            node.backward = std::move(fn);
        }
        return push(std::move(node));
    }

    const Tensor<S>& value(Var v) const {
        check(v);
        const Node& n = nodes_[v.index()];
        return n.external != nullptr ? *n.external : n.owned;
    }

    bool requires_grad(Var v) const {
        check(v);
        return nodes_[v.index()].needs_grad;
    }

    // Gradient buffer for an input, or nullptr when the input needs none.
    Tensor<S>* grad_target(Var v) {
        check(v);
        Node& n = nodes_[v.index()];
        if (!n.needs_grad) {
            return nullptr;
        }
        if (!n.grad) {
            n.grad = Tensor<S>(value(v).shape());
        }
        return &*n.grad;
    }

    // Gradient computed by the last backward(), if any reached this node.
    const Tensor<S>* grad(Var v) const {
        check(v);
        const auto& g = nodes_[v.index()].grad;
        return g ? &*g : nullptr;
    }

    // Reverse sweep from a scalar loss. Nodes are visited in exact reverse
    // order of recording; parameter leaves then add into Parameter::grad.
    void backward(Var loss) {
        if (!loss.valid() || loss.tape_id() != id_ || loss.index() >= nodes_.size()) {
            throw UsageError("backward: loss is not recorded on this tape");
        }
        if (value(loss).size() != 1) {
            throw UsageError("backward: loss must be a scalar, got shape " +
                             shape_string(value(loss).shape()));
        }
        if (!nodes_[loss.index()].needs_grad) {
            return;
        }
        Tensor<S>* seed = grad_target(loss);
        seed->fill(S{1});
        for (std::size_t i = loss.index() + 1; i-- > 0;) {
            Node& n = nodes_[i];
            if (!n.grad) {
                continue;
            }
            if (n.backward) {
                // The closure only touches earlier nodes.
                Tensor<S> g = std::move(*n.grad);
                n.backward(*this, g);
                nodes_[i].grad = std::move(g);
            }
            Node& m = nodes_[i];
            if (m.parameter != nullptr) {
                auto dst = m.parameter->grad.data();
                auto src = m.grad->data();
                if (m.parameter->grad.shape() != m.grad->shape()) {
                    m.parameter->grad = Tensor<S>(m.grad->shape());
                    dst = m.parameter->grad.data();
                }
                for (std::size_t j = 0; j < src.size(); ++j) {
                    dst[j] += src[j];
                }
            }
        }
    }

private:
    struct Node {
        Tensor<S> owned;
        const Tensor<S>* external = nullptr;
        Parameter<S>* parameter = nullptr;
        bool needs_grad = false;
        BackwardFn backward;
        std::optional<Tensor<S>> grad;
    };

    static std::uint64_t next_id() {
        static std::atomic<std::uint64_t> counter{0};
        return ++counter;
    }

    void check(Var v) const {
        if (!v.valid() || v.tape_id() != id_ || v.index() >= nodes_.size()) {
            throw UsageError("variable does not belong to this tape");
        }
    }

    Var push(Node node) {
        nodes_.push_back(std::move(node));
        return Var(id_, nodes_.size() - 1);
    }

    std::uint64_t id_;
    bool grad_enabled_;
    std::vector<Node> nodes_;
    std::unordered_map<const Parameter<S>*, std::size_t> param_leaves_;
};

}  // namespace ztt::numerics
