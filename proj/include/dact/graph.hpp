#pragma once

#include <cstddef>
#include <functional>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "dact/error.hpp"
#include "dact/param_store.hpp"
#include "dact/tensor.hpp"

namespace dact {

using NodeId = std::size_t;
inline constexpr NodeId kNoNode = std::numeric_limits<NodeId>::max();

/// Computation record for reverse-mode differentiation.
///
/// Every primitive application appends one node holding its output value and
/// a closure that pushes the node's gradient into its inputs. Parameter leaves
/// alias the ParamStore entry, so their gradients accumulate straight into the
/// store. Nodes whose inputs do not need gradients (constants, frozen
/// parameters) skip their closure during backward.
template <typename T>
class Graph {
public:
    using BackwardFn = std::function<void(Graph&, NodeId)>;

    explicit Graph(ParamStore<T>* store = nullptr) : store_(store) {}

    ParamStore<T>* store() { return store_; }

    NodeId constant(Tensor<T> value) {
        nodes_.push_back(Node{std::move(value), {}, nullptr, false, {}});
        return nodes_.size() - 1;
    }

    NodeId param(const std::string& name) {
        if (!store_) throw StateError("graph has no parameter store bound");
        auto& entry = store_->get(name);
        nodes_.push_back(Node{{}, {}, &entry, entry.trainable, {}});
        return nodes_.size() - 1;
    }

    /// Appends a primitive application. The node needs a gradient iff any input does.
    NodeId record(Tensor<T> value, std::initializer_list<NodeId> inputs, BackwardFn fn) {
        bool needs = false;
        for (auto in : inputs) {
            if (in != kNoNode && nodes_.at(in).needs_grad) needs = true;
        }
        nodes_.push_back(Node{std::move(value), {}, nullptr, needs, std::move(fn)});
        return nodes_.size() - 1;
    }

    const Tensor<T>& value(NodeId id) const {
        const auto& n = nodes_.at(id);
        return n.param ? n.param->value : n.value;
    }

    /// Gradient buffer of a node; parameter nodes return the store gradient.
    Tensor<T>& grad(NodeId id) {
        auto& n = nodes_.at(id);
        if (n.param) return n.param->grad;
        if (n.grad.size() != n.value.size()) n.grad = Tensor<T>(n.value.shape());
        return n.grad;
    }

    bool needs_grad(NodeId id) const { return id != kNoNode && nodes_.at(id).needs_grad; }

    std::size_t size() const { return nodes_.size(); }

    void clear() { nodes_.clear(); }

    /// Replays the record in reverse from `loss` (a one-element node), seeding
    /// d(loss) = seed. Parameter gradients accumulate; intermediate gradients
    /// are reset first, so replaying twice adds the same contribution twice.
    void backward(NodeId loss, T seed = T{1}) {
        if (nodes_.empty() || loss >= nodes_.size()) {
            throw StateError("backward called without a recorded forward pass");
        }
        if (value(loss).size() != 1) {
            throw DimensionError("backward expects a scalar loss node, got shape " +
                                 shape_string(value(loss).shape()));
        }
        for (auto& n : nodes_) {
            if (!n.param && n.needs_grad) n.grad = Tensor<T>(n.value.shape());
        }
        if (!nodes_[loss].needs_grad) return;
        grad(loss)[0] += seed;
        for (NodeId i = loss + 1; i-- > 0;) {
            auto& n = nodes_[i];
            if (n.backward && n.needs_grad) n.backward(*this, i);
        }
    }

private:
    struct Node {
        Tensor<T> value;
        Tensor<T> grad;
        Param<T>* param;
        bool needs_grad;
        BackwardFn backward;
    };

    ParamStore<T>* store_;
    std::vector<Node> nodes_;
};

}  // namespace dact
