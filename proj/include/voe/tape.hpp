#pragma once

// Reverse-mode autodiff tape. Ops (voe/ops.hpp) append nodes holding the
// forward value plus a closure that scatters the node's adjoint into its
// inputs. backward() replays the closures in reverse creation order,
// which yields gradients for every parameter leaf recorded on the tape.
//
// One tape per training step, single writer; tapes are never shared
// across threads.

#include <functional>
#include <vector>

#include "voe/common.hpp"
#include "voe/tensor.hpp"

namespace voe::num {

class Tape;

// Lightweight handle to a tape node.
struct Var {
    int id = -1;
    bool valid() const { return id >= 0; }
};

class Tape {
  public:
    struct Node {
        Shape shape;
        std::vector<double> val;
        std::vector<double> grad;  // sized lazily at backward()
        int param = -1;            // parameter slot for leaves, else -1
        // Scatters this node's grad into its inputs' grads. Null for leaves.
        std::function<void(Tape&, const Node&)> back;
    };

    Var leaf(const Tensor& t, int param_id = -1) {
        Node n;
        n.shape = t.shape;
        n.val = t.data;
        n.param = param_id;
        nodes_.push_back(std::move(n));
        return Var{static_cast<int>(nodes_.size()) - 1};
    }

    Var leaf(Tensor&& t, int param_id = -1) {
        Node n;
        n.shape = std::move(t.shape);
        n.val = std::move(t.data);
        n.param = param_id;
        nodes_.push_back(std::move(n));
        return Var{static_cast<int>(nodes_.size()) - 1};
    }

    // Memoised parameter leaf: repeated uses of the same parameter on one
    // tape share a single node (gradients still accumulate per use).
    Var param_leaf(const Tensor& t, int param_id) {
        if (param_id < 0) return leaf(t);
        if (param_cache_.size() <= static_cast<std::size_t>(param_id))
            param_cache_.resize(static_cast<std::size_t>(param_id) + 1, Var{});
        Var& slot = param_cache_[static_cast<std::size_t>(param_id)];
        if (!slot.valid()) slot = leaf(t, param_id);
        return slot;
    }

    // Used by ops: allocate an output node with given shape; the caller
    // fills val and sets back.
    Node& make(const Shape& s) {
        Node n;
        n.shape = s;
        n.val.assign(s.numel(), 0.0);
        nodes_.push_back(std::move(n));
        return nodes_.back();
    }

    int last_id() const { return static_cast<int>(nodes_.size()) - 1; }

    Node& node(Var v) { return nodes_[static_cast<std::size_t>(v.id)]; }
    const Node& node(Var v) const { return nodes_[static_cast<std::size_t>(v.id)]; }
    Node& node(int id) { return nodes_[static_cast<std::size_t>(id)]; }

    const Shape& shape(Var v) const { return node(v).shape; }
    const std::vector<double>& val(Var v) const { return node(v).val; }
    std::vector<double>& grad(Var v) { return node(v).grad; }

    // Reverse sweep from a scalar loss. Grads of all nodes reset first,
    // so parameters not reaching the loss end with zero gradient.
    void backward(Var loss) {
        if (!loss.valid() || node(loss).val.size() != 1)
            throw ContractError("backward: loss must be a scalar tape node");
        for (auto& n : nodes_) n.grad.assign(n.val.size(), 0.0);
        node(loss).grad[0] = 1.0;
        for (int i = loss.id; i >= 0; --i) {
            Node& n = nodes_[static_cast<std::size_t>(i)];
            if (n.back) n.back(*this, n);
        }
    }

    // Adds every parameter leaf's gradient into `sink[param_id]`.
    // Call after backward(). Leaves recorded twice accumulate twice.
    void add_param_grads(std::vector<Tensor>& sink) const {
        for (const auto& n : nodes_) {
            if (n.param < 0 || n.grad.empty()) continue;
            auto& g = sink[static_cast<std::size_t>(n.param)];
            for (std::size_t i = 0; i < n.grad.size(); ++i) g.data[i] += n.grad[i];
        }
    }

    std::size_t size() const { return nodes_.size(); }
    void clear() {
        nodes_.clear();
        param_cache_.clear();
    }

  private:
    std::vector<Node> nodes_;
    std::vector<Var> param_cache_;
};

}  // namespace voe::num
