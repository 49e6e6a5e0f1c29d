#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "cotprompt/tensor.hpp"

namespace cotprompt {

class Graph;

// Handle to a node of a Graph. Only meaningful together with the graph that
// produced it.
struct Var {
    std::size_t id = 0;
};

// Define-by-run tape for reverse-mode differentiation.
//
// Nodes are appended in forward execution order, so the tape is already
// topologically sorted; backward() walks it once in reverse. Leaves bound
// with `leaf()` reference caller-owned tensors (no copy). A leaf whose tensor
// has requires_grad() == false is a constant and never receives a gradient.
class Graph {
public:
    using BackwardFn = std::function<void(Graph&, std::size_t self)>;

    Graph() = default;
    Graph(const Graph&) = delete;
    Graph& operator=(const Graph&) = delete;

    // Binds a caller-owned tensor. It must outlive the graph.
    Var leaf(const Tensor& t);
    // Owning constant (never differentiated).
    Var constant(Tensor t);

    // Records the result of an op. `needs_grad` is derived from the inputs.
    // Throws NonFiniteError naming `op` when the result contains NaN/Inf.
    Var record(std::string op, Tensor value, std::vector<std::size_t> inputs, BackwardFn backward);

    const Tensor& value(Var v) const;
    const Shape& shape(Var v) const { return value(v).shape(); }
    bool needs_grad(Var v) const { return nodes_[v.id].needs_grad; }
    const std::string& op_name(Var v) const { return nodes_[v.id].op; }
    std::size_t size() const noexcept { return nodes_.size(); }

    // Gradient buffer of a node during backward (allocated lazily).
    std::span<double> grad_buffer(std::size_t id);
    std::span<const double> grad(Var v) const;

    // Reverse sweep from a scalar node. `seed` scales the output gradient
    // (used for batch averaging). Throws ContractError for non-scalar loss.
    void backward(Var loss, double seed = 1.0);
    bool backward_done() const noexcept { return backward_done_; }

    // Gradient with respect to a bound leaf (summed over every binding), or
    // empty if the tensor was never bound or did not receive a gradient.
    std::vector<double> leaf_gradient(const Tensor& t) const;

    // Adds each parameter's leaf gradient into its grad buffer. Parameters
    // that are not part of this graph get a zero gradient, so after this
    // call every listed parameter has a populated gradient.
    void accumulate_into(std::span<const NamedParameter> params) const;

private:
    struct Node {
        std::string op;
        Tensor owned;
        const Tensor* ref = nullptr;
        std::vector<std::size_t> inputs;
        BackwardFn backward;
        bool needs_grad = false;
        std::vector<double> grad;
    };

    const Tensor& node_value(const Node& n) const { return n.ref ? *n.ref : n.owned; }

    std::vector<Node> nodes_;
    bool backward_done_ = false;
};

}  // namespace cotprompt
