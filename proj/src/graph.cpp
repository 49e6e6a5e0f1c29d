#include "cotprompt/graph.hpp"

#include "cotprompt/errors.hpp"

namespace cotprompt {

Var Graph::leaf(const Tensor& t) {
    Node n;
    n.op = t.requires_grad() ? "parameter" : "constant";
    n.ref = &t;
    n.needs_grad = t.requires_grad();
    nodes_.push_back(std::move(n));
    return Var{nodes_.size() - 1};
}

Var Graph::constant(Tensor t) {
    Node n;
    n.op = "constant";
    n.owned = std::move(t);
    nodes_.push_back(std::move(n));
    return Var{nodes_.size() - 1};
}

Var Graph::record(std::string op, Tensor value, std::vector<std::size_t> inputs, BackwardFn backward) {
    if (!value.all_finite()) throw NonFiniteError("op '" + op + "' produced a non-finite value");
    Node n;
    n.op = std::move(op);
    n.owned = std::move(value);
    for (auto i : inputs) n.needs_grad = n.needs_grad || nodes_[i].needs_grad;
    n.inputs = std::move(inputs);
    if (n.needs_grad) n.backward = std::move(backward);
    nodes_.push_back(std::move(n));
    return Var{nodes_.size() - 1};
}

const Tensor& Graph::value(Var v) const {
    if (v.id >= nodes_.size()) throw IndexError("graph node " + std::to_string(v.id) + " does not exist");
    return node_value(nodes_[v.id]);
}

std::span<double> Graph::grad_buffer(std::size_t id) {
    Node& n = nodes_[id];
    if (n.grad.empty()) n.grad.assign(node_value(n).size(), 0.0);
    return n.grad;
}

std::span<const double> Graph::grad(Var v) const { return nodes_.at(v.id).grad; }

void Graph::backward(Var loss, double seed) {
    if (loss.id >= nodes_.size()) throw ContractError("backward on a node that is not in the graph");
    if (value(loss).size() != 1)
        throw ContractError("backward requires a scalar loss, got shape " + shape_string(value(loss).shape()));
    for (auto& n : nodes_) n.grad.clear();
    grad_buffer(loss.id)[0] = seed;
    for (std::size_t i = loss.id + 1; i-- > 0;) {
        Node& n = nodes_[i];
        if (!n.needs_grad || n.grad.empty() || !n.backward) continue;
        n.backward(*this, i);
    }
    backward_done_ = true;
}

std::vector<double> Graph::leaf_gradient(const Tensor& t) const {
    std::vector<double> out;
    if (!t.requires_grad()) return out;
    for (const auto& n : nodes_) {
        if (n.ref != &t || n.grad.empty()) continue;
        if (out.empty()) out.assign(n.grad.size(), 0.0);
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += n.grad[i];
    }
    return out;
}

void Graph::accumulate_into(std::span<const NamedParameter> params) const {
    if (!backward_done_) throw ContractError("accumulate_into called before backward");
    for (const auto& p : params) {
        Tensor& t = *p.tensor;
        if (!t.requires_grad()) continue;
        if (!t.has_grad()) t.zero_grad();
        for (const auto& n : nodes_) {
            if (n.ref == &t && !n.grad.empty()) t.accumulate_grad(n.grad);
        }
    }
}

}  // namespace cotprompt
