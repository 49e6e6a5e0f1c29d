#include "cotprompt/layers.hpp"

#include <cmath>

#include "cotprompt/ops.hpp"

namespace cotprompt {

Dense Dense::init(std::size_t in, std::size_t out, Rng& rng) {
    Dense d;
    d.weight = rng.gaussian({out, in}, 1.0 / std::sqrt(static_cast<double>(in)));
    d.bias = Tensor({out});
    d.weight.set_requires_grad(true);
    d.bias.set_requires_grad(true);
    return d;
}

Var Dense::forward(Graph& g, Var x) const { return linear(g, x, g.leaf(weight), g.leaf(bias)); }

void Dense::zero() {
    for (auto& v : weight.data()) v = 0.0;
    for (auto& v : bias.data()) v = 0.0;
}

void Dense::append_parameters(const std::string& prefix, std::vector<NamedParameter>& out) {
    out.push_back({prefix + ".weight", &weight});
    out.push_back({prefix + ".bias", &bias});
}

void Dense::append_parameters(const std::string& prefix, std::vector<ConstNamedParameter>& out) const {
    out.push_back({prefix + ".weight", &weight});
    out.push_back({prefix + ".bias", &bias});
}

}  // namespace cotprompt
