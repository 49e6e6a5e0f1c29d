#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "cotprompt/layers.hpp"

namespace cotprompt {

// dense(d -> d/16) -> relu -> dense(d/16 -> d_e). Produces the visual bias
// added to one step's context tokens.
struct MetaNet {
    Dense hidden;
    Dense output;

    static MetaNet init(std::size_t joint_dim, std::size_t token_dim, Rng& rng);
    Var forward(Graph& g, Var v) const;
};

// One Meta-Net per chain step. Chained: bias_j = net_j(v) + bias_{j-1} with
// bias_{-1} = 0. Unchained: bias_j = net_j(v).
class MetaNetChain {
public:
    static MetaNetChain init(std::size_t chain_length, std::size_t joint_dim, std::size_t token_dim, bool chained,
                             std::uint64_t seed);

    std::size_t size() const noexcept { return nets_.size(); }
    bool chained() const noexcept { return chained_; }
    const MetaNet& net(std::size_t step) const { return nets_.at(step); }
    MetaNet& net(std::size_t step) { return nets_.at(step); }

    std::vector<Var> biases(Graph& g, Var v) const;
    void zero_output_layers();

    std::vector<NamedParameter> parameters();
    std::vector<ConstNamedParameter> parameters() const;

private:
    std::vector<MetaNet> nets_;
    bool chained_ = true;
};

}  // namespace cotprompt
