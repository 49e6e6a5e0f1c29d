#include "cotprompt/meta_net.hpp"

#include <string>

#include "cotprompt/errors.hpp"
#include "cotprompt/ops.hpp"

namespace cotprompt {

MetaNet MetaNet::init(std::size_t joint_dim, std::size_t token_dim, Rng& rng) {
    if (joint_dim % 16 != 0 || joint_dim < 16)
        throw ConfigError("Meta-Net input width " + std::to_string(joint_dim) + " must be a positive multiple of 16");
    MetaNet net;
    net.hidden = Dense::init(joint_dim, joint_dim / 16, rng);
    net.output = Dense::init(joint_dim / 16, token_dim, rng);
    return net;
}

Var MetaNet::forward(Graph& g, Var v) const {
    if (g.value(v).rank() != 1 || g.value(v).size() != hidden.in_features())
        throw DimensionError("Meta-Net input " + shape_string(g.shape(v)) + " does not match width " +
                             std::to_string(hidden.in_features()));
    return output.forward(g, activation(g, hidden.forward(g, v), Activation::relu));
}

MetaNetChain MetaNetChain::init(std::size_t chain_length, std::size_t joint_dim, std::size_t token_dim,
                                bool chained, std::uint64_t seed) {
    if (chain_length < 1) throw ConfigError("Meta-Net chain needs at least one net");
    MetaNetChain chain;
    chain.chained_ = chained;
    for (std::size_t j = 0; j < chain_length; ++j) {
        Rng rng(derive_seed(seed, "meta_net", j));
        chain.nets_.push_back(MetaNet::init(joint_dim, token_dim, rng));
    }
    return chain;
}

std::vector<Var> MetaNetChain::biases(Graph& g, Var v) const {
    std::vector<Var> out;
    out.reserve(nets_.size());
    for (std::size_t j = 0; j < nets_.size(); ++j) {
        Var own = nets_[j].forward(g, v);
        out.push_back(chained_ && j > 0 ? add(g, own, out[j - 1]) : own);
    }
    return out;
}

void MetaNetChain::zero_output_layers() {
    for (auto& n : nets_) n.output.zero();
}

std::vector<NamedParameter> MetaNetChain::parameters() {
    std::vector<NamedParameter> out;
    for (std::size_t j = 0; j < nets_.size(); ++j) {
        const std::string p = "meta_net." + std::to_string(j);
        nets_[j].hidden.append_parameters(p + ".hidden", out);
        nets_[j].output.append_parameters(p + ".output", out);
    }
    return out;
}

std::vector<ConstNamedParameter> MetaNetChain::parameters() const {
    std::vector<ConstNamedParameter> out;
    for (std::size_t j = 0; j < nets_.size(); ++j) {
        const std::string p = "meta_net." + std::to_string(j);
        nets_[j].hidden.append_parameters(p + ".hidden", out);
        nets_[j].output.append_parameters(p + ".output", out);
    }
    return out;
}

}  // namespace cotprompt
