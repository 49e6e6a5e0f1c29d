#include "cotprompt/controller.hpp"

#include "cotprompt/errors.hpp"
#include "cotprompt/ops.hpp"

namespace cotprompt {

ChainController ChainController::init(std::size_t joint_dim, std::size_t chain_length, std::uint64_t seed) {
    if (joint_dim % 16 != 0 || joint_dim < 16)
        throw ConfigError("controller input width " + std::to_string(joint_dim) +
                          " must be a positive multiple of 16");
    if (chain_length < 1) throw ConfigError("controller needs chain_length >= 1");
    ChainController c;
    Rng rng(derive_seed(seed, "controller"));
    c.hidden_ = Dense::init(joint_dim, joint_dim / 16, rng);
    c.output_ = Dense::init(joint_dim / 16, chain_length, rng);
    return c;
}

Var ChainController::forward(Graph& g, Var v) const {
    if (g.value(v).rank() != 1 || g.value(v).size() != hidden_.in_features())
        throw DimensionError("controller input " + shape_string(g.shape(v)) + " does not match width " +
                             std::to_string(hidden_.in_features()));
    Var h = activation(g, hidden_.forward(g, v), Activation::relu);
    return activation(g, output_.forward(g, h), Activation::sigmoid);
}

std::vector<NamedParameter> ChainController::parameters() {
    std::vector<NamedParameter> out;
    hidden_.append_parameters("controller.hidden", out);
    output_.append_parameters("controller.output", out);
    return out;
}

std::vector<ConstNamedParameter> ChainController::parameters() const {
    std::vector<ConstNamedParameter> out;
    hidden_.append_parameters("controller.hidden", out);
    output_.append_parameters("controller.output", out);
    return out;
}

LambdaSchedule LambdaSchedule::fixed(double c) {
    if (!(c > 0.0 && c < 1.0)) throw ConfigError("fixed lambda " + std::to_string(c) + " must lie in (0, 1)");
    return {Mode::fixed, c};
}

std::string LambdaSchedule::name() const { return mode == Mode::dynamic ? "dynamic" : "fixed"; }

Tensor fixed_lambdas(double c, std::size_t chain_length) {
    if (!(c > 0.0 && c < 1.0)) throw ConfigError("fixed lambda " + std::to_string(c) + " must lie in (0, 1)");
    if (chain_length < 1) throw ConfigError("chain_length must be >= 1");
    return Tensor({chain_length}, c);
}

}  // namespace cotprompt
