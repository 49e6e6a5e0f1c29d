#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "cotprompt/graph.hpp"
#include "cotprompt/random.hpp"
#include "cotprompt/tensor.hpp"

namespace cotprompt {

// Trainable dense layer y = W x + b; W ~ N(0, 1/fan_in), b = 0.
struct Dense {
    Tensor weight;
    Tensor bias;

    static Dense init(std::size_t in, std::size_t out, Rng& rng);

    std::size_t in_features() const { return weight.cols(); }
    std::size_t out_features() const { return weight.rows(); }
    Var forward(Graph& g, Var x) const;
    void zero();

    void append_parameters(const std::string& prefix, std::vector<NamedParameter>& out);
    void append_parameters(const std::string& prefix, std::vector<ConstNamedParameter>& out) const;
};

}  // namespace cotprompt
