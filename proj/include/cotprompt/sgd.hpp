#pragma once

#include <cstddef>
#include <span>
#include <unordered_map>
#include <vector>

#include "cotprompt/tensor.hpp"

namespace cotprompt {

struct SgdConfig {
    double learning_rate = 0.002;
    std::size_t epochs = 10;
    std::size_t batch_size = 1;
    double momentum = 0.0;  // off by default

    void validate() const;
};

// Plain stochastic gradient descent, p <- p - lr * grad, with optional
// heavy-ball momentum. Gradients are cleared after each step, so a second
// step without a new backward pass is a ContractError.
class Sgd {
public:
    explicit Sgd(SgdConfig config);

    void step(std::span<const NamedParameter> params);
    const SgdConfig& config() const noexcept { return config_; }

private:
    SgdConfig config_;
    std::unordered_map<const Tensor*, std::vector<double>> velocity_;
};

}  // namespace cotprompt
