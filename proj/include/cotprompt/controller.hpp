#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "cotprompt/layers.hpp"

namespace cotprompt {

// linear(d -> d/16) -> relu -> linear(d/16 -> N) -> sigmoid. Emits one
// mixing weight per chain step; the first is never used by the recursion.
class ChainController {
public:
    static ChainController init(std::size_t joint_dim, std::size_t chain_length, std::uint64_t seed);

    std::size_t chain_length() const { return output_.out_features(); }
    Var forward(Graph& g, Var v) const;

    Dense& hidden() noexcept { return hidden_; }
    Dense& output() noexcept { return output_; }
    const Dense& hidden() const noexcept { return hidden_; }
    const Dense& output() const noexcept { return output_; }

    std::vector<NamedParameter> parameters();
    std::vector<ConstNamedParameter> parameters() const;

private:
    Dense hidden_;
    Dense output_;
};

struct LambdaSchedule {
    enum class Mode { dynamic, fixed };
    Mode mode = Mode::dynamic;
    double value = 0.5;  // used by Mode::fixed

    static LambdaSchedule dynamic() { return {Mode::dynamic, 0.5}; }
    static LambdaSchedule fixed(double c);  // ConfigError unless 0 < c < 1

    std::string name() const;
    bool operator==(const LambdaSchedule&) const = default;
};

// Constant, non-trainable schedule (c, c, ..., c).
Tensor fixed_lambdas(double c, std::size_t chain_length);

}  // namespace cotprompt
