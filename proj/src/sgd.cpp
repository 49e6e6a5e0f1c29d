#include "cotprompt/sgd.hpp"

#include <string>

#include "cotprompt/errors.hpp"

namespace cotprompt {

void SgdConfig::validate() const {
    if (!(learning_rate >= 0.0)) throw ConfigError("learning_rate must be nonnegative");
    if (epochs == 0) throw ConfigError("epochs must be positive");
    if (batch_size == 0) throw ConfigError("batch_size must be positive");
    if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigError("momentum must lie in [0, 1)");
}

Sgd::Sgd(SgdConfig config) : config_(config) { config_.validate(); }

void Sgd::step(std::span<const NamedParameter> params) {
    for (const auto& p : params) {
        if (p.tensor->requires_grad() && !p.tensor->has_grad())
            throw ContractError("sgd step before backward: parameter '" + p.name + "' has no gradient");
    }
    const double lr = config_.learning_rate;
    for (const auto& p : params) {
        Tensor& t = *p.tensor;
        if (!t.requires_grad()) continue;
        auto data = t.data();
        auto grad = t.grad();
        if (config_.momentum > 0.0) {
            auto& vel = velocity_[&t];
            if (vel.empty()) vel.assign(t.size(), 0.0);
            for (std::size_t i = 0; i < data.size(); ++i) {
                vel[i] = config_.momentum * vel[i] + grad[i];
                data[i] -= lr * vel[i];
            }
        } else {
            for (std::size_t i = 0; i < data.size(); ++i) data[i] -= lr * grad[i];
        }
        t.clear_grad();
    }
}

}  // namespace cotprompt
