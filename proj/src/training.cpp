#include "cotprompt/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "cotprompt/errors.hpp"

namespace cotprompt {

TrainResult train(CotModel& model, const Dataset& dataset, const SgdConfig& config, std::uint64_t shuffle_seed) {
    config.validate();
    if (dataset.train.empty()) throw ContractError("train: empty training set");
    for (const auto& inst : dataset.train)
        if (std::find(dataset.base_classes.begin(), dataset.base_classes.end(), inst.label) ==
            dataset.base_classes.end())
            throw ContractError("train: instance of class " + std::to_string(inst.label) +
                                " is not a base class");

    TrainResult result;
    result.frozen_hash_before = model.frozen_hash();
    Sgd sgd(config);
    auto params = model.parameters();
    const auto& classes = dataset.base_classes;
    const double inv_batch = 1.0 / static_cast<double>(config.batch_size);

    std::vector<std::size_t> order(dataset.train.size());
    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::mt19937_64 rng(shuffle_seed + epoch);
        std::shuffle(order.begin(), order.end(), rng);

        double total = 0.0;
        std::size_t in_batch = 0;
        for (std::size_t k = 0; k < order.size(); ++k) {
            const Instance& inst = dataset.train[order[k]];
            Graph g;
            double loss = 0.0;
            try {
                Var l = model.instance_loss(g, inst.feature, inst.label, classes);
                loss = g.value(l)[0];
                if (!std::isfinite(loss)) throw NonFiniteError("loss is not finite");
                g.backward(l, inv_batch);
            } catch (const NonFiniteError& e) {
                throw NonFiniteError("epoch " + std::to_string(epoch) + " step " + std::to_string(k) + ": " +
                                     e.what());
            }
            g.accumulate_into(params);
            total += loss;
            if (++in_batch == config.batch_size || k + 1 == order.size()) {
                sgd.step(params);
                ++result.steps;
                in_batch = 0;
            }
        }
        result.epoch_losses.push_back(total / static_cast<double>(order.size()));
    }

    result.frozen_hash_after = model.frozen_hash();
    if (result.frozen_hash_after != result.frozen_hash_before)
        throw ContractError("frozen encoder/vocabulary hash changed during training");
    result.train_accuracy = accuracy(model, dataset.train, classes);
    return result;
}

double accuracy(const CotModel& model, const std::vector<Instance>& instances,
                const std::vector<std::size_t>& classes) {
    if (instances.empty()) return 0.0;
    std::size_t correct = 0;
    for (const auto& inst : instances)
        if (model.predict(inst.feature, classes, inst.label).correct.value_or(false)) ++correct;
    return 100.0 * static_cast<double>(correct) / static_cast<double>(instances.size());
}

}  // namespace cotprompt
