#pragma once

#include <cstdint>
#include <vector>

#include "cotprompt/model.hpp"
#include "cotprompt/sgd.hpp"
#include "cotprompt/task.hpp"

namespace cotprompt {

struct TrainResult {
    std::vector<double> epoch_losses;  // mean instance loss per epoch
    double train_accuracy = 0.0;       // percent, over base classes after training
    std::size_t steps = 0;             // optimizer steps taken
    std::uint64_t frozen_hash_before = 0;
    std::uint64_t frozen_hash_after = 0;
};

// Instance-at-a-time SGD over the training split, candidates restricted to
// the dataset's base classes. Epoch e shuffles with seed `shuffle_seed + e`.
// NonFiniteError names the epoch and step of a non-finite loss; ContractError
// if the frozen hashes change.
TrainResult train(CotModel& model, const Dataset& dataset, const SgdConfig& config, std::uint64_t shuffle_seed);

// Percent of instances whose prediction among `classes` is their label.
double accuracy(const CotModel& model, const std::vector<Instance>& instances,
                const std::vector<std::size_t>& classes);

}  // namespace cotprompt
