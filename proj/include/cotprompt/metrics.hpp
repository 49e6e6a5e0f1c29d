#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "cotprompt/model.hpp"
#include "cotprompt/task.hpp"

namespace cotprompt {

// 2ab / (a + b) on percentages. DomainError unless both are positive.
double harmonic_mean(double base, double novel);

enum class ProtocolKind { base_to_new, transfer, retrieval, vqa };

struct Protocol {
    ProtocolKind kind = ProtocolKind::base_to_new;
    ShiftSpec shift;  // transfer only

    std::string name() const;
    bool operator==(const Protocol&) const = default;
};

ProtocolKind parse_protocol(const std::string& text);
std::string protocol_name(ProtocolKind kind);

struct MetricsReport {
    std::string protocol;
    // Base-to-new / transfer: base phase scores base test instances among
    // base classes, new phase scores new instances among new classes.
    // Retrieval / VQA: one phase over every class.
    std::optional<double> base_accuracy;
    std::optional<double> new_accuracy;
    std::optional<double> harmonic;
    std::optional<double> recall_at_1;
    std::size_t correct = 0;
    std::size_t total = 0;
    double accuracy = 0.0;  // 100 * correct / total over all phases
    std::vector<std::vector<std::size_t>> confusion;  // [true][predicted]
    std::optional<double> confidence_correct;  // mean max probability
    std::optional<double> confidence_wrong;
    std::vector<double> similarity_trajectory;  // mean cos(chained_j(true class), v) per step
    std::size_t train_instances = 0;
    std::size_t new_class_train_exposure = 0;  // train instances whose label is a new class
};

MetricsReport evaluate(const CotModel& model, const Dataset& dataset, const Protocol& protocol);

}  // namespace cotprompt
