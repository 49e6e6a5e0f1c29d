#include "cotprompt/metrics.hpp"

#include <algorithm>

#include "cotprompt/errors.hpp"
#include "cotprompt/ops.hpp"

namespace cotprompt {
namespace {

struct PhaseTally {
    std::size_t correct = 0;
    std::size_t total = 0;
    double percent() const { return total ? 100.0 * static_cast<double>(correct) / static_cast<double>(total) : 0.0; }
};

bool contains(const std::vector<std::size_t>& v, std::size_t x) { return std::find(v.begin(), v.end(), x) != v.end(); }

}  // namespace

double harmonic_mean(double base, double novel) {
    if (!(base > 0.0) || !(novel > 0.0))
        throw DomainError("harmonic_mean needs positive arguments, got " + std::to_string(base) + " and " +
                          std::to_string(novel));
    return 2.0 * base * novel / (base + novel);
}

std::string protocol_name(ProtocolKind kind) {
    switch (kind) {
        case ProtocolKind::base_to_new: return "base_to_new";
        case ProtocolKind::transfer: return "transfer";
        case ProtocolKind::retrieval: return "retrieval";
        case ProtocolKind::vqa: return "vqa";
    }
    return "base_to_new";
}

std::string Protocol::name() const { return protocol_name(kind); }

ProtocolKind parse_protocol(const std::string& text) {
    if (text == "base_to_new") return ProtocolKind::base_to_new;
    if (text == "transfer") return ProtocolKind::transfer;
    if (text == "retrieval") return ProtocolKind::retrieval;
    if (text == "vqa") return ProtocolKind::vqa;
    throw ConfigError("unknown protocol '" + text + "' (expected base_to_new, transfer, retrieval or vqa)");
}

MetricsReport evaluate(const CotModel& model, const Dataset& dataset, const Protocol& protocol) {
    const bool classification = protocol.kind == ProtocolKind::base_to_new || protocol.kind == ProtocolKind::transfer;
    const TaskKind needed = classification                          ? TaskKind::classification
                            : protocol.kind == ProtocolKind::retrieval ? TaskKind::retrieval
                                                                       : TaskKind::vqa;
    if (dataset.kind != needed)
        throw ConfigError("protocol " + protocol.name() + " needs a " + task_kind_name(needed) + " dataset, got " +
                          task_kind_name(dataset.kind));
    if (protocol.kind != ProtocolKind::transfer && !protocol.shift.is_null())
        throw ConfigError("a feature shift is only meaningful for the transfer protocol");
    if (model.class_count() != dataset.class_count())
        throw ConfigError("model vocabulary has " + std::to_string(model.class_count()) + " classes, dataset has " +
                          std::to_string(dataset.class_count()));

    const std::size_t classes = dataset.class_count();
    MetricsReport r;
    r.protocol = protocol.name();
    r.confusion.assign(classes, std::vector<std::size_t>(classes, 0));
    r.similarity_trajectory.assign(model.config().chain_length, 0.0);
    r.train_instances = dataset.train.size();
    for (const auto& inst : dataset.train)
        if (contains(dataset.new_classes, inst.label)) ++r.new_class_train_exposure;

    const auto test = protocol.kind == ProtocolKind::transfer ? apply_shift(dataset.test, protocol.shift)
                                                              : dataset.test;

    double conf_correct = 0.0, conf_wrong = 0.0;
    std::size_t n_correct = 0, n_wrong = 0;
    PhaseTally base_phase, new_phase;
    for (const auto& inst : test) {
        const bool is_new = contains(dataset.new_classes, inst.label);
        const auto& candidates = is_new ? dataset.new_classes : dataset.base_classes;

        Graph g;
        const Tensor v = model.image_embedding(inst.feature);
        const ForwardTrace trace = model.forward(g, v, candidates);
        const auto pos = static_cast<std::size_t>(std::find(candidates.begin(), candidates.end(), inst.label) -
                                                  candidates.begin());
        const auto probs = softmax(g.value(trace.logits).data());
        const Prediction p = make_prediction(probs, candidates, inst.label);

        for (std::size_t j = 0; j < r.similarity_trajectory.size(); ++j)
            r.similarity_trajectory[j] += cosine_similarity(g.value(trace.state.chained[j][pos]).data(), v.data());

        ++r.confusion[inst.label][p.predicted_class];
        PhaseTally& phase = is_new ? new_phase : base_phase;
        ++phase.total;
        if (*p.correct) {
            ++phase.correct;
            conf_correct += p.confidence;
            ++n_correct;
        } else {
            conf_wrong += p.confidence;
            ++n_wrong;
        }
    }

    r.correct = base_phase.correct + new_phase.correct;
    r.total = base_phase.total + new_phase.total;
    r.accuracy = r.total ? 100.0 * static_cast<double>(r.correct) / static_cast<double>(r.total) : 0.0;
    if (n_correct) r.confidence_correct = conf_correct / static_cast<double>(n_correct);
    if (n_wrong) r.confidence_wrong = conf_wrong / static_cast<double>(n_wrong);
    for (auto& s : r.similarity_trajectory) s /= static_cast<double>(std::max<std::size_t>(test.size(), 1));

    if (classification) {
        r.base_accuracy = base_phase.percent();
        r.new_accuracy = new_phase.percent();
        r.harmonic = (*r.base_accuracy > 0.0 && *r.new_accuracy > 0.0)
                         ? harmonic_mean(*r.base_accuracy, *r.new_accuracy)
                         : 0.0;
    } else {
        r.recall_at_1 = base_phase.percent();
    }
    return r;
}

}  // namespace cotprompt
