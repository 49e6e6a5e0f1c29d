#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "cotprompt/encoders.hpp"
#include "cotprompt/tensor.hpp"

namespace cotprompt {

enum class TaskKind { classification, retrieval, vqa };

std::string task_kind_name(TaskKind kind);
TaskKind parse_task_kind(const std::string& text);

// Synthetic stand-in for a labelled image dataset. Each class owns a
// unit-norm cluster mean in image-feature space; instances are
// mean + spread * N(0, I).
//
// `alignment` in [0, 1] ties the cluster mean to the class description:
// the mean is pulled back through the frozen image encoder from the joint
// space target normalize(a * t_c + sqrt(1 - a^2) * g_c), where t_c encodes a
// hidden reference context followed by the class tokens and g_c is a seeded
// random direction. alignment = 0 gives plain seeded Gaussian means, so zero
// shot prediction is at chance.
struct TaskSpec {
    TaskKind kind = TaskKind::classification;
    std::size_t num_classes = 8;           // classification / retrieval
    std::size_t class_tokens = 2;          // tokens per class name or caption
    std::size_t questions = 4;             // vqa
    std::size_t answers_per_question = 2;  // vqa
    std::size_t question_tokens = 2;       // vqa
    std::size_t answer_tokens = 1;         // vqa
    double spread = 0.05;
    double alignment = 0.8;
    std::size_t train_per_class = 16;
    std::size_t test_per_class = 20;
    std::uint64_t seed = 1;

    VocabularySpec vocabulary() const;
    std::size_t class_count() const { return vocabulary().class_count(); }
    void validate() const;
    bool operator==(const TaskSpec&) const = default;
};

// Rotation by `angle` radians in every plane of a seeded orthonormal basis,
// then additive N(0, noise^2) per coordinate.
struct ShiftSpec {
    double angle = 0.0;
    double noise = 0.0;
    std::uint64_t seed = 11;

    bool is_null() const noexcept { return angle == 0.0 && noise == 0.0; }
    bool operator==(const ShiftSpec&) const = default;
};

struct Instance {
    Tensor feature;
    std::size_t label = 0;
};

struct Dataset {
    TaskKind kind = TaskKind::classification;
    std::vector<std::size_t> base_classes;
    std::vector<std::size_t> new_classes;  // empty for retrieval / vqa
    std::vector<Instance> train;
    std::vector<Instance> test;
    std::vector<Tensor> cluster_means;

    std::size_t class_count() const { return cluster_means.size(); }
    std::uint64_t content_hash() const;
};

// Classification: the first half of the classes is base, the rest new, and
// only base classes appear in `train`. Retrieval / VQA train and test on
// every class.
Dataset generate_task(const TaskSpec& spec, const FrozenEncoders& encoders, const ClassVocabulary& vocab);

// Shifted copies of the features. A null shift returns them untouched.
std::vector<Instance> apply_shift(const std::vector<Instance>& instances, const ShiftSpec& shift);

}  // namespace cotprompt
