#include "cotprompt/task.hpp"

#include <Eigen/Dense>
#include <cmath>

#include "cotprompt/errors.hpp"
#include "cotprompt/ops.hpp"
#include "cotprompt/random.hpp"

namespace cotprompt {
namespace {

constexpr std::size_t kReferenceContextTokens = 4;
constexpr double kReferenceContextStd = 0.5;

Eigen::MatrixXd to_eigen(const Tensor& m) {
    Eigen::MatrixXd out(m.rows(), m.cols());
    for (std::size_t r = 0; r < m.rows(); ++r)
        for (std::size_t c = 0; c < m.cols(); ++c) out(r, c) = m.at(r, c);
    return out;
}

Tensor unit_gaussian(Rng& rng, std::size_t n) {
    Tensor t = rng.gaussian({n}, 1.0);
    const double norm = l2_norm(t.data());
    for (auto& x : t.data()) x /= norm;
    return t;
}

// Feature whose image embedding is the given unit joint-space target
// (minimum-norm preimage under the linear image map), rescaled to unit norm.
Tensor pull_back(const Eigen::MatrixXd& image_weight, const Tensor& target) {
    Eigen::VectorXd u(target.size());
    for (std::size_t i = 0; i < target.size(); ++i) u(i) = target[i];
    const Eigen::VectorXd x = image_weight.completeOrthogonalDecomposition().solve(u);
    Tensor out({static_cast<std::size_t>(x.size())});
    const double n = x.norm();
    if (!(n > 0.0)) throw DegenerateInputError("task generator: cluster mean pulled back to zero");
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = x(static_cast<Eigen::Index>(i)) / n;
    return out;
}

}  // namespace

std::string task_kind_name(TaskKind kind) {
    switch (kind) {
        case TaskKind::classification: return "classification";
        case TaskKind::retrieval: return "retrieval";
        case TaskKind::vqa: return "vqa";
    }
    return "classification";
}

TaskKind parse_task_kind(const std::string& text) {
    if (text == "classification") return TaskKind::classification;
    if (text == "retrieval") return TaskKind::retrieval;
    if (text == "vqa") return TaskKind::vqa;
    throw ConfigError("unknown task kind '" + text + "' (expected classification, retrieval or vqa)");
}

VocabularySpec TaskSpec::vocabulary() const {
    VocabularySpec v;
    v.seed = seed;
    v.classes = num_classes;
    v.tokens_per_class = class_tokens;
    v.questions = questions;
    v.answers_per_question = answers_per_question;
    v.question_tokens = question_tokens;
    v.answer_tokens = answer_tokens;
    switch (kind) {
        case TaskKind::classification: v.kind = VocabularySpec::Kind::class_names; break;
        case TaskKind::retrieval: v.kind = VocabularySpec::Kind::captions; break;
        case TaskKind::vqa: v.kind = VocabularySpec::Kind::qa_pairs; break;
    }
    return v;
}

void TaskSpec::validate() const {
    const std::size_t c = class_count();
    if (c < 2) throw ConfigError("task needs at least 2 classes");
    if (kind == TaskKind::classification && c % 2 != 0)
        throw ConfigError("num_classes=" + std::to_string(c) + " must be even for an equal base/new split");
    if (kind == TaskKind::classification && c < 4)
        throw ConfigError("base/new split needs num_classes >= 4 so each half has two classes");
    if (!(spread >= 0.0)) throw ConfigError("spread must be nonnegative");
    if (!(alignment >= 0.0 && alignment <= 1.0)) throw ConfigError("alignment must lie in [0, 1]");
    if (train_per_class < 1 || test_per_class < 1)
        throw ConfigError("train_per_class and test_per_class must be >= 1");
}

Dataset generate_task(const TaskSpec& spec, const FrozenEncoders& encoders, const ClassVocabulary& vocab) {
    spec.validate();
    const std::size_t classes = spec.class_count();
    if (vocab.size() != classes)
        throw ConfigError("vocabulary has " + std::to_string(vocab.size()) + " classes, task expects " +
                          std::to_string(classes));
    const std::size_t dv = encoders.dims().feature_dim;
    const std::size_t d = encoders.dims().joint_dim;

    Dataset ds;
    ds.kind = spec.kind;
    if (spec.kind == TaskKind::classification) {
        for (std::size_t c = 0; c < classes; ++c) (c < classes / 2 ? ds.base_classes : ds.new_classes).push_back(c);
    } else {
        for (std::size_t c = 0; c < classes; ++c) ds.base_classes.push_back(c);
    }

    Rng ref_rng(derive_seed(spec.seed, "reference_context"));
    const Tensor reference = ref_rng.gaussian({kReferenceContextTokens, encoders.dims().token_dim},
                                              kReferenceContextStd);
    const Eigen::MatrixXd image_weight = to_eigen(encoders.image_weight());
    for (std::size_t c = 0; c < classes; ++c) {
        Rng rng(derive_seed(spec.seed, "cluster_mean", c));
        if (spec.alignment == 0.0) {
            ds.cluster_means.push_back(unit_gaussian(rng, dv));
            continue;
        }
        Graph g;
        const Var blocks[] = {g.leaf(reference), g.leaf(vocab.tokens(c))};
        const Tensor text = g.value(encoders.encode_text(g, concat_rows(g, blocks)));
        const Tensor noise = unit_gaussian(rng, d);
        const double a = spec.alignment, b = std::sqrt(1.0 - a * a);
        Tensor target({d});
        for (std::size_t i = 0; i < d; ++i) target[i] = a * text[i] + b * noise[i];
        const double n = l2_norm(target.data());
        for (auto& x : target.data()) x /= n;
        ds.cluster_means.push_back(pull_back(image_weight, target));
    }

    auto sample = [&](std::size_t cls, std::string_view split, std::size_t index) {
        Rng rng(derive_seed(derive_seed(spec.seed, split, cls), "instance", index));
        Tensor f = ds.cluster_means[cls];
        if (spec.spread > 0.0)
            for (auto& x : f.data()) x += spec.spread * rng.normal();
        return Instance{std::move(f), cls};
    };
    for (std::size_t c : ds.base_classes)
        for (std::size_t i = 0; i < spec.train_per_class; ++i) ds.train.push_back(sample(c, "train", i));
    for (std::size_t c = 0; c < classes; ++c)
        for (std::size_t i = 0; i < spec.test_per_class; ++i) ds.test.push_back(sample(c, "test", i));
    return ds;
}

std::uint64_t Dataset::content_hash() const {
    ContentHash h;
    h.u64(static_cast<std::uint64_t>(kind));
    for (auto c : base_classes) h.u64(c);
    h.u64(~0ULL);
    for (auto c : new_classes) h.u64(c);
    for (const auto* split : {&train, &test}) {
        h.u64(split->size());
        for (const auto& inst : *split) h.u64(inst.label).tensor(inst.feature);
    }
    for (const auto& m : cluster_means) h.tensor(m);
    return h.value();
}

std::vector<Instance> apply_shift(const std::vector<Instance>& instances, const ShiftSpec& shift) {
    if (shift.is_null() || instances.empty()) return instances;
    if (!(shift.noise >= 0.0)) throw ConfigError("shift noise must be nonnegative");
    const std::size_t n = instances.front().feature.size();
    std::vector<Instance> out = instances;

    if (shift.angle != 0.0) {
        Rng rng(derive_seed(shift.seed, "rotation"));
        Eigen::MatrixXd gauss(n, n);
        for (Eigen::Index r = 0; r < gauss.rows(); ++r)
            for (Eigen::Index c = 0; c < gauss.cols(); ++c) gauss(r, c) = rng.normal();
        const Eigen::MatrixXd q = Eigen::HouseholderQR<Eigen::MatrixXd>(gauss).householderQ();
        Eigen::MatrixXd planar = Eigen::MatrixXd::Identity(n, n);
        const double cs = std::cos(shift.angle), sn = std::sin(shift.angle);
        for (std::size_t p = 0; p + 1 < n; p += 2) {
            const auto i = static_cast<Eigen::Index>(p);
            planar(i, i) = cs;
            planar(i, i + 1) = -sn;
            planar(i + 1, i) = sn;
            planar(i + 1, i + 1) = cs;
        }
        const Eigen::MatrixXd rotation = q * planar * q.transpose();
        for (auto& inst : out) {
            Eigen::VectorXd x(n);
            for (std::size_t i = 0; i < n; ++i) x(static_cast<Eigen::Index>(i)) = inst.feature[i];
            const Eigen::VectorXd y = rotation * x;
            for (std::size_t i = 0; i < n; ++i) inst.feature[i] = y(static_cast<Eigen::Index>(i));
        }
    }
    if (shift.noise > 0.0) {
        Rng rng(derive_seed(shift.seed, "noise"));
        for (auto& inst : out)
            for (auto& x : inst.feature.data()) x += shift.noise * rng.normal();
    }
    return out;
}

}  // namespace cotprompt
