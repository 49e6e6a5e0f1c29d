#include "cotprompt/model.hpp"

#include <algorithm>

#include "cotprompt/errors.hpp"
#include "cotprompt/ops.hpp"
#include "cotprompt/random.hpp"

namespace cotprompt {

void ModelConfig::validate() const {
    if (chain_length < 1) throw ConfigError("chain_length must be >= 1");
    if (prompt_length < 1) throw ConfigError("prompt_length must be >= 1");
    if (!(temperature > 0.0)) throw ConfigError("temperature must be positive");
    if (lambda.mode == LambdaSchedule::Mode::fixed) LambdaSchedule::fixed(lambda.value);
    prediction.validate(chain_length);
}

Prediction make_prediction(std::vector<double> probabilities, std::span<const std::size_t> classes,
                           std::optional<std::size_t> label) {
    if (probabilities.empty() || probabilities.size() != classes.size())
        throw DimensionError("make_prediction: " + std::to_string(probabilities.size()) + " probabilities for " +
                             std::to_string(classes.size()) + " classes");
    std::size_t best = 0;
    for (std::size_t i = 1; i < probabilities.size(); ++i)
        if (probabilities[i] > probabilities[best]) best = i;
    Prediction p;
    p.confidence = probabilities[best];
    p.predicted_class = classes[best];
    p.probabilities = std::move(probabilities);
    if (label) p.correct = (*label == p.predicted_class);
    return p;
}

Var class_logits(Graph& g, std::span<const Var> embeddings, Var image, double temperature) {
    if (!(temperature > 0.0)) throw ConfigError("temperature must be positive");
    std::vector<Var> sims;
    sims.reserve(embeddings.size());
    for (Var e : embeddings) sims.push_back(cosine_similarity(g, e, image));
    return scale(g, stack(g, sims), 1.0 / temperature);
}

CotModel::CotModel(ModelConfig config, EncoderSpec encoder_spec, VocabularySpec vocab_spec, FrozenEncoders encoders,
                   ClassVocabulary vocab)
    : config_(config),
      encoder_spec_(encoder_spec),
      vocab_spec_(vocab_spec),
      encoders_(std::move(encoders)),
      vocab_(std::move(vocab)),
      prompts_(PromptChain::init(config.chain_length, config.prompt_length, encoder_spec.dims.token_dim,
                                 config.seed)),
      meta_(MetaNetChain::init(config.chain_length, encoder_spec.dims.joint_dim, encoder_spec.dims.token_dim,
                               config.meta_chained, config.seed)) {
    if (config_.lambda.mode == LambdaSchedule::Mode::dynamic)
        controller_ = ChainController::init(encoder_spec.dims.joint_dim, config.chain_length, config.seed);
}

CotModel CotModel::build(ModelConfig config, EncoderSpec encoders, VocabularySpec vocab) {
    config.validate();
    auto enc = FrozenEncoders::build(encoders.seed, encoders.dims);
    auto voc = vocab.build(encoders.dims.token_dim);
    return CotModel(config, encoders, vocab, std::move(enc), std::move(voc));
}

Tensor CotModel::image_embedding(const Tensor& image_feature) const { return encoders_.encode_image(image_feature); }

ForwardTrace CotModel::forward(Graph& g, const Tensor& image_embedding, std::span<const std::size_t> classes) const {
    if (classes.size() < 2) throw ContractError("class_probabilities needs at least 2 candidate classes");
    const std::size_t steps = config_.chain_length;
    ForwardTrace t;
    t.image = g.constant(image_embedding);
    t.lambdas = controller_ ? controller_->forward(g, t.image)
                            : g.constant(fixed_lambdas(config_.lambda.value, steps));
    t.biases = meta_.biases(g, t.image);

    std::vector<std::vector<Var>> raw(steps);
    for (std::size_t j = 0; j < steps; ++j) {
        t.biased_contexts.push_back(prompts_.biased_context(g, j, t.biases[j]));
        for (std::size_t cls : classes) {
            Var tokens = assemble_step_tokens(g, t.biased_contexts[j], vocab_.tokens(cls));
            raw[j].push_back(encoders_.encode_text(g, tokens));
        }
    }
    t.state = chain_embeddings(g, std::move(raw), t.lambdas);

    if (config_.prediction.kind == PredictionMode::Kind::concat) {
        for (std::size_t cls : classes)
            t.embeddings.push_back(concat_prediction_embedding(g, encoders_, t.biased_contexts, vocab_.tokens(cls),
                                                               config_.prediction.concat_k));
    } else {
        t.embeddings = prediction_embedding(g, t.state, config_.prediction);
    }

    t.logits = class_logits(g, t.embeddings, t.image, config_.temperature);
    return t;
}

Tensor CotModel::class_probabilities(const Tensor& image_feature, std::span<const std::size_t> classes) const {
    Graph g;
    const ForwardTrace t = forward(g, image_embedding(image_feature), classes);
    return Tensor::vector(softmax(g.value(t.logits).data()));
}

Var CotModel::instance_loss(Graph& g, const Tensor& image_feature, std::size_t label,
                            std::span<const std::size_t> classes) const {
    const auto it = std::find(classes.begin(), classes.end(), label);
    if (it == classes.end())
        throw IndexError("label " + std::to_string(label) + " is not among the candidate classes");
    const ForwardTrace t = forward(g, image_embedding(image_feature), classes);
    return softmax_cross_entropy(g, t.logits, static_cast<std::size_t>(it - classes.begin())).loss;
}

Prediction CotModel::predict(const Tensor& image_feature, std::span<const std::size_t> classes,
                             std::optional<std::size_t> label) const {
    const Tensor probs = class_probabilities(image_feature, classes);
    return make_prediction(std::vector<double>(probs.data().begin(), probs.data().end()), classes, label);
}

std::vector<NamedParameter> CotModel::parameters() {
    auto out = prompts_.parameters();
    auto meta = meta_.parameters();
    out.insert(out.end(), meta.begin(), meta.end());
    if (controller_) {
        auto ctrl = controller_->parameters();
        out.insert(out.end(), ctrl.begin(), ctrl.end());
    }
    return out;
}

std::vector<ConstNamedParameter> CotModel::parameters() const {
    auto out = prompts_.parameters();
    auto meta = meta_.parameters();
    out.insert(out.end(), meta.begin(), meta.end());
    if (controller_) {
        auto ctrl = controller_->parameters();
        out.insert(out.end(), ctrl.begin(), ctrl.end());
    }
    return out;
}

std::size_t CotModel::parameter_count() const { return count_values(parameters()); }

std::uint64_t CotModel::frozen_hash() const {
    ContentHash h;
    h.u64(encoders_.content_hash()).u64(vocab_.content_hash());
    return h.value();
}

std::uint64_t CotModel::trainable_hash() const {
    ContentHash h;
    for (const auto& p : parameters()) h.str(p.name).tensor(*p.tensor);
    return h.value();
}

SinglePromptBaseline SinglePromptBaseline::build(std::size_t prompt_length, double temperature, std::uint64_t seed,
                                                 EncoderSpec encoders, VocabularySpec vocab) {
    if (!(temperature > 0.0)) throw ConfigError("temperature must be positive");
    SinglePromptBaseline b(FrozenEncoders::build(encoders.seed, encoders.dims),
                           vocab.build(encoders.dims.token_dim));
    b.temperature_ = temperature;
    b.prompt_ = PromptChain::init(1, prompt_length, encoders.dims.token_dim, seed).prompt(0);
    b.meta_ = MetaNetChain::init(1, encoders.dims.joint_dim, encoders.dims.token_dim, false, seed).net(0);
    return b;
}

Tensor SinglePromptBaseline::class_probabilities(const Tensor& image_feature,
                                                 std::span<const std::size_t> classes) const {
    Graph g;
    Var v = g.constant(encoders_.encode_image(image_feature));
    Var context = add_to_rows(g, g.leaf(prompt_), meta_.forward(g, v));
    std::vector<Var> sims;
    for (std::size_t cls : classes) {
        const Var blocks[] = {context, g.leaf(vocab_.tokens(cls))};
        Var e = encoders_.encode_text(g, concat_rows(g, blocks));
        sims.push_back(cosine_similarity(g, e, v));
    }
    Var logits = scale(g, stack(g, sims), 1.0 / temperature_);
    return Tensor::vector(softmax(g.value(logits).data()));
}

}  // namespace cotprompt
