#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cotprompt/controller.hpp"
#include "cotprompt/encoders.hpp"
#include "cotprompt/meta_net.hpp"
#include "cotprompt/prompt_chain.hpp"

namespace cotprompt {

struct EncoderSpec {
    std::uint64_t seed = 7;
    EncoderDims dims;
    bool operator==(const EncoderSpec&) const = default;
};

struct ModelConfig {
    std::size_t chain_length = 3;
    std::size_t prompt_length = 4;
    double temperature = 0.01;
    LambdaSchedule lambda = LambdaSchedule::dynamic();
    bool meta_chained = true;
    PredictionMode prediction = PredictionMode::final_step();
    std::uint64_t seed = 1;

    void validate() const;
    bool operator==(const ModelConfig&) const = default;
};

struct Prediction {
    std::vector<double> probabilities;  // ordered like the candidate classes
    std::size_t predicted_class = 0;    // class id (not position)
    double confidence = 0.0;            // max probability
    std::optional<bool> correct;
};

// argmax with the lowest position winning ties.
Prediction make_prediction(std::vector<double> probabilities, std::span<const std::size_t> classes,
                           std::optional<std::size_t> label = std::nullopt);

// Everything recorded by one forward pass, for inspection in tests and the
// per-step similarity trajectory.
struct ForwardTrace {
    Var image;                          // normalized image embedding v (constant)
    Var lambdas;                        // [N]
    std::vector<Var> biases;            // per step, [d_e]
    std::vector<Var> biased_contexts;   // per step, [L x d_e]
    ChainState state;                   // raw / chained, [step][class]
    std::vector<Var> embeddings;        // per class prediction embedding
    Var logits;                         // [C] cosine / tau
};

// Chained prompts + Meta-Net chain + chain controller around frozen
// encoders. Candidate classes are given per call as class ids into the
// vocabulary, so the same model scores base or new classes.
// logits_i = cos(e_i, v) / temperature
Var class_logits(Graph& g, std::span<const Var> embeddings, Var image, double temperature);

class CotModel {
public:
    static CotModel build(ModelConfig config, EncoderSpec encoders, VocabularySpec vocab);

    const ModelConfig& config() const noexcept { return config_; }
    const EncoderSpec& encoder_spec() const noexcept { return encoder_spec_; }
    const VocabularySpec& vocabulary_spec() const noexcept { return vocab_spec_; }
    const FrozenEncoders& encoders() const noexcept { return encoders_; }
    const ClassVocabulary& vocabulary() const noexcept { return vocab_; }
    std::size_t class_count() const noexcept { return vocab_.size(); }

    PromptChain& prompts() noexcept { return prompts_; }
    const PromptChain& prompts() const noexcept { return prompts_; }
    MetaNetChain& meta_nets() noexcept { return meta_; }
    const MetaNetChain& meta_nets() const noexcept { return meta_; }
    ChainController* controller() noexcept { return controller_ ? &*controller_ : nullptr; }
    const ChainController* controller() const noexcept { return controller_ ? &*controller_ : nullptr; }

    Tensor image_embedding(const Tensor& image_feature) const;

    // Full forward pass from an already normalized image embedding.
    ForwardTrace forward(Graph& g, const Tensor& image_embedding, std::span<const std::size_t> classes) const;

    Tensor class_probabilities(const Tensor& image_feature, std::span<const std::size_t> classes) const;
    // Cross-entropy of the label (a class id, which must be a candidate).
    Var instance_loss(Graph& g, const Tensor& image_feature, std::size_t label,
                      std::span<const std::size_t> classes) const;
    Prediction predict(const Tensor& image_feature, std::span<const std::size_t> classes,
                       std::optional<std::size_t> label = std::nullopt) const;

    std::vector<NamedParameter> parameters();
    std::vector<ConstNamedParameter> parameters() const;
    std::size_t parameter_count() const;

    // Hash over the frozen encoders and the class vocabulary.
    std::uint64_t frozen_hash() const;
    // Hash over every trainable tensor.
    std::uint64_t trainable_hash() const;

private:
    CotModel(ModelConfig config, EncoderSpec encoder_spec, VocabularySpec vocab_spec, FrozenEncoders encoders,
             ClassVocabulary vocab);

    ModelConfig config_;
    EncoderSpec encoder_spec_;
    VocabularySpec vocab_spec_;
    FrozenEncoders encoders_;
    ClassVocabulary vocab_;
    PromptChain prompts_;
    MetaNetChain meta_;
    std::optional<ChainController> controller_;
};

// Single prompt + single Meta-Net conditional prompt learner, wired on its
// own (no chain, no controller). With equal seeds it draws the same initial
// weights as a one-step CotModel.
class SinglePromptBaseline {
public:
    static SinglePromptBaseline build(std::size_t prompt_length, double temperature, std::uint64_t seed,
                                      EncoderSpec encoders, VocabularySpec vocab);

    Tensor class_probabilities(const Tensor& image_feature, std::span<const std::size_t> classes) const;
    Tensor& prompt() noexcept { return prompt_; }
    MetaNet& meta_net() noexcept { return meta_; }

private:
    SinglePromptBaseline(FrozenEncoders encoders, ClassVocabulary vocab)
        : encoders_(std::move(encoders)), vocab_(std::move(vocab)) {}

    FrozenEncoders encoders_;
    ClassVocabulary vocab_;
    Tensor prompt_;
    MetaNet meta_;
    double temperature_ = 0.01;
};

// Versioned JSON checkpoint with every trainable tensor plus the seeds and
// flags needed to rebuild the frozen parts. Round trip is bit exact.
void save_checkpoint(const CotModel& model, const std::string& path);
CotModel load_checkpoint(const std::string& path);
std::string checkpoint_to_string(const CotModel& model);
CotModel checkpoint_from_string(const std::string& text);

}  // namespace cotprompt
