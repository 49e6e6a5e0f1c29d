#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "cotprompt/graph.hpp"
#include "cotprompt/tensor.hpp"

namespace cotprompt {

struct EncoderDims {
    std::size_t token_dim = 16;    // d_e, word-embedding width
    std::size_t feature_dim = 64;  // d_v, raw image feature width
    std::size_t joint_dim = 64;    // d, shared embedding space

    // Width of every d -> d/16 bottleneck (text hidden layer, Meta-Net, controller).
    std::size_t bottleneck() const noexcept { return joint_dim / 16; }
    void validate() const;
    bool operator==(const EncoderDims&) const = default;
};

// Frozen stand-ins for a pretrained text and image encoder.
//
// text:  tokens[n x d_e] -> mean over tokens -> dense(d_e -> d/16) -> tanh
//        -> dense(d/16 -> d) -> L2 normalize
// image: feature[d_v] -> dense(d_v -> d, no bias) -> L2 normalize
//
// Weights are drawn from N(0, 1/fan_in) and never require gradients, so the
// text path is differentiable with respect to its token inputs only.
class FrozenEncoders {
public:
    static FrozenEncoders build(std::uint64_t seed, EncoderDims dims);

    const EncoderDims& dims() const noexcept { return dims_; }
    std::uint64_t seed() const noexcept { return seed_; }

    Var encode_text(Graph& g, Var tokens) const;
    Tensor encode_text(std::span<const Tensor> tokens) const;
    Tensor encode_image(const Tensor& feature) const;

    const Tensor& text_hidden_weight() const noexcept { return text_w1_; }
    const Tensor& text_output_weight() const noexcept { return text_w2_; }
    const Tensor& image_weight() const noexcept { return image_w_; }

    std::uint64_t content_hash() const;

private:
    FrozenEncoders() = default;

    std::uint64_t seed_ = 0;
    EncoderDims dims_;
    Tensor text_w1_, text_b1_, text_w2_, text_b2_, image_w_;
};

// Frozen class-description token embeddings h_i (one [m_i x d_e] block per
// class). Classification uses class names, retrieval uses captions and VQA
// uses question ++ answer blocks.
class ClassVocabulary {
public:
    static ClassVocabulary class_names(std::size_t classes, std::size_t tokens_per_class, std::size_t token_dim,
                                       std::uint64_t seed);
    static ClassVocabulary captions(std::size_t captions, std::size_t tokens_per_caption, std::size_t token_dim,
                                    std::uint64_t seed);
    static ClassVocabulary qa_pairs(std::size_t questions, std::size_t answers_per_question,
                                    std::size_t question_tokens, std::size_t answer_tokens, std::size_t token_dim,
                                    std::uint64_t seed);

    std::size_t size() const noexcept { return tokens_.size(); }
    std::size_t token_dim() const noexcept { return token_dim_; }
    const Tensor& tokens(std::size_t cls) const;
    std::uint64_t content_hash() const;

private:
    ClassVocabulary(std::vector<Tensor> tokens, std::size_t token_dim);
    void check_distinct() const;

    std::vector<Tensor> tokens_;
    std::size_t token_dim_ = 0;
};

// Declarative description of a vocabulary; `build` is a pure function of it.
struct VocabularySpec {
    enum class Kind { class_names, captions, qa_pairs };
    Kind kind = Kind::class_names;
    std::size_t classes = 8;               // class_names / captions
    std::size_t tokens_per_class = 2;      // class_names / captions
    std::size_t questions = 4;             // qa_pairs
    std::size_t answers_per_question = 2;  // qa_pairs
    std::size_t question_tokens = 2;       // qa_pairs
    std::size_t answer_tokens = 1;         // qa_pairs
    std::uint64_t seed = 1;

    std::size_t class_count() const;
    ClassVocabulary build(std::size_t token_dim) const;
    bool operator==(const VocabularySpec&) const = default;
};

std::string vocabulary_kind_name(VocabularySpec::Kind kind);
VocabularySpec::Kind parse_vocabulary_kind(const std::string& text);

}  // namespace cotprompt
