#include "cotprompt/encoders.hpp"

#include <cmath>
#include <string>

#include "cotprompt/errors.hpp"
#include "cotprompt/ops.hpp"
#include "cotprompt/random.hpp"

namespace cotprompt {

void EncoderDims::validate() const {
    if (token_dim < 2 || feature_dim < 2 || joint_dim < 2)
        throw ConfigError("encoder dims must all be >= 2 (token_dim=" + std::to_string(token_dim) +
                          ", feature_dim=" + std::to_string(feature_dim) + ", joint_dim=" +
                          std::to_string(joint_dim) + ")");
    if (joint_dim % 16 != 0)
        throw ConfigError("joint_dim=" + std::to_string(joint_dim) +
                          " must be divisible by 16: bottleneck layers use width joint_dim/16");
}

FrozenEncoders FrozenEncoders::build(std::uint64_t seed, EncoderDims dims) {
    dims.validate();
    FrozenEncoders e;
    e.seed_ = seed;
    e.dims_ = dims;
    const std::size_t h = dims.bottleneck();
    Rng rng(derive_seed(seed, "encoders"));
    auto draw = [&](Shape s, std::size_t fan_in) { return rng.gaussian(std::move(s), 1.0 / std::sqrt(double(fan_in))); };
    e.text_w1_ = draw({h, dims.token_dim}, dims.token_dim);
    e.text_b1_ = draw({h}, dims.token_dim);
    e.text_w2_ = draw({dims.joint_dim, h}, h);
    e.text_b2_ = draw({dims.joint_dim}, h);
    e.image_w_ = draw({dims.joint_dim, dims.feature_dim}, dims.feature_dim);
    return e;
}

Var FrozenEncoders::encode_text(Graph& g, Var tokens) const {
    const Tensor& t = g.value(tokens);
    if (t.rank() != 2 || t.cols() != dims_.token_dim)
        throw DimensionError("encode_text: tokens " + shape_string(t.shape()) + " are not [n x " +
                             std::to_string(dims_.token_dim) + "]");
    Var pooled = mean_rows(g, tokens);
    Var hidden = activation(g, linear(g, pooled, g.leaf(text_w1_), g.leaf(text_b1_)), Activation::tanh);
    return l2_normalize(g, linear(g, hidden, g.leaf(text_w2_), g.leaf(text_b2_)));
}

Tensor FrozenEncoders::encode_text(std::span<const Tensor> tokens) const {
    if (tokens.empty()) throw ContractError("encode_text: empty token sequence");
    std::vector<double> data;
    for (const auto& tok : tokens) {
        if (tok.rank() != 1 || tok.size() != dims_.token_dim)
            throw DimensionError("encode_text: token " + shape_string(tok.shape()) + " is not [" +
                                 std::to_string(dims_.token_dim) + "]");
        data.insert(data.end(), tok.data().begin(), tok.data().end());
    }
    Graph g;
    Var m = g.constant(Tensor::matrix(tokens.size(), dims_.token_dim, std::move(data)));
    return g.value(encode_text(g, m));
}

Tensor FrozenEncoders::encode_image(const Tensor& feature) const {
    if (feature.rank() != 1 || feature.size() != dims_.feature_dim)
        throw DimensionError("encode_image: feature " + shape_string(feature.shape()) + " is not [" +
                             std::to_string(dims_.feature_dim) + "]");
    if (!feature.all_finite()) throw NonFiniteError("encode_image: non-finite image feature");
    const std::size_t d = dims_.joint_dim, dv = dims_.feature_dim;
    Tensor y({d});
    for (std::size_t k = 0; k < d; ++k) {
        double s = 0.0;
        for (std::size_t m = 0; m < dv; ++m) s += image_w_.at(k, m) * feature[m];
        y[k] = s;
    }
    const double n = l2_norm(y.data());
    if (!(n > 0.0)) throw DegenerateInputError("encode_image: feature maps to the zero vector");
    for (auto& x : y.data()) x /= n;
    return y;
}

std::uint64_t FrozenEncoders::content_hash() const {
    ContentHash h;
    h.u64(seed_).u64(dims_.token_dim).u64(dims_.feature_dim).u64(dims_.joint_dim);
    h.tensor(text_w1_).tensor(text_b1_).tensor(text_w2_).tensor(text_b2_).tensor(image_w_);
    return h.value();
}

ClassVocabulary::ClassVocabulary(std::vector<Tensor> tokens, std::size_t token_dim)
    : tokens_(std::move(tokens)), token_dim_(token_dim) {
    check_distinct();
}

ClassVocabulary ClassVocabulary::class_names(std::size_t classes, std::size_t tokens_per_class,
                                             std::size_t token_dim, std::uint64_t seed) {
    if (classes < 2 || tokens_per_class < 1 || token_dim < 1)
        throw ConfigError("class vocabulary needs >= 2 classes and >= 1 token per class");
    std::vector<Tensor> out;
    for (std::size_t c = 0; c < classes; ++c) {
        Rng rng(derive_seed(seed, "class_name", c));
        out.push_back(rng.gaussian({tokens_per_class, token_dim}, 1.0));
    }
    return ClassVocabulary(std::move(out), token_dim);
}

ClassVocabulary ClassVocabulary::captions(std::size_t captions, std::size_t tokens_per_caption,
                                          std::size_t token_dim, std::uint64_t seed) {
    if (captions < 2 || tokens_per_caption < 1 || token_dim < 1)
        throw ConfigError("caption vocabulary needs >= 2 captions and >= 1 token per caption");
    std::vector<Tensor> out;
    for (std::size_t c = 0; c < captions; ++c) {
        Rng rng(derive_seed(seed, "caption", c));
        out.push_back(rng.gaussian({tokens_per_caption, token_dim}, 1.0));
    }
    return ClassVocabulary(std::move(out), token_dim);
}

ClassVocabulary ClassVocabulary::qa_pairs(std::size_t questions, std::size_t answers_per_question,
                                          std::size_t question_tokens, std::size_t answer_tokens,
                                          std::size_t token_dim, std::uint64_t seed) {
    if (questions < 1 || answers_per_question < 1 || questions * answers_per_question < 2 ||
        question_tokens < 1 || answer_tokens < 1)
        throw ConfigError("qa vocabulary needs >= 2 question-answer pairs and >= 1 token per part");
    std::vector<Tensor> out;
    for (std::size_t q = 0; q < questions; ++q) {
        Rng qrng(derive_seed(seed, "question", q));
        const Tensor question = qrng.gaussian({question_tokens, token_dim}, 1.0);
        for (std::size_t a = 0; a < answers_per_question; ++a) {
            Rng arng(derive_seed(seed, "answer", q * answers_per_question + a));
            const Tensor answer = arng.gaussian({answer_tokens, token_dim}, 1.0);
            std::vector<double> data(question.data().begin(), question.data().end());
            data.insert(data.end(), answer.data().begin(), answer.data().end());
            out.push_back(Tensor::matrix(question_tokens + answer_tokens, token_dim, std::move(data)));
        }
    }
    return ClassVocabulary(std::move(out), token_dim);
}

const Tensor& ClassVocabulary::tokens(std::size_t cls) const {
    if (cls >= tokens_.size())
        throw IndexError("class " + std::to_string(cls) + " out of range for " + std::to_string(tokens_.size()) +
                         " classes");
    return tokens_[cls];
}

void ClassVocabulary::check_distinct() const {
    for (std::size_t i = 0; i < tokens_.size(); ++i)
        for (std::size_t j = i + 1; j < tokens_.size(); ++j)
            if (tokens_[i].same_values(tokens_[j]))
                throw ConfigError("class vocabulary seed collision: classes " + std::to_string(i) + " and " +
                                  std::to_string(j) + " share a token set");
}

std::uint64_t ClassVocabulary::content_hash() const {
    ContentHash h;
    h.u64(tokens_.size()).u64(token_dim_);
    for (const auto& t : tokens_) h.tensor(t);
    return h.value();
}

std::size_t VocabularySpec::class_count() const {
    return kind == Kind::qa_pairs ? questions * answers_per_question : classes;
}

ClassVocabulary VocabularySpec::build(std::size_t token_dim) const {
    switch (kind) {
        case Kind::class_names: return ClassVocabulary::class_names(classes, tokens_per_class, token_dim, seed);
        case Kind::captions: return ClassVocabulary::captions(classes, tokens_per_class, token_dim, seed);
        case Kind::qa_pairs:
            return ClassVocabulary::qa_pairs(questions, answers_per_question, question_tokens, answer_tokens,
                                             token_dim, seed);
    }
    throw ConfigError("unknown vocabulary kind");
}

std::string vocabulary_kind_name(VocabularySpec::Kind kind) {
    switch (kind) {
        case VocabularySpec::Kind::class_names: return "class_names";
        case VocabularySpec::Kind::captions: return "captions";
        case VocabularySpec::Kind::qa_pairs: return "qa_pairs";
    }
    return "class_names";
}

VocabularySpec::Kind parse_vocabulary_kind(const std::string& text) {
    if (text == "class_names") return VocabularySpec::Kind::class_names;
    if (text == "captions") return VocabularySpec::Kind::captions;
    if (text == "qa_pairs") return VocabularySpec::Kind::qa_pairs;
    throw ConfigError("unknown vocabulary kind '" + text + "' (expected class_names, captions or qa_pairs)");
}

}  // namespace cotprompt
