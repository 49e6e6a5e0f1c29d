#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "cotprompt/encoders.hpp"
#include "cotprompt/errors.hpp"
#include "cotprompt/gradcheck.hpp"
#include "cotprompt/ops.hpp"
#include "cotprompt/random.hpp"

using namespace cotprompt;

namespace {

const EncoderDims kDims{16, 64, 64};

std::vector<Tensor> random_tokens(std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<Tensor> out;
    for (std::size_t i = 0; i < n; ++i) out.push_back(rng.gaussian({16}, 1.0));
    return out;
}

}  // namespace

TEST(Encoders, DimsValidation) {
    EXPECT_THROW((EncoderDims{16, 64, 60}.validate()), ConfigError);
    EXPECT_THROW((EncoderDims{1, 64, 64}.validate()), ConfigError);
    EXPECT_THROW((EncoderDims{16, 1, 64}.validate()), ConfigError);
    EXPECT_NO_THROW(kDims.validate());
    EXPECT_THROW(FrozenEncoders::build(1, EncoderDims{16, 64, 40}), ConfigError);
}

TEST(Encoders, LayerShapes) {
    const auto enc = FrozenEncoders::build(1, kDims);
    EXPECT_EQ(enc.text_hidden_weight().shape(), (Shape{4, 16}));
    EXPECT_EQ(enc.text_output_weight().shape(), (Shape{64, 4}));
    EXPECT_EQ(enc.image_weight().shape(), (Shape{64, 64}));
    EXPECT_FALSE(enc.image_weight().requires_grad());
    EXPECT_FALSE(enc.text_hidden_weight().requires_grad());
}

TEST(Encoders, SeedDeterminesHash) {
    EXPECT_EQ(FrozenEncoders::build(1, kDims).content_hash(), FrozenEncoders::build(1, kDims).content_hash());
    EXPECT_NE(FrozenEncoders::build(1, kDims).content_hash(), FrozenEncoders::build(2, kDims).content_hash());
}

TEST(Encoders, WeightScaleMatchesFanIn) {
    const auto enc = FrozenEncoders::build(3, kDims);
    const auto& w = enc.image_weight();
    double sq = 0.0;
    for (double x : w.data()) sq += x * x;
    // variance 1/64 over 4096 draws; sample variance within 10%
    EXPECT_NEAR(sq / w.size(), 1.0 / 64.0, 0.1 / 64.0);
}

TEST(EncodeText, UnitNorm) {
    const auto enc = FrozenEncoders::build(5, kDims);
    for (std::uint64_t s = 0; s < 20; ++s) {
        const auto out = enc.encode_text(random_tokens(1 + s % 6, s));
        EXPECT_NEAR(l2_norm(out.data()), 1.0, 1e-9);
        EXPECT_EQ(out.size(), 64u);
    }
}

TEST(EncodeText, EmptySequence) {
    const auto enc = FrozenEncoders::build(5, kDims);
    EXPECT_THROW(enc.encode_text(std::span<const Tensor>{}), ContractError);
}

TEST(EncodeText, TokenOrderInvariantExactly) {
    const auto enc = FrozenEncoders::build(5, kDims);
    auto tokens = random_tokens(6, 17);
    const Tensor a = enc.encode_text(tokens);
    std::reverse(tokens.begin(), tokens.end());
    std::rotate(tokens.begin(), tokens.begin() + 2, tokens.end());
    EXPECT_TRUE(a.same_values(enc.encode_text(tokens)));
}

TEST(EncodeText, TokenGradientMatchesCentralDifferences) {
    const auto enc = FrozenEncoders::build(5, kDims);
    Rng rng(21);
    Tensor tokens = rng.gaussian({5, 16}, 1.0);
    tokens.set_requires_grad(true);
    const Tensor probe = rng.gaussian({64}, 1.0);
    const LossBuilder build = [&](Graph& g) {
        return sum(g, mul(g, enc.encode_text(g, g.leaf(tokens)), g.constant(probe)));
    };
    std::vector<NamedParameter> params{{"tokens", &tokens}};
    const auto report = grad_check(build, params, 1e-5, 1e-6);
    EXPECT_TRUE(report.passed()) << report.max_relative_error();
}

TEST(EncodeText, NoGradientIntoEncoderWeights) {
    const auto enc = FrozenEncoders::build(5, kDims);
    Tensor tokens = Rng(2).gaussian({3, 16}, 1.0);
    tokens.set_requires_grad(true);
    Graph g;
    g.backward(sum(g, enc.encode_text(g, g.leaf(tokens))));
    EXPECT_TRUE(g.leaf_gradient(enc.text_hidden_weight()).empty());
    EXPECT_TRUE(g.leaf_gradient(enc.text_output_weight()).empty());
    EXPECT_FALSE(g.leaf_gradient(tokens).empty());
}

TEST(EncodeImage, UnitNormAndHomogeneous) {
    const auto enc = FrozenEncoders::build(5, kDims);
    Rng rng(4);
    for (int i = 0; i < 20; ++i) {
        const Tensor f = rng.gaussian({64}, 1.0);
        Tensor f3 = f;
        for (auto& x : f3.data()) x *= 3.0;
        const Tensor a = enc.encode_image(f), b = enc.encode_image(f3);
        EXPECT_NEAR(l2_norm(a.data()), 1.0, 1e-9);
        for (std::size_t k = 0; k < a.size(); ++k) EXPECT_NEAR(a[k], b[k], 1e-9);
    }
}

TEST(EncodeImage, Deterministic) {
    const Tensor f = Rng(9).gaussian({64}, 1.0);
    EXPECT_TRUE(FrozenEncoders::build(5, kDims).encode_image(f).same_values(
        FrozenEncoders::build(5, kDims).encode_image(f)));
}

TEST(EncodeImage, Errors) {
    const auto enc = FrozenEncoders::build(5, kDims);
    EXPECT_THROW(enc.encode_image(Tensor({64})), DegenerateInputError);
    EXPECT_THROW(enc.encode_image(Tensor({32}, 1.0)), DimensionError);
    Tensor bad({64}, 1.0);
    bad[3] = std::nan("");
    EXPECT_THROW(enc.encode_image(bad), NonFiniteError);
}

TEST(Vocabulary, ClassNames) {
    const auto v = ClassVocabulary::class_names(8, 2, 16, 1);
    EXPECT_EQ(v.size(), 8u);
    EXPECT_EQ(v.tokens(3).shape(), (Shape{2, 16}));
    EXPECT_THROW(v.tokens(8), IndexError);
    EXPECT_FALSE(v.tokens(0).same_values(v.tokens(1)));
    EXPECT_EQ(v.content_hash(), ClassVocabulary::class_names(8, 2, 16, 1).content_hash());
    EXPECT_NE(v.content_hash(), ClassVocabulary::class_names(8, 2, 16, 2).content_hash());
}

TEST(Vocabulary, QaPairsConcatenateQuestionAndAnswer) {
    const auto v = ClassVocabulary::qa_pairs(3, 2, 2, 1, 16, 4);
    EXPECT_EQ(v.size(), 6u);
    EXPECT_EQ(v.tokens(0).shape(), (Shape{3, 16}));
    // the two answers of one question share the question tokens
    for (std::size_t c = 0; c < 32; ++c) EXPECT_EQ(v.tokens(0)[c], v.tokens(1)[c]);
    EXPECT_NE(v.tokens(0)[32], v.tokens(1)[32]);
    EXPECT_NE(v.tokens(0)[0], v.tokens(2)[0]);
}

TEST(Vocabulary, SpecBuilds) {
    VocabularySpec spec;
    spec.kind = VocabularySpec::Kind::captions;
    spec.classes = 5;
    EXPECT_EQ(spec.class_count(), 5u);
    EXPECT_EQ(spec.build(16).size(), 5u);
    spec.kind = VocabularySpec::Kind::qa_pairs;
    EXPECT_EQ(spec.class_count(), 8u);
    EXPECT_EQ(parse_vocabulary_kind(vocabulary_kind_name(spec.kind)), spec.kind);
    EXPECT_THROW(parse_vocabulary_kind("words"), ConfigError);
}
