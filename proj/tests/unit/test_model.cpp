#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "cotprompt/errors.hpp"
#include "cotprompt/experiment.hpp"
#include "cotprompt/model.hpp"
#include "cotprompt/ops.hpp"
#include "cotprompt/random.hpp"
#include "cotprompt/sgd.hpp"

using namespace cotprompt;

namespace {

ModelConfig config_with(std::size_t n, LambdaSchedule lambda, PredictionMode mode, std::uint64_t seed = 1) {
    ModelConfig c;
    c.chain_length = n;
    c.lambda = lambda;
    c.prediction = mode;
    c.seed = seed;
    return c;
}

CotModel default_model(std::uint64_t seed = 1) {
    ModelConfig c;
    c.seed = seed;
    return CotModel::build(c, EncoderSpec{}, VocabularySpec{});
}

std::vector<std::size_t> all_classes(const CotModel& m) {
    std::vector<std::size_t> c(m.class_count());
    std::iota(c.begin(), c.end(), 0);
    return c;
}

Tensor feature(std::uint64_t seed) { return Rng(seed).gaussian({64}, 1.0); }

// Spread the prompts so chain steps differ.
void jitter_prompts(CotModel& m, std::uint64_t seed) {
    Rng rng(seed);
    for (std::size_t j = 0; j < m.prompts().chain_length(); ++j)
        for (auto& x : m.prompts().prompt(j).data()) x += rng.normal(0.0, 0.5);
}

}  // namespace

TEST(ClassLogits, OrthonormalEmbeddings) {
    for (std::size_t c : {2u, 3u, 5u}) {
        std::vector<Tensor> basis;
        for (std::size_t i = 0; i < c; ++i) {
            Tensor e({c});
            e[i] = 1.0;
            basis.push_back(e);
        }
        Graph g;
        std::vector<Var> es;
        for (const auto& e : basis) es.push_back(g.leaf(e));
        const auto p = softmax(g.value(class_logits(g, es, g.leaf(basis[0]), 1.0)).data());
        const double e1 = std::exp(1.0);
        EXPECT_NEAR(p[0], e1 / (e1 + static_cast<double>(c - 1)), 1e-15);
        // e / (e + 2) = 0.576117...
        if (c == 3) EXPECT_NEAR(p[0], 0.576117, 5e-7);
    }
}

TEST(Model, EqualEmbeddingsGiveEqualProbabilities) {
    const auto m = default_model();
    const std::size_t twice[] = {2, 2};
    const Tensor p = m.class_probabilities(feature(1), twice);
    EXPECT_EQ(p[0], 0.5);
    EXPECT_EQ(p[1], 0.5);
}

TEST(Model, UniformLogitsLoss) {
    const auto m = default_model();
    const std::size_t same[] = {3, 3, 3, 3};
    Graph g;
    EXPECT_NEAR(g.value(m.instance_loss(g, feature(2), 3, same))[0], std::log(4.0), 1e-15);
}

TEST(Model, NeedsTwoClasses) {
    const auto m = default_model();
    const std::size_t one[] = {0};
    EXPECT_THROW(m.class_probabilities(feature(1), one), ContractError);
    Graph g;
    const std::size_t two[] = {0, 1};
    EXPECT_THROW(m.instance_loss(g, feature(1), 5, two), IndexError);
}

TEST(Model, ProbabilitiesSumToOne) {
    const auto m = default_model();
    const auto classes = all_classes(m);
    for (std::uint64_t s = 0; s < 20; ++s) {
        const Tensor p = m.class_probabilities(feature(s), classes);
        double total = 0.0;
        for (double x : p.data()) total += x;
        EXPECT_NEAR(total, 1.0, 1e-9);
    }
}

TEST(Model, ReductionToSinglePromptBaseline) {
    const EncoderSpec enc;
    const VocabularySpec vocab;
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        const auto model =
            CotModel::build(config_with(1, LambdaSchedule::fixed(0.5), PredictionMode::final_step(), seed), enc, vocab);
        const auto base = SinglePromptBaseline::build(4, 0.01, seed, enc, vocab);
        const auto classes = all_classes(model);
        for (std::uint64_t i = 0; i < 20; ++i) {
            const Tensor f = feature(1000 * seed + i);
            EXPECT_TRUE(model.class_probabilities(f, classes).same_values(base.class_probabilities(f, classes)));
        }
    }
}

TEST(Model, ReductionChainAtOneStep) {
    const EncoderSpec enc;
    const VocabularySpec vocab;
    auto chained = config_with(1, LambdaSchedule::dynamic(), PredictionMode::final_step());
    auto unchained = chained;
    unchained.meta_chained = false;
    auto average = chained;
    average.prediction = PredictionMode::average();
    const auto a = CotModel::build(chained, enc, vocab), b = CotModel::build(unchained, enc, vocab),
               c = CotModel::build(average, enc, vocab);
    const auto classes = all_classes(a);
    for (std::uint64_t i = 0; i < 10; ++i) {
        const Tensor f = feature(i);
        const Tensor pa = a.class_probabilities(f, classes);
        EXPECT_TRUE(pa.same_values(b.class_probabilities(f, classes)));
        const Tensor pc = c.class_probabilities(f, classes);
        for (std::size_t k = 0; k < pa.size(); ++k) EXPECT_NEAR(pa[k], pc[k], 1e-15);
    }
}

TEST(Model, ImageScaleInvariance) {
    const auto m = default_model();
    const auto classes = all_classes(m);
    for (double k : {0.001, 3.0, 1e4}) {
        const Tensor f = feature(5);
        Tensor fk = f;
        for (auto& x : fk.data()) x *= k;
        const Tensor a = m.class_probabilities(f, classes), b = m.class_probabilities(fk, classes);
        for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], 1e-9);
    }
}

TEST(Model, LowerTemperatureSharpens) {
    for (std::uint64_t s = 0; s < 10; ++s) {
        ModelConfig hot, cold;
        hot.temperature = 0.05;
        cold.temperature = 0.01;
        const auto mh = CotModel::build(hot, EncoderSpec{}, VocabularySpec{});
        const auto mc = CotModel::build(cold, EncoderSpec{}, VocabularySpec{});
        const auto classes = all_classes(mh);
        const Tensor f = feature(100 + s);
        const Tensor ph = mh.class_probabilities(f, classes), pc = mc.class_probabilities(f, classes);
        EXPECT_GT(*std::max_element(pc.data().begin(), pc.data().end()),
                  *std::max_element(ph.data().begin(), ph.data().end()));
    }
}

TEST(Model, PermutationEquivariant) {
    const auto m = default_model(3);
    const std::vector<std::size_t> order{0, 1, 2, 3, 4, 5, 6, 7}, shuffled{5, 2, 7, 0, 3, 6, 1, 4};
    const Tensor f = feature(9);
    const Tensor a = m.class_probabilities(f, order), b = m.class_probabilities(f, shuffled);
    for (std::size_t i = 0; i < shuffled.size(); ++i) EXPECT_NEAR(b[i], a[shuffled[i]], 1e-12);
}

TEST(Model, GradientsReachEveryTrainableAndNothingFrozen) {
    auto m = default_model(2);
    jitter_prompts(m, 2);
    const auto classes = all_classes(m);
    Graph g;
    g.backward(m.instance_loss(g, feature(3), 1, classes));
    for (const auto& p : m.parameters()) {
        const auto grad = g.leaf_gradient(*p.tensor);
        ASSERT_FALSE(grad.empty()) << p.name;
    }
    for (std::size_t j = 0; j < 3; ++j)
        EXPECT_GT(l2_norm(g.leaf_gradient(m.prompts().prompt(j))), 1e-12) << "prompt " << j;
    EXPECT_TRUE(g.leaf_gradient(m.encoders().image_weight()).empty());
    EXPECT_TRUE(g.leaf_gradient(m.encoders().text_hidden_weight()).empty());
    EXPECT_TRUE(g.leaf_gradient(m.vocabulary().tokens(1)).empty());
    // lambda_1 is unused, so its output row of the controller gets nothing
    const auto gb = g.leaf_gradient(m.controller()->output().bias);
    EXPECT_EQ(gb[0], 0.0);
    EXPECT_NE(gb[1], 0.0);
    EXPECT_NE(gb[2], 0.0);
}

TEST(Model, FullModelGradientCheck) {
    ExperimentConfig config;
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        const auto report = check_model_gradients(config, seed, 1e-5, 1e-4);
        EXPECT_TRUE(report.passed()) << "seed " << seed << " " << report.max_relative_error();
    }
}

TEST(Model, FixedModeHasNoController) {
    const auto m =
        CotModel::build(config_with(3, LambdaSchedule::fixed(0.7), PredictionMode::final_step()), {}, {});
    EXPECT_EQ(m.controller(), nullptr);
    const auto d = default_model();
    // controller: 64*4 + 4 + 4*3 + 3
    EXPECT_EQ(d.parameter_count() - m.parameter_count(), 64u * 4 + 4 + 4 * 3 + 3);
}

TEST(Model, FrozenHashStableUnderTraining) {
    auto m = default_model(4);
    jitter_prompts(m, 4);
    const auto before = m.frozen_hash(), trainable_before = m.trainable_hash();
    const auto classes = all_classes(m);
    Sgd sgd(SgdConfig{});
    auto params = m.parameters();
    Rng rng(5);
    for (int step = 0; step < 100; ++step) {
        Graph g;
        g.backward(m.instance_loss(g, rng.gaussian({64}, 1.0), static_cast<std::size_t>(step) % 8, classes));
        g.accumulate_into(params);
        sgd.step(params);
    }
    EXPECT_EQ(m.frozen_hash(), before);
    EXPECT_NE(m.trainable_hash(), trainable_before);
}

TEST(Prediction, ArgmaxAndTies) {
    const std::size_t classes[] = {0, 1, 2};
    const auto p = make_prediction({0.2, 0.5, 0.3}, classes, 1);
    EXPECT_EQ(p.predicted_class, 1u);
    EXPECT_EQ(p.confidence, 0.5);
    EXPECT_TRUE(*p.correct);
    const std::size_t two[] = {4, 6};
    const auto tie = make_prediction({0.5, 0.5}, two, 6);
    EXPECT_EQ(tie.predicted_class, 4u);
    EXPECT_FALSE(*tie.correct);
    EXPECT_THROW(make_prediction({0.5, 0.5}, classes), DimensionError);
}

TEST(Prediction, ConfidenceIsMaxProbability) {
    const auto m = default_model(6);
    const auto classes = all_classes(m);
    for (std::uint64_t s = 0; s < 20; ++s) {
        const auto pred = m.predict(feature(s), classes, 0);
        EXPECT_EQ(pred.confidence, *std::max_element(pred.probabilities.begin(), pred.probabilities.end()));
        EXPECT_EQ(pred.probabilities[pred.predicted_class], pred.confidence);
    }
}

TEST(Checkpoint, RoundTripIsBitExact) {
    auto m = default_model(7);
    jitter_prompts(m, 7);
    const std::string text = checkpoint_to_string(m);
    const CotModel back = checkpoint_from_string(text);
    EXPECT_EQ(back.trainable_hash(), m.trainable_hash());
    EXPECT_EQ(back.frozen_hash(), m.frozen_hash());
    EXPECT_EQ(back.config(), m.config());
    EXPECT_EQ(checkpoint_to_string(back), text);
    const auto classes = all_classes(m);
    EXPECT_TRUE(back.class_probabilities(feature(1), classes).same_values(m.class_probabilities(feature(1), classes)));
}

TEST(Checkpoint, RoundTripEveryWiring) {
    for (const auto& config : {config_with(2, LambdaSchedule::fixed(0.7), PredictionMode::average(), 3),
                               config_with(4, LambdaSchedule::dynamic(), PredictionMode::concat(2), 4)}) {
        auto m = CotModel::build(config, EncoderSpec{}, VocabularySpec{});
        jitter_prompts(m, 8);
        const CotModel back = checkpoint_from_string(checkpoint_to_string(m));
        EXPECT_EQ(back.trainable_hash(), m.trainable_hash());
        EXPECT_EQ(back.config(), m.config());
    }
}

TEST(Checkpoint, RejectsBadInput) {
    const auto m = default_model();
    EXPECT_THROW(checkpoint_from_string("not json"), IoError);
    EXPECT_THROW(checkpoint_from_string("{\"format\": \"other\"}"), IoError);
    Json j = Json::parse(checkpoint_to_string(m));
    j["version"] = 99;
    EXPECT_THROW(checkpoint_from_string(j.dump()), IoError);
    j = Json::parse(checkpoint_to_string(m));
    j["frozen_hash"] = 12345;
    EXPECT_THROW(checkpoint_from_string(j.dump()), IoError);
    j = Json::parse(checkpoint_to_string(m));
    j["tensors"][0]["data"].erase(0);
    EXPECT_THROW(checkpoint_from_string(j.dump()), IoError);
    EXPECT_THROW(load_checkpoint("/nonexistent/checkpoint.json"), IoError);
}
