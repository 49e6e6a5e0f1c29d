#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "cotprompt/errors.hpp"
#include "cotprompt/gradcheck.hpp"
#include "cotprompt/graph.hpp"
#include "cotprompt/ops.hpp"
#include "cotprompt/random.hpp"
#include "cotprompt/sgd.hpp"

using namespace cotprompt;

namespace {

Tensor trainable(Tensor t) {
    t.set_requires_grad(true);
    return t;
}

}  // namespace

// ---- Tensor ----

TEST(Tensor, ShapeMustMatchData) {
    EXPECT_THROW(Tensor({2, 3}, std::vector<double>(5)), DimensionError);
    EXPECT_THROW(Tensor({0}), DimensionError);
    Tensor t({2, 3}, 1.5);
    EXPECT_EQ(t.size(), 6u);
    EXPECT_EQ(t.rows(), 2u);
    EXPECT_EQ(t.cols(), 3u);
}

TEST(Tensor, GradientHasDataShape) {
    Tensor t = trainable(Tensor({2, 2}));
    EXPECT_FALSE(t.has_grad());
    const double g[] = {1, 2, 3, 4};
    t.accumulate_grad(g);
    t.accumulate_grad(g);
    ASSERT_TRUE(t.has_grad());
    EXPECT_EQ(t.grad().size(), t.size());
    EXPECT_EQ(t.grad()[3], 8.0);
    const double bad[] = {1, 2};
    EXPECT_THROW(t.accumulate_grad(bad), DimensionError);
    t.zero_grad();
    EXPECT_TRUE(t.has_grad());
    EXPECT_EQ(t.grad()[0], 0.0);
    t.clear_grad();
    EXPECT_FALSE(t.has_grad());
}

// ---- linear ----

TEST(Linear, IdentityWeight) {
    Graph g;
    const Tensor x = Tensor::vector({1, 2}), w = Tensor::matrix(2, 2, {1, 0, 0, 1}), b = Tensor::vector({0, 0});
    const Tensor& y = g.value(linear(g, g.leaf(x), g.leaf(w), g.leaf(b)));
    EXPECT_EQ(y[0], 1.0);
    EXPECT_EQ(y[1], 2.0);
}

TEST(Linear, CancellingBias) {
    Graph g;
    const Tensor x = Tensor::vector({1, 1}), w = Tensor::matrix(1, 2, {2, 3}), b = Tensor::vector({-5});
    EXPECT_EQ(g.value(linear(g, g.leaf(x), g.leaf(w), g.leaf(b)))[0], 0.0);
}

TEST(Linear, OnesInputGivesRowSumsPlusBias) {
    Rng rng(3);
    const Tensor w = rng.gaussian({4, 3}, 1.0), b = rng.gaussian({4}, 1.0), x({3}, 1.0);
    Graph g;
    const Tensor& y = g.value(linear(g, g.leaf(x), g.leaf(w), g.leaf(b)));
    for (std::size_t k = 0; k < 4; ++k) {
        // independent oracle: accumulate in reverse order in long double
        long double s = b[k];
        for (std::size_t m = 3; m-- > 0;) s += w.at(k, m);
        EXPECT_NEAR(y[k], static_cast<double>(s), 1e-14);
    }
}

TEST(Linear, ShapeMismatchNamesShapes) {
    Graph g;
    const Tensor x({3}), w({2, 2}), b({2});
    try {
        linear(g, g.leaf(x), g.leaf(w), g.leaf(b));
        FAIL() << "expected DimensionError";
    } catch (const DimensionError& e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find("[2x2]"), std::string::npos) << msg;
        EXPECT_NE(msg.find("[3]"), std::string::npos) << msg;
    }
}

// ---- activations ----

TEST(Activation, Values) {
    EXPECT_EQ(sigmoid(0.0), 0.5);
    // 1 / (1 + e^-2), evaluated in long double
    EXPECT_NEAR(sigmoid(2.0), 0.8807970779778824, 1e-15);
    Graph g;
    const Tensor x = Tensor::vector({-3, 3});
    const Tensor& r = g.value(activation(g, g.leaf(x), Activation::relu));
    EXPECT_EQ(r[0], 0.0);
    EXPECT_EQ(r[1], 3.0);
}

TEST(Activation, SigmoidStrictlyInsideUnitInterval) {
    for (double x : {-1000.0, -40.0, -1.0, 0.0, 1.0, 40.0, 1000.0}) {
        EXPECT_GT(sigmoid(x), 0.0) << x;
        EXPECT_LT(sigmoid(x), 1.0) << x;
    }
}

// ---- cosine similarity ----

TEST(Cosine, Examples) {
    const double a[] = {1, 0}, b[] = {0, 1};
    EXPECT_EQ(cosine_similarity(a, a), 1.0);
    EXPECT_EQ(cosine_similarity(a, b), 0.0);
    const double c[] = {1, 2, 2}, d[] = {2, 1, 2};
    EXPECT_NEAR(cosine_similarity(c, d), 8.0 / 9.0, 1e-15);
}

TEST(Cosine, ZeroNormIsDegenerate) {
    const double z[] = {0, 0}, a[] = {1, 0};
    EXPECT_THROW(cosine_similarity(z, a), DegenerateInputError);
    Graph g;
    const Tensor tz({2}), ta = Tensor::vector({1, 0});
    EXPECT_THROW(cosine_similarity(g, g.leaf(tz), g.leaf(ta)), DegenerateInputError);
}

TEST(Cosine, SymmetricAndScaleInvariant) {
    std::mt19937_64 eng(5);
    std::normal_distribution<double> n;
    std::uniform_real_distribution<double> s(0.01, 100.0);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<double> a(7), b(7);
        for (auto& x : a) x = n(eng);
        for (auto& x : b) x = n(eng);
        const double ab = cosine_similarity(a, b);
        EXPECT_NEAR(ab, cosine_similarity(b, a), 1e-12);
        const double k = s(eng);
        auto ak = a;
        for (auto& x : ak) x *= k;
        EXPECT_NEAR(ab, cosine_similarity(ak, b), 1e-12);
        EXPECT_LE(std::abs(ab), 1.0);
    }
}

// ---- softmax cross-entropy ----

TEST(SoftmaxCrossEntropy, UniformCase) {
    Graph g;
    const Tensor z = Tensor::vector({0, 0});
    const auto ce = softmax_cross_entropy(g, g.leaf(z), 0);
    EXPECT_NEAR(g.value(ce.loss)[0], std::log(2.0), 1e-15);
    EXPECT_EQ(ce.probabilities[0], 0.5);
    EXPECT_EQ(ce.probabilities[1], 0.5);
}

TEST(SoftmaxCrossEntropy, TwoLogitFormula) {
    Graph g;
    const Tensor z = Tensor::vector({1, 0});
    const auto ce = softmax_cross_entropy(g, g.leaf(z), 0);
    const double e = std::exp(1.0);
    EXPECT_NEAR(ce.probabilities[0], e / (e + 1), 1e-15);
    EXPECT_NEAR(ce.probabilities[1], 1 / (e + 1), 1e-15);
    EXPECT_NEAR(ce.probabilities[0], 0.7311, 5e-5);
}

TEST(SoftmaxCrossEntropy, LargeLogitsStayFinite) {
    Graph g;
    const Tensor z = Tensor::vector({1000, 0});
    const auto ce = softmax_cross_entropy(g, g.leaf(z), 0);
    EXPECT_NEAR(g.value(ce.loss)[0], 0.0, 1e-300);
    EXPECT_TRUE(ce.probabilities.all_finite());
}

TEST(SoftmaxCrossEntropy, BadLabel) {
    Graph g;
    const Tensor z = Tensor::vector({1, 2, 3});
    EXPECT_THROW(softmax_cross_entropy(g, g.leaf(z), 3), IndexError);
}

TEST(SoftmaxCrossEntropy, ProbabilitiesSumToOne) {
    std::mt19937_64 eng(9);
    std::normal_distribution<double> n(0.0, 1.0);
    for (double magnitude : {1.0, 10.0, 1000.0}) {
        for (int trial = 0; trial < 100; ++trial) {
            std::vector<double> z(6);
            for (auto& x : z) x = magnitude * n(eng);
            const auto p = softmax(z);
            double s = 0.0;
            for (double x : p) {
                EXPECT_GE(x, 0.0);
                s += x;
            }
            EXPECT_NEAR(s, 1.0, 1e-9);
        }
    }
}

// ---- backward ----

TEST(Backward, Square) {
    Tensor x = trainable(Tensor::vector({3}));
    Graph g;
    const Var v = g.leaf(x);
    g.backward(mul(g, v, v));
    EXPECT_EQ(g.leaf_gradient(x)[0], 6.0);
}

TEST(Backward, SigmoidAtZero) {
    Tensor x = trainable(Tensor::vector({0}));
    Graph g;
    g.backward(activation(g, g.leaf(x), Activation::sigmoid));
    EXPECT_EQ(g.leaf_gradient(x)[0], 0.25);
}

TEST(Backward, NonScalarLossIsContractError) {
    Tensor x = trainable(Tensor::vector({1, 2}));
    Graph g;
    EXPECT_THROW(g.backward(g.leaf(x)), ContractError);
}

TEST(Backward, FrozenTensorsGetNoGradient) {
    Tensor w = trainable(Tensor::vector({1, 2}));
    const Tensor frozen = Tensor::vector({3, 4});
    Graph g;
    g.backward(sum(g, mul(g, g.leaf(w), g.leaf(frozen))));
    EXPECT_TRUE(g.leaf_gradient(frozen).empty() ||
                (g.leaf_gradient(frozen)[0] == 0.0 && g.leaf_gradient(frozen)[1] == 0.0));
    EXPECT_FALSE(g.needs_grad(g.leaf(frozen)));
    std::vector<NamedParameter> params{{"w", &w}};
    g.accumulate_into(params);
    EXPECT_EQ(w.grad()[0], 3.0);
    EXPECT_EQ(w.grad()[1], 4.0);
    EXPECT_FALSE(frozen.has_grad());
}

TEST(Backward, SharedLeafAccumulates) {
    // f(x) = x*x + 2x, both uses bound separately
    Tensor x = trainable(Tensor::vector({1.5}));
    Graph g;
    const Var a = g.leaf(x), b = g.leaf(x);
    g.backward(add(g, mul(g, a, a), scale(g, b, 2.0)));
    EXPECT_EQ(g.leaf_gradient(x)[0], 2 * 1.5 + 2.0);
}

TEST(Backward, Deterministic) {
    Rng rng(4);
    Tensor w = trainable(rng.gaussian({3, 5}, 1.0));
    const Tensor b = rng.gaussian({3}, 1.0), x = rng.gaussian({5}, 1.0);
    auto run = [&] {
        Graph g;
        const Var y = l2_normalize(g, activation(g, linear(g, g.leaf(x), g.leaf(w), g.leaf(b)), Activation::tanh));
        g.backward(sum(g, y));
        return std::make_pair(g.value(y), g.leaf_gradient(w));
    };
    const auto first = run(), second = run();
    EXPECT_TRUE(first.first.same_values(second.first));
    EXPECT_EQ(first.second, second.second);
}

TEST(Backward, NonFiniteForwardIsReported) {
    const Tensor big = Tensor::vector({1e308, 1e308});
    Graph g;
    const Var v = g.leaf(big);
    try {
        add(g, v, v);
        FAIL() << "expected NonFiniteError";
    } catch (const NonFiniteError& e) {
        EXPECT_NE(std::string(e.what()).find("add"), std::string::npos) << e.what();
    }
}

// ---- lerp / stack / rows ----

TEST(Ops, LerpRejectsOutOfRangeWeight) {
    const Tensor a = Tensor::vector({1, 0}), b = Tensor::vector({0, 1}), w = Tensor::vector({0.5, 1.5});
    Graph g;
    EXPECT_THROW(lerp(g, g.leaf(a), g.leaf(b), g.leaf(w), 1), ContractError);
    const Tensor& r = g.value(lerp(g, g.leaf(a), g.leaf(b), g.leaf(w), 0));
    EXPECT_EQ(r[0], 0.5);
    EXPECT_EQ(r[1], 0.5);
}

TEST(Ops, MeanRowsIsRowOrderInvariantBitwise) {
    Rng rng(12);
    const Tensor m = rng.gaussian({7, 5}, 1.0);
    std::vector<std::size_t> order{6, 2, 0, 5, 1, 4, 3};
    Tensor p({7, 5});
    for (std::size_t r = 0; r < 7; ++r)
        for (std::size_t c = 0; c < 5; ++c) p.at(r, c) = m.at(order[r], c);
    Graph g;
    const Tensor a = g.value(mean_rows(g, g.leaf(m)));
    const Tensor b = g.value(mean_rows(g, g.leaf(p)));
    EXPECT_TRUE(a.same_values(b));
}

// ---- grad_check ----

TEST(GradCheck, QuadraticToyLoss) {
    Rng rng(1);
    Tensor w = trainable(rng.gaussian({4}, 1.0));
    const Tensor a = rng.gaussian({4}, 1.0);
    const LossBuilder build = [&](Graph& g) {
        const Var d = add(g, g.leaf(w), g.leaf(a));
        return sum(g, mul(g, d, d));
    };
    std::vector<NamedParameter> params{{"w", &w}};
    const auto report = grad_check(build, params, 1e-5, 1e-8);
    EXPECT_LT(report.max_relative_error(), 1e-8);
    EXPECT_LT(report.max_coordinate_error(), 1e-8);
    EXPECT_TRUE(report.passed());
}

TEST(GradCheck, CorruptedGradientIsFlagged) {
    Rng rng(2);
    Tensor w = trainable(rng.gaussian({5}, 1.0));
    const LossBuilder build = [&](Graph& g) {
        const Var v = g.leaf(w);
        return sum(g, mul(g, v, v));
    };
    std::vector<NamedParameter> params{{"w", &w}};
    auto analytic = analytic_gradients(build, params);
    analytic[0][2] *= 1.01;
    std::vector<std::vector<double>> numeric{numeric_gradient(build, w, 1e-5)};
    const auto report = compare_gradients(params, analytic, numeric, 1e-5, 1e-4);
    EXPECT_FALSE(report.passed());
    ASSERT_EQ(report.parameters[0].flagged.size(), 1u);
    EXPECT_EQ(report.parameters[0].flagged[0], 2u);
    EXPECT_EQ(report.parameters[0].worst_coordinate, 2u);
}

TEST(GradCheck, StepOutsideRange) {
    Tensor w = trainable(Tensor::vector({1}));
    const LossBuilder build = [&](Graph& g) { return sum(g, g.leaf(w)); };
    std::vector<NamedParameter> params{{"w", &w}};
    EXPECT_THROW(grad_check(build, params, 1e-3, 1e-4), ContractError);
    EXPECT_THROW(grad_check(build, params, 1e-7, 1e-4), ContractError);
}

TEST(GradCheck, NumericGradientRestoresValues) {
    Rng rng(8);
    Tensor w = trainable(rng.gaussian({6}, 1.0));
    const Tensor before = w;
    const LossBuilder build = [&](Graph& g) {
        return sum(g, activation(g, g.leaf(w), Activation::tanh));
    };
    numeric_gradient(build, w, 1e-5);
    EXPECT_TRUE(w.same_values(before));
}

TEST(GradCheck, RelativeErrorFormula) {
    EXPECT_EQ(relative_error(0.0, 0.0), 0.0);
    EXPECT_NEAR(relative_error(1.0, 1.1), 0.1 / 1.1, 1e-15);
    EXPECT_DOUBLE_EQ(relative_error(1e-14, 0.0), 1e-14 / 1e-12);
}

// ---- SGD ----

TEST(Sgd, Arithmetic) {
    Tensor p = trainable(Tensor::vector({1}));
    const double g[] = {2};
    p.accumulate_grad(g);
    Sgd sgd({0.5, 1, 1, 0.0});
    std::vector<NamedParameter> params{{"p", &p}};
    sgd.step(params);
    EXPECT_EQ(p[0], 0.0);
    EXPECT_FALSE(p.has_grad());
}

TEST(Sgd, StepBeforeBackwardIsContractError) {
    Tensor p = trainable(Tensor::vector({1}));
    Sgd sgd(SgdConfig{});
    std::vector<NamedParameter> params{{"p", &p}};
    EXPECT_THROW(sgd.step(params), ContractError);
}

TEST(Sgd, FrozenTensorUnchanged) {
    Tensor p = trainable(Tensor::vector({1, 2}));
    Tensor frozen = Tensor::vector({5, 6});
    Graph g;
    g.backward(sum(g, mul(g, g.leaf(p), g.leaf(frozen))));
    std::vector<NamedParameter> params{{"p", &p}, {"frozen", &frozen}};
    g.accumulate_into(params);
    Sgd sgd({0.1, 1, 1, 0.0});
    sgd.step(params);
    EXPECT_EQ(frozen[0], 5.0);
    EXPECT_EQ(frozen[1], 6.0);
    EXPECT_DOUBLE_EQ(p[0], 1 - 0.1 * 5);
}

TEST(Sgd, ConvexQuadraticDecreasesMonotonically) {
    Tensor p = trainable(Tensor::vector({3, -2}));
    auto loss_of = [&] { return p[0] * p[0] + 4 * p[1] * p[1]; };
    Sgd sgd({0.05, 1, 1, 0.0});
    std::vector<NamedParameter> params{{"p", &p}};
    const Tensor weights = Tensor::vector({1, 4});
    double prev = loss_of();
    for (int i = 0; i < 2; ++i) {
        Graph g;
        const Var v = g.leaf(p);
        g.backward(sum(g, mul(g, mul(g, v, v), g.constant(weights))));
        g.accumulate_into(params);
        sgd.step(params);
        const double now = loss_of();
        EXPECT_LT(now, prev);
        prev = now;
    }
}

TEST(Sgd, ConfigValidation) {
    EXPECT_THROW((SgdConfig{-1.0, 1, 1, 0.0}.validate()), ConfigError);
    EXPECT_THROW((SgdConfig{0.1, 0, 1, 0.0}.validate()), ConfigError);
    EXPECT_THROW((SgdConfig{0.1, 1, 0, 0.0}.validate()), ConfigError);
    EXPECT_NO_THROW((SgdConfig{0.0, 1, 1, 0.0}.validate()));
}
