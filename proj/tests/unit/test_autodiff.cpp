// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "eccl/adam.hpp"
#include "eccl/graph.hpp"
#include "eccl/network.hpp"
#include "grad_cases.hpp"
#include "oracles.hpp"

using namespace eccl;

namespace {

Tensor conv_once(const Tensor& input, const Tensor& kernel, const Tensor& bias) {
    Graph g(false);
    return g.value(g.conv2d(g.constant(input), g.constant(kernel), g.constant(bias)));
}

}  // namespace

TEST(Conv2d, ZeroInputGivesZeroOutput) {
    Tensor k({2, 1, 3, 3}, 0.7f);
    const Tensor out = conv_once(Tensor({1, 3, 3}), k, Tensor({2}));
    EXPECT_EQ(out.shape(), (Shape{2, 3, 3}));
    for (float v : out.data()) EXPECT_EQ(v, 0.0f);
}

TEST(Conv2d, UnitKernelIsIdentity) {
    Tensor in({1, 3, 3}, {1, 2, 3, 4, 5, 6, 7, 8, 9});
    const Tensor out = conv_once(in, Tensor({1, 1, 1, 1}, 1.0f), Tensor({1}));
    EXPECT_EQ(out, in);
}

TEST(Conv2d, AllOnesKernelCenterAndCorner) {
    Tensor in({1, 3, 3}, {1, 2, 3, 4, 5, 6, 7, 8, 9});
    const Tensor out = conv_once(in, Tensor({1, 1, 3, 3}, 1.0f), Tensor({1}));
    EXPECT_EQ(out[4], 45.0f);
    EXPECT_EQ(out[0], 12.0f);
}

TEST(Conv2d, MatchesNestedLoopReference) {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        const int c = 1 + trial % 3, f = 1 + trial % 4, h = 3 + trial % 4, w = 4 + trial % 3, k = trial % 2 ? 3 : 5;
        Tensor64 in = oracle::random_tensor({c, h, w}, rng);
        Tensor64 ker = oracle::random_tensor({f, c, k, k}, rng);
        Tensor64 b = oracle::random_tensor({f}, rng);
        Graph64 g(false);
        const Tensor64 got = g.value(g.conv2d(g.constant(in), g.constant(ker), g.constant(b)));
        const auto want = oracle::conv2d(in.storage(), c, h, w, ker.storage(), f, k, b.storage());
        ASSERT_EQ(got.size(), want.size());
        for (std::size_t i = 0; i < want.size(); ++i) EXPECT_NEAR(got[i], want[i], 1e-12);
    }
}

TEST(Conv2d, RejectsMismatchedChannelsAndEvenKernels) {
    Graph g;
    auto x = g.constant(Tensor({2, 4, 4}));
    EXPECT_THROW(g.conv2d(x, g.constant(Tensor({1, 3, 3, 3})), g.constant(Tensor({1}))), std::invalid_argument);
    EXPECT_THROW(g.conv2d(x, g.constant(Tensor({1, 2, 2, 2})), g.constant(Tensor({1}))), std::invalid_argument);
    EXPECT_THROW(g.conv2d(x, g.constant(Tensor({1, 2, 3, 3})), g.constant(Tensor({2}))), std::invalid_argument);
}

TEST(ResidualBlock, ZeroWeightsGiveReluOfInput) {
    std::mt19937_64 rng(3);
    Tensor64 x = oracle::random_tensor({2, 4, 4}, rng);
    Graph64 g(false);
    Tensor64 zk({2, 2, 3, 3}), zb({2});
    auto out = residual_block(g, g.constant(x), g.constant(zk), g.constant(zb), g.constant(zk), g.constant(zb));
    const Tensor64& y = g.value(out);
    for (std::size_t i = 0; i < x.size(); ++i) EXPECT_EQ(y[i], std::max(0.0, x[i]));
}

TEST(ResidualBlock, ZeroInputZeroBiasGivesZero) {
    std::mt19937_64 rng(4);
    Graph g(false);
    Tensor k1({3, 3, 3, 3}, 0.3f), k2({3, 3, 3, 3}, -0.2f);
    auto out = residual_block(g, g.constant(Tensor({3, 5, 5})), g.constant(k1), g.constant(Tensor({3})), g.constant(k2),
                              g.constant(Tensor({3})));
    for (float v : g.value(out).data()) EXPECT_EQ(v, 0.0f);
}

TEST(ResidualBlock, MatchesUnfusedReference) {
    std::mt19937_64 rng(5);
    Tensor64 x = oracle::random_tensor({2, 4, 4}, rng);
    Tensor64 k1 = oracle::random_tensor({2, 2, 3, 3}, rng), b1 = oracle::random_tensor({2}, rng);
    Tensor64 k2 = oracle::random_tensor({2, 2, 3, 3}, rng), b2 = oracle::random_tensor({2}, rng);
    Graph64 g(false);
    const Tensor64 got =
        g.value(residual_block(g, g.constant(x), g.constant(k1), g.constant(b1), g.constant(k2), g.constant(b2)));

    auto h = oracle::conv2d(x.storage(), 2, 4, 4, k1.storage(), 2, 3, b1.storage());
    for (double& v : h) v = std::max(0.0, v);
    auto h2 = oracle::conv2d(h, 2, 4, 4, k2.storage(), 2, 3, b2.storage());
    for (std::size_t i = 0; i < h2.size(); ++i) EXPECT_NEAR(got[i], std::max(0.0, h2[i] + x[i]), 1e-12);
}

TEST(Dense, IdentityWeights) {
    Graph g(false);
    Tensor w({3, 3}, {1, 0, 0, 0, 1, 0, 0, 0, 1});
    Tensor x({3}, {4, -5, 6});
    EXPECT_EQ(g.value(g.dense(g.constant(x), g.constant(w), g.constant(Tensor({3})))), x);
}

TEST(Dense, HandArithmetic) {
    Graph g(false);
    auto y = g.dense(g.constant(Tensor({2}, {3, 2})), g.constant(Tensor({2, 2}, {1, 1, 1, -1})), g.constant(Tensor({2})));
    EXPECT_EQ(g.value(y), Tensor({2}, {5, 1}));
}

TEST(Dense, ZeroWeightsGiveBias) {
    Graph g(false);
    Tensor b({2}, {0.5f, -1.5f});
    auto y = g.dense(g.constant(Tensor({3}, {1, 2, 3})), g.constant(Tensor({2, 3})), g.constant(b));
    EXPECT_EQ(g.value(y), b);
}

TEST(Dense, ShapeMismatchThrows) {
    Graph g;
    EXPECT_THROW(g.dense(g.constant(Tensor({3})), g.constant(Tensor({2, 2})), g.constant(Tensor({2}))),
                 std::invalid_argument);
}

TEST(Backward, SumGivesOnes) {
    Graph g;
    auto x = g.variable(Tensor({2, 3}, 1.5f));
    g.backward(g.sum(x));
    const Tensor gx = g.grad(x);
    for (float v : gx.data()) EXPECT_EQ(v, 1.0f);
}

TEST(Backward, DotGradientIsOtherFactor) {
    Graph g;
    Tensor xv({4}, {1, -2, 3, 0.5f});
    auto w = g.variable(Tensor({4}, {0.1f, 0.2f, 0.3f, 0.4f}));
    g.backward(g.sum(g.mul(w, g.constant(xv))));
    EXPECT_EQ(g.grad(w), xv);
}

TEST(Backward, NonScalarLossThrows) {
    Graph g;
    auto x = g.variable(Tensor({2}, 1.0f));
    EXPECT_THROW(g.backward(g.relu(x)), std::invalid_argument);
}

TEST(Backward, EveryOpMatchesFiniteDifferences) {
    std::mt19937_64 rng(2024);
    for (int trial = 0; trial < 100; ++trial) {
        for (const auto& c : oracle::gradient_cases(rng)) {
            const double err = oracle::max_grad_rel_error(c.fn, c.inputs);
            ASSERT_LT(err, 1e-4) << c.op << " trial " << trial;
        }
    }
}

TEST(Forward, BitIdenticalAcrossRuns) {
    DuelingNetConfig cfg;
    cfg.trunk.height = cfg.trunk.width = 6;
    cfg.trunk.residual_blocks = 2;
    cfg.trunk.conv_filters = 8;
    cfg.num_actions = 108;
    const auto params = init_dueling_params(cfg, 9);
    std::mt19937_64 rng(1);
    Tensor x({3, 9, 6, 6});
    for (float& v : x.data()) v = std::uniform_real_distribution<float>(0, 1)(rng);
    Graph a(false), b(false);
    const Tensor qa = a.value(dueling_forward(a, cfg, params, a.constant(x)));
    const Tensor qb = b.value(dueling_forward(b, cfg, params, b.constant(x)));
    EXPECT_EQ(qa, qb);
}

TEST(Adam, ZeroGradientLeavesParamsAndCountsStep) {
    NetworkParams p;
    p.add("w", Tensor({3}, {1, 2, 3}));
    const Tensor before = p.value("w");
    for (int i = 0; i < 5; ++i) {
        ASSERT_TRUE(adam_step(p, Gradients<float>{Tensor({3})}, AdamConfig{0.1}).applied);
    }
    EXPECT_EQ(p.value("w"), before);
    EXPECT_EQ(p.entry(0).step, 5);
}

TEST(Adam, FirstStepMovesByLearningRate) {
    NetworkParams64 p;
    p.add("w", Tensor64({1}, 0.0));
    adam_step(p, Gradients<double>{Tensor64({1}, 1.0)}, AdamConfig{0.1});
    // m_hat = 1, v_hat = 1 -> -lr * 1 / (1 + 1e-8)
    EXPECT_NEAR(p.value("w")[0], -0.1 / (1.0 + 1e-8), 1e-12);
}

TEST(Adam, SymmetricParamsStaySymmetric) {
    NetworkParams p;
    p.add("a", Tensor({2}, {0.5f, -0.5f}));
    p.add("b", Tensor({2}, {0.5f, -0.5f}));
    std::mt19937_64 rng(8);
    for (int i = 0; i < 10; ++i) {
        Tensor g({2});
        for (float& v : g.data()) v = std::normal_distribution<float>()(rng);
        adam_step(p, Gradients<float>{g, g}, AdamConfig{0.01});
    }
    EXPECT_EQ(p.value("a"), p.value("b"));
}

TEST(Adam, NonFiniteGradientRejected) {
    NetworkParams p;
    p.add("w", Tensor({2}, {1, 2}));
    const auto before = p;
    Tensor bad({2});
    bad[1] = std::numeric_limits<float>::quiet_NaN();
    const auto report = adam_step(p, Gradients<float>{bad}, AdamConfig{});
    EXPECT_FALSE(report.applied);
    EXPECT_FALSE(report.rejected_reason.empty());
    EXPECT_EQ(p, before);
}

TEST(Huber, AnalyticValues) {
    EXPECT_EQ(huber_value(0.0, 0.0), 0.0);
    EXPECT_DOUBLE_EQ(huber_value(0.5, 0.0, 1.0), 0.125);
    EXPECT_DOUBLE_EQ(huber_value(3.0, 0.0, 1.0), 2.5);
    EXPECT_DOUBLE_EQ(huber_value(-3.0, 0.0, 1.0), 2.5);
}

TEST(Huber, GraphOpMatchesScalarFunction) {
    Graph64 g;
    auto p = g.variable(Tensor64({3}, {0.0, 0.5, 3.0}));
    auto h = g.huber(p, {0.0, 0.0, 0.0}, 1.0);
    EXPECT_EQ(g.value(h), Tensor64({3}, {0.0, 0.125, 2.5}));
}
