// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <numeric>

#include "eccl/agent.hpp"
#include "eccl/checkpoint.hpp"
#include "eccl/codec.hpp"

using namespace eccl;

namespace {

DuelingNetConfig toy_net(int actions) {
    DuelingNetConfig n;
    n.trunk.height = n.trunk.width = 6;
    n.trunk.residual_blocks = 0;
    n.trunk.conv_filters = 2;
    n.num_actions = actions;
    n.value_hidden = 4;
    n.advantage_hidden = 4;
    return n;
}

void zero(NetworkParams& p) {
    for (std::size_t i = 0; i < p.size(); ++i) p.entry(i).value.fill(0.0f);
}

// Heads reduced to biases so Q(s, .) == q for every state.
void set_constant_q(NetworkParams& p, const std::vector<float>& q) {
    zero(p);
    const float mean = std::accumulate(q.begin(), q.end(), 0.0f) / static_cast<float>(q.size());
    p.value("value.fc2.b")[0] = mean;
    for (std::size_t i = 0; i < q.size(); ++i) p.value("advantage.fc2.b")[i] = q[i] - mean;
}

Tensor some_state(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    Tensor t({9, 6, 6});
    for (float& v : t.data()) v = std::uniform_real_distribution<float>(0, 1)(rng);
    return t;
}

AgentConfig small_agent() {
    AgentConfig c;
    c.residual_blocks = 1;
    c.conv_filters = 4;
    c.value_hidden = 8;
    c.advantage_hidden = 8;
    return c;
}

std::filesystem::path temp_file(const std::string& name) {
    return std::filesystem::temp_directory_path() / ("eccl_test_" + name);
}

}  // namespace

TEST(Dueling, ConstantAdvantageGivesValue) {
    const auto net = toy_net(5);
    NetworkParams p = init_dueling_params(net, 1);
    p.value("advantage.fc2.w").fill(0.0f);
    p.value("advantage.fc2.b").fill(0.75f);
    const Tensor q = q_forward(p, net, some_state(1));
    Graph g(false);
    auto trunk_v = g.value(dueling_forward(g, net, p, g.constant(some_state(1).reshaped({1, 9, 6, 6}))));
    for (std::size_t a = 1; a < 5; ++a) EXPECT_EQ(q[a], q[0]);
    EXPECT_EQ(trunk_v[0], q[0]);
}

TEST(Dueling, HandCombine) {
    Graph g(false);
    auto q = g.dueling_combine(g.constant(Tensor({1, 1}, {2})), g.constant(Tensor({1, 3}, {1, 0, -1})));
    EXPECT_EQ(g.value(q), Tensor({1, 3}, {3, 2, 1}));
}

TEST(Dueling, AdvantageShiftInvariance) {
    std::mt19937_64 rng(2);
    for (int trial = 0; trial < 50; ++trial) {
        Tensor v({2, 1}), a({2, 6});
        for (float& x : v.data()) x = std::uniform_int_distribution<int>(-8, 8)(rng) * 0.25f;
        for (float& x : a.data()) x = std::uniform_int_distribution<int>(-8, 8)(rng) * 0.25f;
        Tensor shifted = a;
        const float c = std::uniform_int_distribution<int>(-8, 8)(rng) * 0.5f;
        for (float& x : shifted.data()) x += c;
        Graph g(false);
        const Tensor q1 = g.value(g.dueling_combine(g.constant(v), g.constant(a)));
        const Tensor q2 = g.value(g.dueling_combine(g.constant(v), g.constant(shifted)));
        for (std::size_t i = 0; i < q1.size(); ++i) EXPECT_NEAR(q1[i], q2[i], 1e-5);
        for (int n = 0; n < 2; ++n) {
            std::span<const float> row_q(q1.data().data() + n * 6, 6), row_a(a.data().data() + n * 6, 6);
            EXPECT_EQ(std::max_element(row_q.begin(), row_q.end()) - row_q.begin(),
                      std::max_element(row_a.begin(), row_a.end()) - row_a.begin());
        }
    }
}

TEST(SelectAction, GreedyWhenEpsilonZero) {
    std::mt19937_64 rng(3);
    const std::vector<float> q{5, 1, 9, 3};
    EXPECT_EQ(select_action(q, {1, 1, 0, 1}, 0.0, rng), 0);
    EXPECT_EQ(select_action(q, {1, 1, 1, 1}, 0.0, rng), 2);
}

TEST(SelectAction, SingleLegalAlwaysChosen) {
    std::mt19937_64 rng(4);
    const std::vector<float> q{5, 1, 9, 3};
    for (double eps : {0.0, 0.3, 1.0})
        for (int i = 0; i < 100; ++i) EXPECT_EQ(select_action(q, {0, 0, 0, 1}, eps, rng), 3);
}

TEST(SelectAction, UniformWhenEpsilonOne) {
    std::mt19937_64 rng(5);
    std::vector<float> q(12, 0.0f);
    q[0] = 100.0f;
    ActionMask m(12, 1);
    m[3] = m[7] = 0;
    std::vector<int> counts(12, 0);
    for (int i = 0; i < 100000; ++i) ++counts[static_cast<std::size_t>(select_action(q, m, 1.0, rng))];
    EXPECT_EQ(counts[3], 0);
    EXPECT_EQ(counts[7], 0);
    for (int a = 0; a < 12; ++a)
        if (m[static_cast<std::size_t>(a)]) EXPECT_NEAR(counts[static_cast<std::size_t>(a)] / 100000.0, 0.1, 0.02);
}

TEST(SelectAction, NoLegalThrows) {
    std::mt19937_64 rng(6);
    EXPECT_THROW(select_action(std::vector<float>{1, 2}, {0, 0}, 0.5, rng), std::invalid_argument);
}

TEST(DoubleQ, TerminalAndZeroGamma) {
    const auto net = toy_net(2);
    NetworkParams online = init_dueling_params(net, 1), target = init_dueling_params(net, 2);
    Experience e;
    e.state = e.next_state = some_state(7);
    e.reward = 4;
    e.terminal = true;
    EXPECT_EQ(double_q_target(e, online, target, net, 0.99), 4.0);
    e.terminal = false;
    e.next_legal = {1, 1};
    EXPECT_EQ(double_q_target(e, online, target, net, 0.0), 4.0);
}

TEST(DoubleQ, OnlineChoosesTargetEvaluates) {
    const auto net = toy_net(2);
    NetworkParams online = init_dueling_params(net, 1), target = init_dueling_params(net, 2);
    set_constant_q(online, {1, 2});
    set_constant_q(target, {10, 0});
    Experience e;
    e.state = e.next_state = some_state(8);
    e.reward = 1;
    e.next_legal = {1, 1};
    EXPECT_EQ(double_q_target(e, online, target, net, 0.5), 1.0);
    // legality restricts the argmax
    e.next_legal = {1, 0};
    EXPECT_EQ(double_q_target(e, online, target, net, 0.5), 6.0);
}

TEST(Schedules, BetaAnneal) {
    AgentConfig c;
    EXPECT_DOUBLE_EQ(beta_schedule(0, c), 0.4);
    EXPECT_DOUBLE_EQ(beta_schedule(1000, c), 1.0);
    EXPECT_DOUBLE_EQ(beta_schedule(500, c), 0.7);
    EXPECT_DOUBLE_EQ(beta_schedule(5000, c), 1.0);
    EXPECT_THROW(beta_schedule(-1, c), std::invalid_argument);
}

TEST(Schedules, EpsilonAnneal) {
    AgentConfig c;
    EXPECT_DOUBLE_EQ(epsilon_schedule(0, c), 1.0);
    EXPECT_DOUBLE_EQ(epsilon_schedule(500, c), 0.05);
    EXPECT_DOUBLE_EQ(epsilon_schedule(250, c), 0.525);
    EXPECT_DOUBLE_EQ(epsilon_schedule(10000, c), 0.05);
}

TEST(AgentConfig, Validation) {
    AgentConfig c;
    EXPECT_FALSE(validate(c));
    c.gamma = 1.5;
    EXPECT_TRUE(validate(c));
    c = AgentConfig{};
    c.beta0 = 0.9;
    c.beta_final = 0.5;
    EXPECT_TRUE(validate(c));
    c = AgentConfig{};
    c.replay_capacity = 10;
    EXPECT_TRUE(validate(c));
    EXPECT_THROW(Agent(c, 6, 6, 1), std::invalid_argument);
}

TEST(TrainCycle, UnderfullIsNoOp) {
    Agent agent(small_agent(), 6, 6, 1);
    const NetworkParams before = agent.online();
    ReplayBank bank(100, 0.6, 1e-3);
    std::mt19937_64 rng(1);
    const auto r = train_cycle(agent, bank, 0.4, rng);
    EXPECT_TRUE(r.underfull);
    EXPECT_EQ(r.batches, 0);
    EXPECT_EQ(agent.online(), before);
    EXPECT_EQ(agent.cycles_completed(), 0);
}

TEST(TrainCycle, ZeroErrorLeavesParams) {
    AgentConfig c = small_agent();
    c.batches_per_cycle = 5;
    Agent agent(c, 6, 6, 1);
    zero(agent.online());
    agent.sync_target();
    ReplayBank bank(64, 0.6, 1e-3);
    for (int i = 0; i < 40; ++i) {
        Experience e;
        e.state = e.next_state = some_state(1);
        e.action = 17;
        e.reward = 0;
        e.terminal = true;
        bank.insert(e);
    }
    const NetworkParams before = agent.online();
    std::mt19937_64 rng(2);
    const auto r = train_cycle(agent, bank, 0.4, rng);
    EXPECT_EQ(r.mean_loss, 0.0);
    for (std::size_t i = 0; i < before.size(); ++i) EXPECT_EQ(agent.online().entry(i).value, before.entry(i).value);
}

TEST(TrainCycle, SingleTerminalExperienceConverges) {
    AgentConfig c = small_agent();
    c.batch_size = 1;
    c.replay_capacity = 1;
    c.batches_per_cycle = 500;
    c.lr = 1e-2;
    auto net = toy_net(1);
    Agent agent(c, net, 3);
    ReplayBank bank(1, 0.6, 1e-3);
    Experience e;
    e.state = e.next_state = some_state(3);
    e.reward = 3;
    e.terminal = true;
    bank.insert(e);
    std::mt19937_64 rng(3);
    train_cycle(agent, bank, 1.0, rng);
    EXPECT_NEAR(q_forward(agent.online(), net, e.state)[0], 3.0f, 1e-2);
}

TEST(TrainCycle, ReportShapeAndDeterminism) {
    AgentConfig c = small_agent();
    ReplayBank bank(200, c.alpha, c.priority_epsilon);
    std::mt19937_64 data(4);
    for (int i = 0; i < 100; ++i) {
        Experience e;
        e.state = some_state(data());
        e.next_state = some_state(data());
        e.action = static_cast<int>(data() % 108);
        e.reward = static_cast<int>(data() % 3);
        e.terminal = data() % 4 == 0;
        if (!e.terminal) e.next_legal = ActionMask(108, 1);
        e.map_id = i % 7;
        bank.insert(e);
    }
    ReplayBank bank2 = bank;
    Agent a(c, 6, 6, 9), b(c, 6, 6, 9);
    std::mt19937_64 r1(5), r2(5);
    const auto ra = train_cycle(a, bank, 0.4, r1);
    const auto rb = train_cycle(b, bank2, 0.4, r2);
    EXPECT_EQ(ra.batches, 250);
    EXPECT_EQ(ra.batch_size, 32);
    EXPECT_EQ(ra.per_experience.size(), 250u * 32u);
    EXPECT_EQ(ra.mean_loss, rb.mean_loss);
    EXPECT_EQ(a.online(), b.online());
    EXPECT_TRUE(ra.target_synced);
    EXPECT_EQ(a.target().entries().front().value, a.online().entries().front().value);
    EXPECT_GT(ra.mean_loss, 0.0);
}

TEST(TrainCycle, TargetSyncCadence) {
    AgentConfig c = small_agent();
    c.batches_per_cycle = 3;
    c.target_sync_cycles = 2;
    Agent agent(c, 6, 6, 1);
    ReplayBank bank(64, 0.6, 1e-3);
    for (int i = 0; i < 40; ++i) {
        Experience e;
        e.state = e.next_state = some_state(i);
        e.action = i;
        e.reward = 1;
        e.terminal = true;
        bank.insert(e);
    }
    const NetworkParams initial = agent.target();
    std::mt19937_64 rng(1);
    EXPECT_FALSE(train_cycle(agent, bank, 0.4, rng).target_synced);
    EXPECT_EQ(agent.target(), initial);
    EXPECT_TRUE(train_cycle(agent, bank, 0.4, rng).target_synced);
    for (std::size_t i = 0; i < initial.size(); ++i)
        EXPECT_EQ(agent.target().entry(i).value, agent.online().entry(i).value);
}

TEST(AgentCheckpoint, RoundTripBitwise) {
    AgentConfig c = small_agent();
    c.batches_per_cycle = 3;
    Agent agent(c, 6, 6, 5);
    ReplayBank bank(64, 0.6, 1e-3);
    for (int i = 0; i < 40; ++i) {
        Experience e;
        e.state = e.next_state = some_state(i);
        e.action = i;
        e.reward = 2;
        e.terminal = true;
        bank.insert(e);
    }
    std::mt19937_64 rng(2);
    train_cycle(agent, bank, 0.4, rng);
    const auto path = temp_file("agent.ckpt");
    save_checkpoint(agent, path);
    const Agent loaded = load_checkpoint(path, agent.net());
    EXPECT_EQ(loaded.online(), agent.online());
    EXPECT_EQ(loaded.target(), agent.target());
    EXPECT_EQ(loaded.config(), agent.config());
    EXPECT_EQ(loaded.cycles_completed(), 1);
    for (int s = 0; s < 5; ++s) {
        EXPECT_EQ(q_forward(loaded.online(), loaded.net(), some_state(100 + s)),
                  q_forward(agent.online(), agent.net(), some_state(100 + s)));
    }
    std::filesystem::remove(path);
}

TEST(AgentCheckpoint, TruncatedAndCorruptFilesRejected) {
    Agent agent(small_agent(), 6, 6, 5);
    const auto path = temp_file("agent_trunc.ckpt");
    save_checkpoint(agent, path);
    std::string bytes;
    {
        std::ifstream in(path, std::ios::binary);
        bytes.assign(std::istreambuf_iterator<char>(in), {});
    }
    {
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size() - 10));
    }
    EXPECT_THROW(load_checkpoint(path), CheckpointError);
    {
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        out << "ECCLNN v2\n" << bytes.substr(10);
    }
    try {
        load_checkpoint(path);
        FAIL();
    } catch (const CheckpointError& e) {
        EXPECT_EQ(e.offset(), 0u);
        EXPECT_NE(std::string(e.what()).find("offset"), std::string::npos);
    }
    std::filesystem::remove(path);
}

TEST(AgentCheckpoint, ArchitectureMismatchRejected) {
    Agent agent(small_agent(), 6, 6, 5);
    const auto path = temp_file("agent_arch.ckpt");
    save_checkpoint(agent, path);
    AgentConfig other = small_agent();
    other.conv_filters = 8;
    EXPECT_THROW(load_checkpoint(path, agent_network(other, 6, 6)), std::runtime_error);
    EXPECT_THROW(load_checkpoint(path, agent_network(small_agent(), 7, 6)), std::runtime_error);
    std::filesystem::remove(path);
}
