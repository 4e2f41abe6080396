// SPDX-License-Identifier: Apache-2.0
#include "eccl/network.hpp"

#include <cmath>
#include <random>

namespace eccl {

template <typename T>
typename BasicGraph<T>::Var residual_block(BasicGraph<T>& g, typename BasicGraph<T>::Var input,
                                           typename BasicGraph<T>::Var kernel1, typename BasicGraph<T>::Var bias1,
                                           typename BasicGraph<T>::Var kernel2, typename BasicGraph<T>::Var bias2) {
    auto h = g.relu(g.conv2d(input, kernel1, bias1));
    h = g.conv2d(h, kernel2, bias2);
    return g.relu(g.add(h, input));
}

template Graph::Var residual_block<float>(Graph&, Graph::Var, Graph::Var, Graph::Var, Graph::Var, Graph::Var);
template Graph64::Var residual_block<double>(Graph64&, Graph64::Var, Graph64::Var, Graph64::Var, Graph64::Var,
                                             Graph64::Var);

namespace {

// output layers start near zero so the initial Q spread across actions stays small
constexpr float kOutputInitScale = 0.01f;

Tensor he_uniform(Shape shape, int fan_in, std::mt19937_64& rng, float scale = 1.0f) {
    Tensor t(std::move(shape));
    const float limit = scale * std::sqrt(6.0f / static_cast<float>(fan_in));
    std::uniform_real_distribution<float> dist(-limit, limit);
    for (float& v : t.data()) v = dist(rng);
    return t;
}

void add_conv(NetworkParams& p, const std::string& name, int out_c, int in_c, int k, std::mt19937_64& rng) {
    p.add(name + ".w", he_uniform({out_c, in_c, k, k}, in_c * k * k, rng));
    p.add(name + ".b", Tensor({out_c}));
}

void add_dense(NetworkParams& p, const std::string& name, int out_n, int in_n, std::mt19937_64& rng,
               float scale = 1.0f) {
    p.add(name + ".w", he_uniform({out_n, in_n}, in_n, rng, scale));
    p.add(name + ".b", Tensor({out_n}));
}

void add_trunk(NetworkParams& p, const TrunkConfig& cfg, std::mt19937_64& rng) {
    add_conv(p, "stem", cfg.conv_filters, cfg.in_channels, cfg.kernel, rng);
    for (int i = 0; i < cfg.residual_blocks; ++i) {
        const std::string block = "block" + std::to_string(i);
        add_conv(p, block + ".conv1", cfg.conv_filters, cfg.conv_filters, cfg.kernel, rng);
        add_conv(p, block + ".conv2", cfg.conv_filters, cfg.conv_filters, cfg.kernel, rng);
    }
}

int trunk_features(const TrunkConfig& cfg) { return cfg.conv_filters * cfg.height * cfg.width; }

Graph::Var trunk_forward(Graph& g, const TrunkConfig& cfg, const NetworkParams& p, Graph::Var x) {
    auto h = g.relu(g.conv2d(x, g.parameter(p, "stem.w"), g.parameter(p, "stem.b")));
    for (int i = 0; i < cfg.residual_blocks; ++i) {
        const std::string block = "block" + std::to_string(i);
        h = residual_block(g, h, g.parameter(p, block + ".conv1.w"), g.parameter(p, block + ".conv1.b"),
                           g.parameter(p, block + ".conv2.w"), g.parameter(p, block + ".conv2.b"));
    }
    return g.flatten(h);
}

Graph::Var head(Graph& g, const NetworkParams& p, const std::string& name, Graph::Var x) {
    auto h = g.relu(g.dense(x, g.parameter(p, name + ".fc1.w"), g.parameter(p, name + ".fc1.b")));
    return g.dense(h, g.parameter(p, name + ".fc2.w"), g.parameter(p, name + ".fc2.b"));
}

}  // namespace

NetworkParams init_dueling_params(const DuelingNetConfig& cfg, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    NetworkParams p;
    add_trunk(p, cfg.trunk, rng);
    const int feat = trunk_features(cfg.trunk);
    add_dense(p, "value.fc1", cfg.value_hidden, feat, rng);
    add_dense(p, "value.fc2", 1, cfg.value_hidden, rng, kOutputInitScale);
    add_dense(p, "advantage.fc1", cfg.advantage_hidden, feat, rng);
    add_dense(p, "advantage.fc2", cfg.num_actions, cfg.advantage_hidden, rng, kOutputInitScale);
    return p;
}

NetworkParams init_loss_net_params(const LossNetArch& cfg, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    NetworkParams p;
    add_trunk(p, cfg.trunk, rng);
    add_dense(p, "loss.fc1", cfg.head_hidden, trunk_features(cfg.trunk), rng);
    add_dense(p, "loss.fc2", 1, cfg.head_hidden, rng);
    return p;
}

Graph::Var dueling_forward(Graph& g, const DuelingNetConfig& cfg, const NetworkParams& params, Graph::Var states) {
    auto features = trunk_forward(g, cfg.trunk, params, states);
    auto value = head(g, params, "value", features);
    auto advantage = head(g, params, "advantage", features);
    return g.dueling_combine(value, advantage);
}

Graph::Var loss_net_forward(Graph& g, const LossNetArch& cfg, const NetworkParams& params, Graph::Var states) {
    return head(g, params, "loss", trunk_forward(g, cfg.trunk, params, states));
}

}  // namespace eccl
