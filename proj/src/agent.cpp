// SPDX-License-Identifier: Apache-2.0
#include "eccl/agent.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>

#include "eccl/checkpoint.hpp"
#include "eccl/codec.hpp"

namespace eccl {

std::optional<std::string> validate(const AgentConfig& c) {
    if (!(c.gamma >= 0.0 && c.gamma <= 1.0)) return "gamma: must be in [0,1]";
    if (!(c.alpha >= 0.0)) return "alpha: must be >= 0";
    if (!(c.beta0 >= 0.0 && c.beta0 <= c.beta_final && c.beta_final <= 1.0)) return "beta0: need 0 <= beta0 <= beta_final <= 1";
    if (c.beta_anneal_games <= 0) return "beta_anneal_games: must be positive";
    if (c.batch_size <= 0) return "batch_size: must be positive";
    if (c.replay_capacity < c.batch_size) return "replay_capacity: must be >= batch_size";
    if (c.batches_per_cycle <= 0) return "batches_per_cycle: must be positive";
    if (c.maps_per_cycle <= 0) return "maps_per_cycle: must be positive";
    if (!(c.priority_epsilon > 0.0)) return "priority_epsilon: must be positive";
    if (c.target_sync_cycles <= 0) return "target_sync_cycles: must be positive";
    if (!(c.epsilon_start >= 0.0 && c.epsilon_start <= 1.0)) return "epsilon_start: must be in [0,1]";
    if (!(c.epsilon_end >= 0.0 && c.epsilon_end <= 1.0)) return "epsilon_end: must be in [0,1]";
    if (c.epsilon_anneal_games <= 0) return "epsilon_anneal_games: must be positive";
    if (c.residual_blocks < 0) return "residual_blocks: must be >= 0";
    if (c.conv_filters <= 0) return "conv_filters: must be positive";
    if (c.value_hidden <= 0) return "value_hidden: must be positive";
    if (c.advantage_hidden <= 0) return "advantage_hidden: must be positive";
    if (!(c.lr > 0.0)) return "lr: must be positive";
    if (!(c.huber_kappa > 0.0)) return "huber_kappa: must be positive";
    return std::nullopt;
}

DuelingNetConfig agent_network(const AgentConfig& cfg, int board_width, int board_height) {
    DuelingNetConfig net;
    net.trunk.in_channels = kStatePlanes;
    net.trunk.height = board_height;
    net.trunk.width = board_width;
    net.trunk.residual_blocks = cfg.residual_blocks;
    net.trunk.conv_filters = cfg.conv_filters;
    net.num_actions = action_count(board_width, board_height);
    net.value_hidden = cfg.value_hidden;
    net.advantage_hidden = cfg.advantage_hidden;
    return net;
}

Agent::Agent(AgentConfig cfg, DuelingNetConfig net, std::uint64_t seed)
    : cfg_(cfg), net_(net), online_(init_dueling_params(net, seed)), target_(online_) {
    if (auto err = validate(cfg_)) throw std::invalid_argument("agent config " + *err);
}

namespace {

Tensor stack_states(std::span<const Tensor* const> states) {
    if (states.empty()) throw std::invalid_argument("empty state batch");
    const Shape& s = states[0]->shape();
    Shape shape{static_cast<int>(states.size())};
    shape.insert(shape.end(), s.begin(), s.end());
    Tensor out(shape);
    const std::size_t per = states[0]->size();
    for (std::size_t i = 0; i < states.size(); ++i) {
        if (states[i]->shape() != s) throw std::invalid_argument("state batch has mixed shapes");
        std::copy(states[i]->data().begin(), states[i]->data().end(), out.data().begin() + static_cast<std::ptrdiff_t>(i * per));
    }
    return out;
}

}  // namespace

Tensor q_forward_batch(const NetworkParams& params, const DuelingNetConfig& net, std::span<const Tensor* const> states) {
    Graph g(false);
    auto q = dueling_forward(g, net, params, g.constant(stack_states(states)));
    return g.value(q);
}

Tensor q_forward(const NetworkParams& params, const DuelingNetConfig& net, const Tensor& state) {
    const Tensor* one[] = {&state};
    Tensor q = q_forward_batch(params, net, one);
    return q.reshaped({q.dim(1)});
}

int select_action(std::span<const float> q, const ActionMask& legal, double epsilon, std::mt19937_64& rng) {
    if (q.size() != legal.size()) throw std::invalid_argument("select_action: q and mask sizes differ");
    const auto n_legal = std::count_if(legal.begin(), legal.end(), [](std::uint8_t v) { return v != 0; });
    if (n_legal == 0) throw std::invalid_argument("no legal actions");
    if (epsilon > 0.0 && std::uniform_real_distribution<double>(0.0, 1.0)(rng) < epsilon) {
        auto pick = std::uniform_int_distribution<long>(0, n_legal - 1)(rng);
        for (std::size_t i = 0; i < legal.size(); ++i) {
            if (legal[i] && pick-- == 0) return static_cast<int>(i);
        }
    }
    return masked_argmax(q, legal);
}

double double_q_target(const Experience& exp, const NetworkParams& online, const NetworkParams& target,
                       const DuelingNetConfig& net, double gamma) {
    if (exp.terminal) return exp.reward;
    const Tensor q_online = q_forward(online, net, exp.next_state);
    const Tensor q_target = q_forward(target, net, exp.next_state);
    const int best = masked_argmax(q_online.data(), exp.next_legal);
    return exp.reward + gamma * static_cast<double>(q_target[static_cast<std::size_t>(best)]);
}

double beta_schedule(int games_played, const AgentConfig& cfg) {
    if (games_played < 0) throw std::invalid_argument("games_played must be >= 0");
    if (games_played >= cfg.beta_anneal_games) return cfg.beta_final;
    const double frac = static_cast<double>(games_played) / cfg.beta_anneal_games;
    return cfg.beta0 + frac * (cfg.beta_final - cfg.beta0);
}

double epsilon_schedule(int games_played, const AgentConfig& cfg) {
    if (games_played >= cfg.epsilon_anneal_games) return cfg.epsilon_end;
    const double frac = static_cast<double>(std::max(0, games_played)) / cfg.epsilon_anneal_games;
    return cfg.epsilon_start + frac * (cfg.epsilon_end - cfg.epsilon_start);
}

CycleReport train_cycle(Agent& agent, ReplayBank& bank, double beta, std::mt19937_64& rng) {
    const AgentConfig& cfg = agent.config();
    const DuelingNetConfig& net = agent.net();
    CycleReport report;
    report.batch_size = cfg.batch_size;
    report.beta = beta;
    if (bank.size() < static_cast<std::size_t>(cfg.batch_size)) {
        report.underfull = true;
        return report;
    }
    const AdamConfig adam{cfg.lr};
    const auto bs = static_cast<std::size_t>(cfg.batch_size);
    const auto k = static_cast<std::size_t>(net.num_actions);
    double loss_sum = 0.0;
    report.per_experience.reserve(bs * static_cast<std::size_t>(cfg.batches_per_cycle));

    for (int b = 0; b < cfg.batches_per_cycle; ++b) {
        const ReplaySample sample = bank.sample(bs, beta, rng);
        std::vector<const Tensor*> states, next_states;
        std::vector<int> actions;
        for (const Experience* e : sample.experiences) {
            states.push_back(&e->state);
            next_states.push_back(&e->next_state);
            actions.push_back(e->action);
        }

        const Tensor q_online_next = q_forward_batch(agent.online(), net, next_states);
        const Tensor q_target_next = q_forward_batch(agent.target(), net, next_states);
        std::vector<float> targets(bs);
        for (std::size_t i = 0; i < bs; ++i) {
            const Experience& e = *sample.experiences[i];
            double t = e.reward;
            if (!e.terminal) {
                std::span<const float> row(q_online_next.data().data() + i * k, k);
                const auto best = static_cast<std::size_t>(masked_argmax(row, e.next_legal));
                t += cfg.gamma * static_cast<double>(q_target_next[i * k + best]);
            }
            targets[i] = static_cast<float>(t);
        }

        Graph g;
        auto q = dueling_forward(g, net, agent.online(), g.constant(stack_states(states)));
        auto q_sa = g.gather(q, actions);
        auto per_sample = g.huber(q_sa, targets, static_cast<float>(cfg.huber_kappa));
        auto weighted = g.mul(per_sample, g.constant(Tensor({static_cast<int>(bs)}, sample.weights)));
        auto loss = g.mean(weighted);
        g.backward(loss);

        const Tensor& q_sa_val = g.value(q_sa);
        const Tensor& per_val = g.value(per_sample);
        std::vector<double> td(bs);
        for (std::size_t i = 0; i < bs; ++i) {
            td[i] = std::abs(static_cast<double>(q_sa_val[i]) - static_cast<double>(targets[i]));
            loss_sum += per_val[i];
            report.per_experience.push_back({sample.experiences[i]->map_id, td[i]});
        }
        const AdamReport step = adam_step(agent.online(), g.parameter_gradients(agent.online()), adam);
        if (!step.applied) ++report.rejected_updates;
        report.skipped_priority_updates += bank.update_priorities(sample, td);
        ++report.batches;
    }
    report.mean_loss = loss_sum / static_cast<double>(report.batches * cfg.batch_size);
    agent.set_cycles_completed(agent.cycles_completed() + 1);
    if (agent.cycles_completed() % cfg.target_sync_cycles == 0) {
        agent.sync_target();
        report.target_synced = true;
    }
    return report;
}

namespace {

nlohmann::json net_to_json(const DuelingNetConfig& n) {
    return {{"in_channels", n.trunk.in_channels},
            {"height", n.trunk.height},
            {"width", n.trunk.width},
            {"residual_blocks", n.trunk.residual_blocks},
            {"conv_filters", n.trunk.conv_filters},
            {"kernel", n.trunk.kernel},
            {"num_actions", n.num_actions},
            {"value_hidden", n.value_hidden},
            {"advantage_hidden", n.advantage_hidden}};
}

DuelingNetConfig net_from_json(const nlohmann::json& j) {
    DuelingNetConfig n;
    n.trunk.in_channels = j.at("in_channels").get<int>();
    n.trunk.height = j.at("height").get<int>();
    n.trunk.width = j.at("width").get<int>();
    n.trunk.residual_blocks = j.at("residual_blocks").get<int>();
    n.trunk.conv_filters = j.at("conv_filters").get<int>();
    n.trunk.kernel = j.at("kernel").get<int>();
    n.num_actions = j.at("num_actions").get<int>();
    n.value_hidden = j.at("value_hidden").get<int>();
    n.advantage_hidden = j.at("advantage_hidden").get<int>();
    return n;
}

nlohmann::json agent_to_json(const AgentConfig& c) {
    return {{"gamma", c.gamma},
            {"replay_capacity", c.replay_capacity},
            {"alpha", c.alpha},
            {"beta0", c.beta0},
            {"beta_final", c.beta_final},
            {"beta_anneal_games", c.beta_anneal_games},
            {"batch_size", c.batch_size},
            {"batches_per_cycle", c.batches_per_cycle},
            {"maps_per_cycle", c.maps_per_cycle},
            {"priority_epsilon", c.priority_epsilon},
            {"target_sync_cycles", c.target_sync_cycles},
            {"epsilon_start", c.epsilon_start},
            {"epsilon_end", c.epsilon_end},
            {"epsilon_anneal_games", c.epsilon_anneal_games},
            {"residual_blocks", c.residual_blocks},
            {"conv_filters", c.conv_filters},
            {"value_hidden", c.value_hidden},
            {"advantage_hidden", c.advantage_hidden},
            {"lr", c.lr},
            {"huber_kappa", c.huber_kappa}};
}

AgentConfig agent_from_json(const nlohmann::json& j) {
    AgentConfig c;
    c.gamma = j.at("gamma").get<double>();
    c.replay_capacity = j.at("replay_capacity").get<int>();
    c.alpha = j.at("alpha").get<double>();
    c.beta0 = j.at("beta0").get<double>();
    c.beta_final = j.at("beta_final").get<double>();
    c.beta_anneal_games = j.at("beta_anneal_games").get<int>();
    c.batch_size = j.at("batch_size").get<int>();
    c.batches_per_cycle = j.at("batches_per_cycle").get<int>();
    c.maps_per_cycle = j.at("maps_per_cycle").get<int>();
    c.priority_epsilon = j.at("priority_epsilon").get<double>();
    c.target_sync_cycles = j.at("target_sync_cycles").get<int>();
    c.epsilon_start = j.at("epsilon_start").get<double>();
    c.epsilon_end = j.at("epsilon_end").get<double>();
    c.epsilon_anneal_games = j.at("epsilon_anneal_games").get<int>();
    c.residual_blocks = j.at("residual_blocks").get<int>();
    c.conv_filters = j.at("conv_filters").get<int>();
    c.value_hidden = j.at("value_hidden").get<int>();
    c.advantage_hidden = j.at("advantage_hidden").get<int>();
    c.lr = j.at("lr").get<double>();
    c.huber_kappa = j.at("huber_kappa").get<double>();
    return c;
}

}  // namespace

void save_checkpoint(const Agent& agent, const std::filesystem::path& path) {
    CheckpointData data;
    data.meta["kind"] = "agent";
    data.meta["network"] = net_to_json(agent.net());
    data.meta["agent"] = agent_to_json(agent.config());
    data.meta["cycles_completed"] = agent.cycles_completed();
    append_params(data, "online/", agent.online(), true);
    append_params(data, "target/", agent.target(), false);
    write_checkpoint(path, data);
}

Agent load_checkpoint(const std::filesystem::path& path) {
    const CheckpointData data = read_checkpoint(path);
    if (data.meta.value("kind", "") != "agent") throw std::runtime_error(path.string() + " is not an agent checkpoint");
    DuelingNetConfig net;
    AgentConfig cfg;
    try {
        net = net_from_json(data.meta.at("network"));
        cfg = agent_from_json(data.meta.at("agent"));
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("agent checkpoint metadata is malformed: " + std::string(e.what()));
    }
    Agent agent(cfg, net, 0);
    restore_params(data, "online/", agent.online(), true);
    restore_params(data, "target/", agent.target(), false);
    agent.set_cycles_completed(data.meta.value("cycles_completed", 0));
    return agent;
}

Agent load_checkpoint(const std::filesystem::path& path, const DuelingNetConfig& expected) {
    Agent agent = load_checkpoint(path);
    const auto got = net_to_json(agent.net());
    const auto want = net_to_json(expected);
    for (const auto& [key, value] : want.items()) {
        if (got.at(key) != value) {
            throw std::runtime_error("checkpoint architecture mismatch: " + key + " is " + got.at(key).dump() +
                                     ", config expects " + value.dump());
        }
    }
    return agent;
}

}  // namespace eccl
