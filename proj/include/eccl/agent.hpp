// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "eccl/adam.hpp"
#include "eccl/network.hpp"
#include "eccl/replay.hpp"

namespace eccl {

struct AgentConfig {
    double gamma = 0.99;
    int replay_capacity = 20000;
    double alpha = 0.6;
    double beta0 = 0.4;
    double beta_final = 1.0;
    int beta_anneal_games = 1000;
    int batch_size = 32;
    int batches_per_cycle = 250;
    int maps_per_cycle = 5;
    double priority_epsilon = 1e-3;
    int target_sync_cycles = 1;
    double epsilon_start = 1.0;
    double epsilon_end = 0.05;
    int epsilon_anneal_games = 500;
    int residual_blocks = 3;
    int conv_filters = 32;
    int value_hidden = 64;
    int advantage_hidden = 64;
    double lr = 1e-4;
    double huber_kappa = 1.0;

    bool operator==(const AgentConfig&) const = default;
};

/// First violated constraint as "field: reason", or nullopt.
std::optional<std::string> validate(const AgentConfig& cfg);

DuelingNetConfig agent_network(const AgentConfig& cfg, int board_width, int board_height);

/// Online and target dueling networks plus their training bookkeeping.
class Agent {
public:
    Agent(AgentConfig cfg, DuelingNetConfig net, std::uint64_t seed);
    Agent(AgentConfig cfg, int board_width, int board_height, std::uint64_t seed)
        : Agent(cfg, agent_network(cfg, board_width, board_height), seed) {}

    const AgentConfig& config() const { return cfg_; }
    const DuelingNetConfig& net() const { return net_; }
    NetworkParams& online() { return online_; }
    const NetworkParams& online() const { return online_; }
    NetworkParams& target() { return target_; }
    const NetworkParams& target() const { return target_; }

    int cycles_completed() const { return cycles_; }
    void set_cycles_completed(int cycles) { cycles_ = cycles; }
    void sync_target() { target_.copy_values_from(online_); }

private:
    AgentConfig cfg_;
    DuelingNetConfig net_;
    NetworkParams online_;
    NetworkParams target_;
    int cycles_ = 0;
};

/// Q(s, .) for one state [C,H,W]; returns [num_actions].
Tensor q_forward(const NetworkParams& params, const DuelingNetConfig& net, const Tensor& state);
/// Q for a batch of states; returns [N, num_actions].
Tensor q_forward_batch(const NetworkParams& params, const DuelingNetConfig& net, std::span<const Tensor* const> states);

/// Epsilon-greedy over legal actions. Throws std::invalid_argument("no legal actions").
int select_action(std::span<const float> q, const ActionMask& legal, double epsilon, std::mt19937_64& rng);

/// r if terminal, else r + gamma * Q_target(s', argmax_legal Q_online(s', .)).
double double_q_target(const Experience& exp, const NetworkParams& online, const NetworkParams& target,
                       const DuelingNetConfig& net, double gamma);

/// Linear from beta0 at 0 games to beta_final at beta_anneal_games, then flat.
double beta_schedule(int games_played, const AgentConfig& cfg);
/// Linear from epsilon_start to epsilon_end over epsilon_anneal_games.
double epsilon_schedule(int games_played, const AgentConfig& cfg);

struct ExperienceLoss {
    int map_id = -1;
    double loss = 0.0;  // |TD error| of one sampled experience
};

struct CycleReport {
    bool underfull = false;
    int batches = 0;
    int batch_size = 0;
    double beta = 0.0;
    double mean_loss = 0.0;  // mean unweighted per-sample Huber loss
    std::vector<ExperienceLoss> per_experience;
    int skipped_priority_updates = 0;
    int rejected_updates = 0;
    bool target_synced = false;
};

/// batches_per_cycle rounds of: prioritized sample, double-Q targets,
/// IS-weighted Huber loss, backward, Adam, priority refresh from |TD error|.
/// Syncs the target network every target_sync_cycles cycles. A bank smaller
/// than batch_size makes this a no-op with report.underfull set.
CycleReport train_cycle(Agent& agent, ReplayBank& bank, double beta, std::mt19937_64& rng);

/// Online, target and optimizer state; the replay bank is not saved.
void save_checkpoint(const Agent& agent, const std::filesystem::path& path);
Agent load_checkpoint(const std::filesystem::path& path);
/// As above, but rejects a checkpoint whose architecture differs from expected.
Agent load_checkpoint(const std::filesystem::path& path, const DuelingNetConfig& expected);

}  // namespace eccl
