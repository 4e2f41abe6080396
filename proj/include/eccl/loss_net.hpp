// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "eccl/agent.hpp"
#include "eccl/board.hpp"
#include "eccl/network.hpp"

namespace eccl {

struct LossNetConfig {
    int residual_blocks = 2;
    int conv_filters = 16;
    int head_hidden = 32;
    double lr = 1e-4;
    int epochs = 4;
    int batch_size = 16;

    bool operator==(const LossNetConfig&) const = default;
};

std::optional<std::string> validate(const LossNetConfig& cfg);

LossNetArch loss_net_arch(const LossNetConfig& cfg, int board_width, int board_height);

struct MapLossRecord {
    Board board;
    double realized_loss = 0.0;
};

struct MapLoss {
    int map_id = -1;
    double mean_loss = 0.0;
    int samples = 0;
};

/// Mean |TD error| of one map's sampled experiences, or nullopt if none were sampled.
std::optional<double> record_map_loss(int map_id, std::span<const ExperienceLoss> losses);
/// One entry per map_id present, ordered by map_id.
std::vector<MapLoss> group_map_losses(std::span<const ExperienceLoss> losses);

struct LossTrainReport {
    std::vector<double> epoch_mse;  // full-set MSE after each epoch
    double mse = 0.0;               // after the last epoch
    int rejected_updates = 0;
};

/// Scalar regressor from a pristine board to the agent's realized loss.
/// Copies are independent snapshots.
class LossPredictor {
public:
    LossPredictor(LossNetConfig cfg, int board_width, int board_height, std::uint64_t seed);
    LossPredictor(LossNetConfig cfg, LossNetArch arch, NetworkParams params);

    const LossNetConfig& config() const { return cfg_; }
    const LossNetArch& arch() const { return arch_; }
    NetworkParams& params() { return params_; }
    const NetworkParams& params() const { return params_; }

    double predict_loss(const Board& board) const;
    std::vector<double> predict_batch(std::span<const Board> boards) const;

    /// cfg.epochs shuffled minibatch passes of MSE on (encode_initial(board), realized_loss).
    /// Throws std::invalid_argument on an empty record list.
    LossTrainReport train(std::span<const MapLossRecord> records, std::mt19937_64& rng);

    double mse(std::span<const MapLossRecord> records) const;

private:
    LossNetConfig cfg_;
    LossNetArch arch_;
    NetworkParams params_;
};

void save_loss_net(const LossPredictor& net, const std::filesystem::path& path);
LossPredictor load_loss_net(const std::filesystem::path& path);

}  // namespace eccl
