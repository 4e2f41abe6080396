// SPDX-License-Identifier: Apache-2.0
#include "eccl/loss_net.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <stdexcept>

#include "eccl/adam.hpp"
#include "eccl/checkpoint.hpp"
#include "eccl/codec.hpp"

namespace eccl {

std::optional<std::string> validate(const LossNetConfig& c) {
    if (c.residual_blocks < 0) return "residual_blocks: must be >= 0";
    if (c.conv_filters <= 0) return "conv_filters: must be positive";
    if (c.head_hidden <= 0) return "head_hidden: must be positive";
    if (!(c.lr > 0.0)) return "lr: must be positive";
    if (c.epochs <= 0) return "epochs: must be positive";
    if (c.batch_size <= 0) return "batch_size: must be positive";
    return std::nullopt;
}

LossNetArch loss_net_arch(const LossNetConfig& cfg, int board_width, int board_height) {
    LossNetArch a;
    a.trunk.in_channels = kStatePlanes;
    a.trunk.width = board_width;
    a.trunk.height = board_height;
    a.trunk.residual_blocks = cfg.residual_blocks;
    a.trunk.conv_filters = cfg.conv_filters;
    a.head_hidden = cfg.head_hidden;
    return a;
}

std::optional<double> record_map_loss(int map_id, std::span<const ExperienceLoss> losses) {
    double sum = 0.0;
    int n = 0;
    for (const auto& l : losses) {
        if (l.map_id != map_id) continue;
        sum += std::abs(l.loss);
        ++n;
    }
    if (n == 0) return std::nullopt;
    return sum / n;
}

std::vector<MapLoss> group_map_losses(std::span<const ExperienceLoss> losses) {
    std::map<int, std::pair<double, int>> acc;
    for (const auto& l : losses) {
        auto& [sum, n] = acc[l.map_id];
        sum += std::abs(l.loss);
        ++n;
    }
    std::vector<MapLoss> out;
    out.reserve(acc.size());
    for (const auto& [id, sn] : acc) out.push_back({id, sn.first / sn.second, sn.second});
    return out;
}

LossPredictor::LossPredictor(LossNetConfig cfg, int board_width, int board_height, std::uint64_t seed)
    : cfg_(cfg), arch_(loss_net_arch(cfg, board_width, board_height)) {
    if (auto err = validate(cfg_)) throw std::invalid_argument("lossnet config " + *err);
    params_ = init_loss_net_params(arch_, seed);
}

LossPredictor::LossPredictor(LossNetConfig cfg, LossNetArch arch, NetworkParams params)
    : cfg_(cfg), arch_(arch), params_(std::move(params)) {
    if (!params_.same_layout(init_loss_net_params(arch_, 0))) {
        throw std::invalid_argument("loss net parameters do not match the architecture");
    }
}

namespace {

Tensor stack_boards(std::span<const Board* const> boards, int width, int height) {
    Tensor out({static_cast<int>(boards.size()), kStatePlanes, height, width});
    const std::size_t per = static_cast<std::size_t>(kStatePlanes) * width * height;
    const GameConfig game;
    for (std::size_t i = 0; i < boards.size(); ++i) {
        if (boards[i]->width() != width || boards[i]->height() != height) {
            throw std::invalid_argument("board size " + std::to_string(boards[i]->width()) + "x" +
                                        std::to_string(boards[i]->height()) + " does not match the loss net");
        }
        const Tensor s = encode_initial(*boards[i], game);
        std::copy(s.data().begin(), s.data().end(), out.data().begin() + static_cast<std::ptrdiff_t>(i * per));
    }
    return out;
}

}  // namespace

std::vector<double> LossPredictor::predict_batch(std::span<const Board> boards) const {
    std::vector<double> out;
    out.reserve(boards.size());
    constexpr std::size_t kChunk = 64;
    for (std::size_t start = 0; start < boards.size(); start += kChunk) {
        std::vector<const Board*> ptrs;
        for (std::size_t i = start; i < std::min(boards.size(), start + kChunk); ++i) ptrs.push_back(&boards[i]);
        Graph g(false);
        auto y = loss_net_forward(g, arch_, params_, g.constant(stack_boards(ptrs, arch_.trunk.width, arch_.trunk.height)));
        for (float v : g.value(y).data()) out.push_back(v);
    }
    return out;
}

double LossPredictor::predict_loss(const Board& board) const {
    return predict_batch(std::span<const Board>(&board, 1)).front();
}

double LossPredictor::mse(std::span<const MapLossRecord> records) const {
    if (records.empty()) throw std::invalid_argument("no loss records");
    std::vector<Board> boards;
    boards.reserve(records.size());
    for (const auto& r : records) boards.push_back(r.board);
    const auto pred = predict_batch(boards);
    double sum = 0.0;
    for (std::size_t i = 0; i < records.size(); ++i) {
        const double d = pred[i] - records[i].realized_loss;
        sum += d * d;
    }
    return sum / static_cast<double>(records.size());
}

LossTrainReport LossPredictor::train(std::span<const MapLossRecord> records, std::mt19937_64& rng) {
    if (records.empty()) throw std::invalid_argument("train_loss_net needs at least one record");
    LossTrainReport report;
    const AdamConfig adam{cfg_.lr};
    std::vector<std::size_t> order(records.size());
    std::iota(order.begin(), order.end(), 0);
    const auto bs = static_cast<std::size_t>(cfg_.batch_size);
    for (int epoch = 0; epoch < cfg_.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        for (std::size_t start = 0; start < order.size(); start += bs) {
            const std::size_t end = std::min(order.size(), start + bs);
            std::vector<const Board*> boards;
            std::vector<float> targets;
            for (std::size_t i = start; i < end; ++i) {
                boards.push_back(&records[order[i]].board);
                targets.push_back(static_cast<float>(records[order[i]].realized_loss));
            }
            Graph g;
            auto y = loss_net_forward(g, arch_, params_,
                                      g.constant(stack_boards(boards, arch_.trunk.width, arch_.trunk.height)));
            auto loss = g.mean(g.squared_error(y, targets));
            g.backward(loss);
            if (!adam_step(params_, g.parameter_gradients(params_), adam).applied) ++report.rejected_updates;
        }
        report.epoch_mse.push_back(mse(records));
    }
    report.mse = report.epoch_mse.back();
    return report;
}

void save_loss_net(const LossPredictor& net, const std::filesystem::path& path) {
    CheckpointData data;
    const auto& c = net.config();
    const auto& a = net.arch();
    data.meta["kind"] = "lossnet";
    data.meta["config"] = {{"residual_blocks", c.residual_blocks}, {"conv_filters", c.conv_filters},
                           {"head_hidden", c.head_hidden},         {"lr", c.lr},
                           {"epochs", c.epochs},                   {"batch_size", c.batch_size}};
    data.meta["width"] = a.trunk.width;
    data.meta["height"] = a.trunk.height;
    append_params(data, "loss/", net.params(), true);
    write_checkpoint(path, data);
}

LossPredictor load_loss_net(const std::filesystem::path& path) {
    const CheckpointData data = read_checkpoint(path);
    if (data.meta.value("kind", "") != "lossnet") throw std::runtime_error(path.string() + " is not a loss net checkpoint");
    LossNetConfig c;
    int w = 0, h = 0;
    try {
        const auto& j = data.meta.at("config");
        c.residual_blocks = j.at("residual_blocks").get<int>();
        c.conv_filters = j.at("conv_filters").get<int>();
        c.head_hidden = j.at("head_hidden").get<int>();
        c.lr = j.at("lr").get<double>();
        c.epochs = j.at("epochs").get<int>();
        c.batch_size = j.at("batch_size").get<int>();
        w = data.meta.at("width").get<int>();
        h = data.meta.at("height").get<int>();
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("loss net checkpoint metadata is malformed: " + std::string(e.what()));
    }
    LossPredictor net(c, w, h, 0);
    restore_params(data, "loss/", net.params(), true);
    return net;
}

}  // namespace eccl
