// SPDX-License-Identifier: Apache-2.0
#include "eccl/generator.hpp"

#include "eccl/constraints.hpp"

namespace eccl {

std::optional<std::string> validate(const GenConfig& c) {
    if (c.width < kMinBoardSide || c.height < kMinBoardSide) {
        return "width/height: must be >= " + std::to_string(kMinBoardSide);
    }
    if (c.min_sources < 1 || c.max_sources > kMaxSources || c.min_sources > c.max_sources) {
        return "min_sources/max_sources: need 1 <= min <= max <= " + std::to_string(kMaxSources);
    }
    if (!(c.slow_density >= 0.0 && c.slow_density < 0.5)) return "slow_density: must be in [0, 0.5)";
    if (!(c.block_density >= 0.0 && c.block_density < 0.5)) return "block_density: must be in [0, 0.5)";
    if (c.max_rejects < 1) return "max_rejects: must be positive";
    return std::nullopt;
}

Board propose_board(const GenConfig& cfg, std::mt19937_64& rng) {
    Board b(cfg.width, cfg.height);
    const int cells = b.cell_count();
    std::uniform_int_distribution<int> cell(0, cells - 1);
    b.set(cell(rng), TileType::Home);
    const int sources = std::uniform_int_distribution<int>(cfg.min_sources, cfg.max_sources)(rng);
    for (int placed = 0; placed < sources;) {
        const int i = cell(rng);
        if (b.at(i) != TileType::Neutral) continue;
        b.set(i, TileType::Source);
        ++placed;
    }
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int i = 0; i < cells; ++i) {
        if (b.at(i) != TileType::Neutral) continue;
        const double u = unit(rng);
        if (u < cfg.slow_density) {
            b.set(i, TileType::Slow);
        } else if (u < cfg.slow_density + cfg.block_density) {
            b.set(i, TileType::Block);
        }
    }
    return b;
}

Board generate_board(const GenConfig& cfg, std::mt19937_64& rng) {
    for (int attempt = 0; attempt < cfg.max_rejects; ++attempt) {
        Board b = propose_board(cfg, rng);
        if (is_feasible(b)) return b;
    }
    throw GenerationError("constructive generator rejected " + std::to_string(cfg.max_rejects) +
                          " samples in a row; the configuration looks infeasible");
}

std::vector<Board> generate(int count, std::uint64_t seed, const GenConfig& cfg) {
    if (count < 1) throw std::invalid_argument("generate: count must be >= 1");
    if (auto err = validate(cfg)) throw std::invalid_argument("gen config " + *err);
    std::mt19937_64 rng(seed);
    std::vector<Board> out;
    out.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) out.push_back(generate_board(cfg, rng));
    return out;
}

}  // namespace eccl
