// SPDX-License-Identifier: Apache-2.0
#include "eccl/constraints.hpp"

#include <algorithm>
#include <array>
#include <cstdlib>

namespace eccl {

namespace {

std::optional<Coord> single_home(const Board& grid) {
    const auto homes = grid.find_all(TileType::Home);
    if (homes.size() != 1) return std::nullopt;
    return homes.front();
}

}  // namespace

double factor_separate_quads(const Board& grid) {
    const auto sources = grid.find_all(TileType::Source);
    if (sources.empty()) return 0.0;
    std::array<bool, 4> seen{};
    for (const Coord c : sources) {
        const int q = (c.x >= grid.width() / 2 ? 1 : 0) + (c.y >= grid.height() / 2 ? 2 : 0);
        seen[static_cast<std::size_t>(q)] = true;
    }
    const auto distinct = std::count(seen.begin(), seen.end(), true);
    return static_cast<double>(distinct) / static_cast<double>(sources.size());
}

double factor_home_paths(const Board& grid) {
    if (!single_home(grid)) return 0.0;
    const auto sources = grid.find_all(TileType::Source);
    if (sources.empty()) return 0.0;
    const auto dist = distance_field(grid);
    const auto reached = std::count_if(sources.begin(), sources.end(), [&](Coord c) {
        return dist[static_cast<std::size_t>(grid.index(c))] != kUnreachable;
    });
    return static_cast<double>(reached) / static_cast<double>(sources.size());
}

double factor_home_center(const Board& grid) {
    const auto home = single_home(grid);
    if (!home) return 0.0;
    const int radius = (std::min(grid.width(), grid.height()) + 3) / 4;
    const int d = std::max(std::abs(home->x - grid.width() / 2), std::abs(home->y - grid.height() / 2));
    return d <= radius ? 1.0 : 0.0;
}

double factor_home_blocks(const Board& grid) {
    const auto home = single_home(grid);
    if (!home) return 0.0;
    for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
            const Coord c{home->x + dx, home->y + dy};
            if (grid.in_bounds(c) && grid.at(c) == TileType::Block) return 0.0;
        }
    }
    return 1.0;
}

ConstraintFactors constraint_factors(const Board& grid) {
    return {factor_separate_quads(grid), factor_home_paths(grid), factor_home_center(grid), factor_home_blocks(grid)};
}

double constrained_fitness(const Board& grid) { return constraint_factors(grid).mean(); }

}  // namespace eccl
