// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "eccl/board.hpp"
#include "eccl/generator.hpp"

namespace eccl {

class LossPredictor;

/// Predicted loss for each board. Must be a pure function over one evolve call.
using LossOracle = std::function<std::vector<double>(std::span<const Board>)>;

/// Captures a copy of the predictor, so later training does not leak into the oracle.
LossOracle snapshot_oracle(const LossPredictor& net);
LossOracle constant_oracle(double value);

struct EvoConfig {
    int pop_size_feasible = 50;
    int pop_size_infeasible = 50;
    int generations = 20;
    int tournament_size = 3;
    int elitism = 1;
    int min_mutations = 1;
    int max_mutations = 3;

    bool operator==(const EvoConfig&) const = default;
};

std::optional<std::string> validate(const EvoConfig& cfg);

struct Chromosome {
    Board grid;
    double constrained = 0.0;
    double feasible = 0.0;  // meaningful only when constrained == 1

    bool is_feasible() const { return constrained == 1.0; }
};

/// max(0, oracle(grid)). Throws std::invalid_argument for an infeasible grid.
double feasible_fitness(const Board& grid, const LossOracle& oracle);

/// Copy of p1 with the rectangle [x0, x0+w) x [y0, y0+h) taken from p2.
Board crossover_rect(const Board& p1, const Board& p2, int x0, int y0, int w, int h);
/// Rectangle size uniform in [1,W] x [1,H], position uniform among fits.
Board crossover(const Board& p1, const Board& p2, std::mt19937_64& rng);

/// Alphabet for mutation: every tile type except Defender.
inline constexpr TileType kMutationTiles[] = {TileType::Neutral, TileType::Slow, TileType::Block, TileType::Home,
                                              TileType::Source};

/// k uniformly chosen cells, each set to a uniformly chosen different tile.
Board mutate_cells(const Board& grid, int k, std::mt19937_64& rng);
/// k uniform in [min_mutations, max_mutations].
Board mutate(const Board& grid, const EvoConfig& cfg, std::mt19937_64& rng);

/// Index of the tournament winner among `size` uniform draws (with replacement).
std::size_t tournament(std::span<const double> fitness, int size, std::mt19937_64& rng);

struct GenerationStats {
    int generation = 0;
    double best_feasible = 0.0;
    double mean_feasible = 0.0;
    double best_constrained = 0.0;  // over the infeasible population
    int feasible_count = 0;         // feasible chromosomes before truncation/refill
};

struct EvolveResult {
    std::vector<Board> boards;
    std::vector<double> fitness;
    bool fallback = false;  // constructive boards were used to fill the request
    std::vector<GenerationStats> generations;
    std::vector<Chromosome> feasible_population;
    std::vector<Chromosome> infeasible_population;
};

/// FI-2Pop: the feasible population maximises the oracle, the infeasible one
/// climbs constrained fitness; children migrate by feasibility each generation.
/// Returns the request_count best distinct feasible boards seen during the run.
EvolveResult evolve(int request_count, const LossOracle& oracle, std::uint64_t seed, const EvoConfig& evo,
                    const GenConfig& gen);

}  // namespace eccl
