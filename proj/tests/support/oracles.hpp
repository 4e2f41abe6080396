// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "eccl/board.hpp"
#include "eccl/game.hpp"
#include "eccl/graph.hpp"
#include "eccl/tensor.hpp"
#include "reference_sim.hpp"

namespace oracle {

// Direct nested-loop "same" convolution for one sample [C,H,W].
std::vector<double> conv2d(const std::vector<double>& input, int c, int h, int w, const std::vector<double>& kernel,
                           int f, int k, const std::vector<double>& bias);

// All-pairs shortest paths over passable tiles (Floyd-Warshall), reduced to
// the distance from each cell to the nearest Home. eccl::kUnreachable if none.
std::vector<int> floyd_distance_to_home(const eccl::Board& board);

double linear_sum(const std::vector<double>& values);

// Central differences on a scalar function of several tensors. Each trial
// compares every input element; returns the worst relative error
// |a-n| / max(1, |a|, |n|).
using ScalarFn = std::function<eccl::Graph64::Var(eccl::Graph64&, const std::vector<eccl::Graph64::Var>&)>;
double max_grad_rel_error(const ScalarFn& fn, const std::vector<eccl::Tensor64>& inputs, double eps = 1e-4);

eccl::Tensor64 random_tensor(const eccl::Shape& shape, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0);

// Random playable board of the given size: one Home, 1-4 Sources, random
// Slow/Block scatter with every Source still connected.
eccl::Board random_playable_board(int w, int h, std::mt19937_64& rng);

refsim::World to_world(const eccl::GameState& s);
refsim::Rules to_rules(const eccl::GameConfig& c);
// True when both hold the same grid, turn, slain, breach flag and attacker multiset.
bool same_state(const eccl::GameState& s, const refsim::World& w);

struct EquivalenceReport {
    int episodes = 0;
    int turns = 0;
    int mismatches = 0;
    std::string first_mismatch;
};

// Random boards up to 8x8 and random rule variants, each played for up to
// max_turns random legal placements through both the engine and refsim.
// Legal masks and full states are compared after every turn.
EquivalenceReport engine_equivalence(int episodes, std::uint64_t seed, int max_turns = 30);

}  // namespace oracle
