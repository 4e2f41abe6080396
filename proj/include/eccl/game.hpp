// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "eccl/board.hpp"

namespace eccl {

struct GameConfig {
    int base_hp = 3;
    int hp_growth_interval = 10;  // turns per +1 spawn hp
    int spawn_period = 3;         // turns between spawns per source
    int defender_damage = 1;
    int defender_range = 1;  // Chebyshev radius
    int max_turns = 200;
    bool stochastic_spawn = false;  // spawn with probability 1/spawn_period instead of on schedule

    bool operator==(const GameConfig&) const = default;
};

struct Attacker {
    Coord pos;
    int hp = 1;
    int slow_delay = 0;
    bool operator==(const Attacker&) const = default;
};

enum class Entity : std::uint8_t { Defender = 0, Slow = 1, Block = 2 };

inline constexpr int kEntityCount = 3;

TileType entity_tile(Entity e);

struct Action {
    Entity entity = Entity::Defender;
    Coord pos;
    bool operator==(const Action&) const = default;
};

struct GameState {
    Board board;
    std::vector<Attacker> attackers;
    int turn = 0;
    int slain = 0;
    bool breached = false;
    std::mt19937_64 rng;

    bool operator==(const GameState&) const = default;
};

struct TurnEvents {
    int spawned = 0;
    int slain = 0;
    bool breached = false;
};

struct StepResult {
    GameState state;
    TurnEvents events;
    int reward = 0;
};

class InvalidBoard : public std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

class IllegalAction : public std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// One byte per action index (entity * W * H + y * W + x); nonzero = legal.
using ActionMask = std::vector<std::uint8_t>;

/// First non-positive field as "field: must be positive", or nullopt.
std::optional<std::string> validate(const GameConfig& config);

/// Throws InvalidBoard naming the violated rule.
GameState new_game(const Board& board, const GameConfig& config, std::uint64_t seed);

/// Placement is legal on an unoccupied Neutral tile; Block and Defender must
/// additionally leave every Source and living attacker connected to Home.
/// Terminal states (breached or out of turns) have no legal actions.
ActionMask legal_actions(const GameState& state, const GameConfig& config);

/// One turn: place, spawn, move, damage, breach check. Throws IllegalAction
/// and leaves state untouched if the action is not legal. Returns the reward
/// (attackers slain this turn).
int advance(GameState& state, const Action& action, const GameConfig& config, TurnEvents* events = nullptr);

StepResult step(const GameState& state, const Action& action, const GameConfig& config);

inline int score(const GameState& state) { return state.slain; }

/// Breach, turn limit, or no legal placement left.
bool is_terminal(const GameState& state, const GameConfig& config);
bool is_terminal(const GameState& state, const GameConfig& config, const ActionMask& legal);

}  // namespace eccl
