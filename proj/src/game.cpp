// SPDX-License-Identifier: Apache-2.0
#include "eccl/game.hpp"

#include <algorithm>
#include <cstdlib>

namespace eccl {

TileType entity_tile(Entity e) {
    switch (e) {
        case Entity::Defender: return TileType::Defender;
        case Entity::Slow: return TileType::Slow;
        case Entity::Block: return TileType::Block;
    }
    return TileType::Neutral;
}

std::optional<std::string> validate(const GameConfig& c) {
    if (c.base_hp <= 0) return "base_hp: must be positive";
    if (c.hp_growth_interval <= 0) return "hp_growth_interval: must be positive";
    if (c.spawn_period <= 0) return "spawn_period: must be positive";
    if (c.defender_damage <= 0) return "defender_damage: must be positive";
    if (c.defender_range <= 0) return "defender_range: must be positive";
    if (c.max_turns <= 0) return "max_turns: must be positive";
    return std::nullopt;
}

GameState new_game(const Board& board, const GameConfig& config, std::uint64_t seed) {
    if (auto violation = validate_board(board)) throw InvalidBoard(*violation);
    if (auto err = validate(config)) throw std::invalid_argument("game config " + *err);
    GameState s;
    s.board = board;
    s.rng.seed(seed);
    return s;
}

namespace {

bool game_over(const GameState& s, const GameConfig& cfg) {
    return s.breached || s.turn >= cfg.max_turns;
}

// Every source and living attacker can still reach Home.
bool all_connected(const GameState& s, const Board& board) {
    const auto dist = distance_field(board);
    for (int i = 0; i < board.cell_count(); ++i) {
        if (board.at(i) == TileType::Source && dist[static_cast<std::size_t>(i)] == kUnreachable) return false;
    }
    for (const auto& a : s.attackers) {
        if (dist[static_cast<std::size_t>(board.index(a.pos))] == kUnreachable) return false;
    }
    return true;
}

}  // namespace

ActionMask legal_actions(const GameState& state, const GameConfig& config) {
    const Board& b = state.board;
    const int cells = b.cell_count();
    ActionMask mask(static_cast<std::size_t>(kEntityCount) * cells, 0);
    if (game_over(state, config)) return mask;

    std::vector<std::uint8_t> occupied(static_cast<std::size_t>(cells), 0);
    for (const auto& a : state.attackers) occupied[static_cast<std::size_t>(b.index(a.pos))] = 1;

    const auto base_dist = distance_field(b);
    Board probe = b;
    for (int i = 0; i < cells; ++i) {
        if (b.at(i) != TileType::Neutral || occupied[static_cast<std::size_t>(i)]) continue;
        mask[static_cast<std::size_t>(static_cast<int>(Entity::Slow) * cells + i)] = 1;
        // A tile no Source or attacker can reach cannot be on any of their paths.
        bool keeps_paths = base_dist[static_cast<std::size_t>(i)] == kUnreachable;
        if (!keeps_paths) {
            probe.set(i, TileType::Block);
            keeps_paths = all_connected(state, probe);
            probe.set(i, TileType::Neutral);
        }
        if (keeps_paths) {
            mask[static_cast<std::size_t>(static_cast<int>(Entity::Defender) * cells + i)] = 1;
            mask[static_cast<std::size_t>(static_cast<int>(Entity::Block) * cells + i)] = 1;
        }
    }
    return mask;
}

int advance(GameState& s, const Action& action, const GameConfig& cfg, TurnEvents* events) {
    const Board& b = s.board;
    if (!b.in_bounds(action.pos)) throw IllegalAction("action position out of bounds");
    const auto legal = legal_actions(s, cfg);
    const int idx = static_cast<int>(action.entity) * b.cell_count() + b.index(action.pos);
    if (!legal[static_cast<std::size_t>(idx)]) {
        throw IllegalAction(std::string("illegal placement of '") + tile_char(entity_tile(action.entity)) + "' at (" +
                            std::to_string(action.pos.x) + "," + std::to_string(action.pos.y) + ")");
    }
    TurnEvents ev;

    // (1) place
    s.board.set(action.pos, entity_tile(action.entity));

    // (2) spawn
    const int spawn_hp = cfg.base_hp + s.turn / cfg.hp_growth_interval;
    for (Coord src : s.board.find_all(TileType::Source)) {
        bool spawn = false;
        if (cfg.stochastic_spawn) {
            spawn = std::uniform_int_distribution<int>(0, cfg.spawn_period - 1)(s.rng) == 0;
        } else {
            spawn = s.turn % cfg.spawn_period == 0;
        }
        if (spawn) {
            s.attackers.push_back({src, spawn_hp, 0});
            ++ev.spawned;
        }
    }

    // (3) move: greedy descent on the distance field, ties N, E, S, W
    const auto dist = distance_field(s.board);
    constexpr int dx[4] = {0, 1, 0, -1};
    constexpr int dy[4] = {-1, 0, 1, 0};
    for (auto& a : s.attackers) {
        if (a.slow_delay > 0) {
            --a.slow_delay;
            continue;
        }
        int best = dist[static_cast<std::size_t>(s.board.index(a.pos))];
        Coord target = a.pos;
        for (int d = 0; d < 4; ++d) {
            const Coord n{a.pos.x + dx[d], a.pos.y + dy[d]};
            if (!s.board.in_bounds(n)) continue;
            const int nd = dist[static_cast<std::size_t>(s.board.index(n))];
            if (nd < best) {
                best = nd;
                target = n;
            }
        }
        if (target != a.pos) {
            a.pos = target;
            if (s.board.at(a.pos) == TileType::Slow) a.slow_delay = 1;
        }
    }

    // (4) damage from every defender in Chebyshev range
    const auto defenders = s.board.find_all(TileType::Defender);
    if (!defenders.empty()) {
        for (auto& a : s.attackers) {
            int hits = 0;
            for (Coord d : defenders) {
                if (std::max(std::abs(d.x - a.pos.x), std::abs(d.y - a.pos.y)) <= cfg.defender_range) ++hits;
            }
            a.hp -= hits * cfg.defender_damage;
        }
        const auto before = s.attackers.size();
        std::erase_if(s.attackers, [](const Attacker& a) { return a.hp <= 0; });
        ev.slain = static_cast<int>(before - s.attackers.size());
        s.slain += ev.slain;
    }

    // (5) breach
    for (const auto& a : s.attackers) {
        if (s.board.at(a.pos) == TileType::Home) {
            s.breached = true;
            break;
        }
    }
    ev.breached = s.breached;
    s.turn += 1;
    if (events) *events = ev;
    return ev.slain;
}

StepResult step(const GameState& state, const Action& action, const GameConfig& config) {
    StepResult r{state, {}, 0};
    r.reward = advance(r.state, action, config, &r.events);
    return r;
}

bool is_terminal(const GameState& state, const GameConfig& config, const ActionMask& legal) {
    if (game_over(state, config)) return true;
    return std::none_of(legal.begin(), legal.end(), [](std::uint8_t v) { return v != 0; });
}

bool is_terminal(const GameState& state, const GameConfig& config) {
    return is_terminal(state, config, legal_actions(state, config));
}

}  // namespace eccl
