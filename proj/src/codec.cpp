// SPDX-License-Identifier: Apache-2.0
#include "eccl/codec.hpp"

#include <algorithm>
#include <stdexcept>

namespace eccl {

Tensor encode_state(const GameState& state, const GameConfig& game, const CodecConfig& codec) {
    const Board& b = state.board;
    const int w = b.width(), h = b.height();
    const std::size_t plane = static_cast<std::size_t>(w) * h;
    Tensor t({kStatePlanes, h, w});
    auto at = [&](Plane p, int cell) -> float& {
        return t[static_cast<std::size_t>(p) * plane + static_cast<std::size_t>(cell)];
    };
    for (int i = 0; i < b.cell_count(); ++i) {
        at(static_cast<Plane>(static_cast<int>(b.at(i))), i) = 1.0f;
    }
    for (const auto& a : state.attackers) {
        const int cell = b.index(a.pos);
        at(Plane::AttackerHp, cell) += static_cast<float>(a.hp) / codec.hp_norm;
        if (a.slow_delay > 0) at(Plane::AttackerDelay, cell) += 1.0f;
    }
    const float turn = static_cast<float>(state.turn) / static_cast<float>(game.max_turns);
    for (int i = 0; i < b.cell_count(); ++i) {
        at(Plane::AttackerHp, i) = std::min(at(Plane::AttackerHp, i), codec.hp_cap);
        at(Plane::AttackerDelay, i) = std::min(at(Plane::AttackerDelay, i), codec.hp_cap);
        at(Plane::Turn, i) = turn;
    }
    return t;
}

Tensor encode_initial(const Board& board, const GameConfig& game, const CodecConfig& codec) {
    GameState s;
    s.board = board;
    return encode_state(s, game, codec);
}

int action_to_index(const Action& action, int width, int height) {
    if (action.pos.x < 0 || action.pos.y < 0 || action.pos.x >= width || action.pos.y >= height) {
        throw std::out_of_range("action position out of bounds");
    }
    return static_cast<int>(action.entity) * width * height + action.pos.y * width + action.pos.x;
}

Action index_to_action(int index, int width, int height) {
    const int cells = width * height;
    if (index < 0 || index >= kEntityCount * cells) {
        throw std::out_of_range("action index " + std::to_string(index) + " outside [0," +
                                std::to_string(kEntityCount * cells) + ")");
    }
    const int cell = index % cells;
    return {static_cast<Entity>(index / cells), {cell % width, cell / width}};
}

Tensor mask_q(const Tensor& q, const ActionMask& legal) {
    if (q.size() != legal.size()) throw std::invalid_argument("mask_q: q and mask sizes differ");
    Tensor out = q;
    bool any = false;
    for (std::size_t i = 0; i < legal.size(); ++i) {
        if (legal[i]) {
            any = true;
        } else {
            out[i] = kMaskedQ;
        }
    }
    if (!any) throw std::invalid_argument("no legal actions");
    return out;
}

int masked_argmax(std::span<const float> q, const ActionMask& legal) {
    if (q.size() != legal.size()) throw std::invalid_argument("masked_argmax: q and mask sizes differ");
    int best = -1;
    for (std::size_t i = 0; i < q.size(); ++i) {
        if (!legal[i]) continue;
        if (best < 0 || q[i] > q[static_cast<std::size_t>(best)]) best = static_cast<int>(i);
    }
    if (best < 0) throw std::invalid_argument("no legal actions");
    return best;
}

}  // namespace eccl
