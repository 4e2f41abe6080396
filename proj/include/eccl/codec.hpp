// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <limits>
#include <span>

#include "eccl/game.hpp"
#include "eccl/tensor.hpp"

namespace eccl {

/// Planes of the network input, in order.
enum class Plane : int {
    Neutral = 0,
    Slow,
    Block,
    Home,
    Source,
    Defender,
    AttackerHp,     // summed hp per cell / hp_norm
    AttackerDelay,  // attackers with slow_delay > 0 per cell
    Turn,           // turn / max_turns everywhere
};

inline constexpr int kStatePlanes = 9;

struct CodecConfig {
    float hp_norm = 10.0f;
    float hp_cap = 10.0f;  // clamp for the attacker planes
};

/// Tensor [9, H, W].
Tensor encode_state(const GameState& state, const GameConfig& game, const CodecConfig& codec = {});

/// Encoding of the untouched board at turn 0 with no attackers. Does not validate the board.
Tensor encode_initial(const Board& board, const GameConfig& game, const CodecConfig& codec = {});

inline int action_count(int width, int height) { return kEntityCount * width * height; }

/// entity * W * H + y * W + x
int action_to_index(const Action& action, int width, int height);
/// Throws std::out_of_range outside [0, 3*W*H).
Action index_to_action(int index, int width, int height);

/// Sentinel given to illegal entries by mask_q.
inline constexpr float kMaskedQ = -std::numeric_limits<float>::infinity();

/// Copy of q with illegal entries replaced by kMaskedQ. Throws
/// std::invalid_argument("no legal actions") if nothing is legal.
Tensor mask_q(const Tensor& q, const ActionMask& legal);

/// Index of the highest legal q value (lowest index wins ties).
int masked_argmax(std::span<const float> q, const ActionMask& legal);

}  // namespace eccl
