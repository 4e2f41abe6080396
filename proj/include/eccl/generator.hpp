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

struct GenConfig {
    int width = 10;
    int height = 10;
    int min_sources = 2;
    int max_sources = 4;
    double slow_density = 0.10;
    double block_density = 0.12;
    int max_rejects = 1000;  // consecutive rejected samples before giving up

    bool operator==(const GenConfig&) const = default;
};

std::optional<std::string> validate(const GenConfig& cfg);

class GenerationError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// One unfiltered sample: Home, Sources, then Slow/Block scattered by density.
Board propose_board(const GenConfig& cfg, std::mt19937_64& rng);

/// Draws proposals until one satisfies every constraint factor. Throws
/// GenerationError after cfg.max_rejects consecutive rejections.
Board generate_board(const GenConfig& cfg, std::mt19937_64& rng);

/// count accepted boards, deterministic in seed.
std::vector<Board> generate(int count, std::uint64_t seed, const GenConfig& cfg);

}  // namespace eccl
