// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "eccl/board.hpp"

namespace eccl {

/// Distinct quadrants holding a Source / number of Sources (0 with no Sources).
/// Quadrants split at floor(W/2), floor(H/2).
double factor_separate_quads(const Board& grid);
/// Fraction of Sources with a finite distance to Home; 0 unless exactly one Home.
double factor_home_paths(const Board& grid);
/// 1 iff the single Home is within Chebyshev ceil(min(W,H)/4) of (W/2, H/2).
double factor_home_center(const Board& grid);
/// 1 iff the single Home has no Block in its 8-neighbourhood.
double factor_home_blocks(const Board& grid);

struct ConstraintFactors {
    double separate_quads = 0.0;
    double home_paths = 0.0;
    double home_center = 0.0;
    double home_blocks = 0.0;

    double mean() const { return (separate_quads + home_paths + home_center + home_blocks) / 4.0; }
};

ConstraintFactors constraint_factors(const Board& grid);
double constrained_fitness(const Board& grid);
inline bool is_feasible(const Board& grid) { return constrained_fitness(grid) == 1.0; }

}  // namespace eccl
