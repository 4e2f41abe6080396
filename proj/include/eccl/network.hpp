// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>

#include "eccl/graph.hpp"
#include "eccl/params.hpp"

namespace eccl {

/// conv -> relu -> conv, add the block input, relu. Kernels [F,F,k,k].
template <typename T>
typename BasicGraph<T>::Var residual_block(BasicGraph<T>& g, typename BasicGraph<T>::Var input,
                                           typename BasicGraph<T>::Var kernel1, typename BasicGraph<T>::Var bias1,
                                           typename BasicGraph<T>::Var kernel2, typename BasicGraph<T>::Var bias2);

/// Shared trunk: 3x3 stem conv + relu, then a tower of residual blocks.
struct TrunkConfig {
    int in_channels = 9;
    int height = 10;
    int width = 10;
    int residual_blocks = 3;
    int conv_filters = 32;
    int kernel = 3;
};

/// Dueling Q network: trunk, then separate value and advantage heads
/// (dense -> relu -> dense) combined as V + A - mean(A).
struct DuelingNetConfig {
    TrunkConfig trunk;
    int num_actions = 300;
    int value_hidden = 64;
    int advantage_hidden = 64;
};

/// Scalar regressor: trunk, dense -> relu -> dense(1).
struct LossNetArch {
    TrunkConfig trunk;
    int head_hidden = 32;
};

/// He-uniform weights, zero biases, deterministic in seed.
NetworkParams init_dueling_params(const DuelingNetConfig& cfg, std::uint64_t seed);
NetworkParams init_loss_net_params(const LossNetArch& cfg, std::uint64_t seed);

/// states [N,C,H,W] -> Q [N,num_actions]
Graph::Var dueling_forward(Graph& g, const DuelingNetConfig& cfg, const NetworkParams& params, Graph::Var states);
/// states [N,C,H,W] -> prediction [N,1]
Graph::Var loss_net_forward(Graph& g, const LossNetArch& cfg, const NetworkParams& params, Graph::Var states);

}  // namespace eccl
