// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>

#include "eccl/params.hpp"

namespace eccl {

struct AdamConfig {
    double lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

struct AdamReport {
    bool applied = true;
    std::string rejected_reason;  // names the first offending tensor when !applied
};

/// One bias-corrected Adam update over every entry. A non-finite gradient
/// anywhere rejects the whole update and leaves params untouched.
template <typename T>
AdamReport adam_step(BasicNetworkParams<T>& params, const Gradients<T>& grads, const AdamConfig& cfg);

}  // namespace eccl
