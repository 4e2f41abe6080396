// SPDX-License-Identifier: Apache-2.0
#include "eccl/adam.hpp"

#include <cmath>
#include <stdexcept>

namespace eccl {

template <typename T>
AdamReport adam_step(BasicNetworkParams<T>& params, const Gradients<T>& grads, const AdamConfig& cfg) {
    if (grads.size() != params.size()) throw std::invalid_argument("adam_step: gradient count does not match parameters");
    for (std::size_t i = 0; i < grads.size(); ++i) {
        if (grads[i].shape() != params.entry(i).value.shape()) {
            throw std::invalid_argument("adam_step: gradient shape mismatch for " + params.entry(i).name);
        }
        if (!all_finite(grads[i])) return {false, "non-finite gradient in " + params.entry(i).name};
    }
    const T b1 = static_cast<T>(cfg.beta1);
    const T b2 = static_cast<T>(cfg.beta2);
    for (std::size_t i = 0; i < grads.size(); ++i) {
        auto& e = params.entry(i);
        e.step += 1;
        const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(e.step));
        const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(e.step));
        const T step_size = static_cast<T>(cfg.lr / c1);
        const T inv_c2 = static_cast<T>(1.0 / c2);
        const T eps = static_cast<T>(cfg.epsilon);
        auto g = grads[i].data();
        auto m = e.first_moment.data();
        auto v = e.second_moment.data();
        auto w = e.value.data();
        for (std::size_t j = 0; j < g.size(); ++j) {
            m[j] = b1 * m[j] + (T(1) - b1) * g[j];
            v[j] = b2 * v[j] + (T(1) - b2) * g[j] * g[j];
            w[j] -= step_size * m[j] / (std::sqrt(v[j] * inv_c2) + eps);
        }
    }
    return {};
}

template AdamReport adam_step<float>(NetworkParams&, const Gradients<float>&, const AdamConfig&);
template AdamReport adam_step<double>(NetworkParams64&, const Gradients<double>&, const AdamConfig&);

}  // namespace eccl
