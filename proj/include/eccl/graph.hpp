// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "eccl/params.hpp"
#include "eccl/tensor.hpp"

namespace eccl {

/// Define-by-run computation tape with reverse-mode differentiation.
///
/// Every op validates its input shapes as it is recorded and throws
/// std::invalid_argument on mismatch, so a malformed network fails while it is
/// being built rather than during backward. Parameter nodes reference the
/// tensors inside a BasicNetworkParams, which must outlive the graph.
///
/// Batched layouts: conv2d takes [N,C,H,W] (or an unbatched [C,H,W]), dense
/// takes [N,n] (or [n]).
template <typename T>
class BasicGraph {
public:
    struct Var {
        int id = -1;
    };

    explicit BasicGraph(bool track_gradients = true) : track_(track_gradients) {}
    BasicGraph(const BasicGraph&) = delete;
    BasicGraph& operator=(const BasicGraph&) = delete;

    Var constant(BasicTensor<T> value);
    /// Leaf that accumulates a gradient (when tracking).
    Var variable(BasicTensor<T> value);
    Var parameter(const BasicNetworkParams<T>& params, std::size_t index);
    Var parameter(const BasicNetworkParams<T>& params, const std::string& name) {
        return parameter(params, params.index_of(name));
    }

    /// Stride-1 convolution with zero "same" padding; kernel [F,C,k,k] with k odd.
    Var conv2d(Var input, Var kernel, Var bias);
    /// out[i] = dot(weights[i], input) + bias[i]; weights [m,n].
    Var dense(Var input, Var weights, Var bias);
    Var relu(Var x);
    Var add(Var a, Var b);
    Var mul(Var a, Var b);
    Var scale(Var x, T factor);
    /// [N, ...] -> [N, prod(...)]
    Var flatten(Var x);
    /// [N,C,H,W] -> [N,C]
    Var global_mean(Var x);
    /// Concatenates [N,a_i] blocks along the feature axis.
    Var concat(std::span<const Var> parts);
    Var sum(Var x);
    Var mean(Var x);
    /// value [N,1], advantage [N,K] -> value + advantage - mean_k(advantage)
    Var dueling_combine(Var value, Var advantage);
    /// [N,K] -> [N], picking column columns[n] of row n.
    Var gather(Var x, std::vector<int> columns);
    /// Elementwise Huber loss against a constant target.
    Var huber(Var prediction, std::vector<T> target, T kappa = T(1));
    /// Elementwise (prediction - target)^2.
    Var squared_error(Var prediction, std::vector<T> target);

    /// Seeds d(loss)/d(loss) = 1 and propagates. loss must hold exactly one value.
    void backward(Var loss);

    const BasicTensor<T>& value(Var v) const;
    /// Gradient of the last backward pass; zeros if the node received none.
    BasicTensor<T> grad(Var v) const;
    /// One gradient per entry of params, summed over every node bound to it.
    Gradients<T> parameter_gradients(const BasicNetworkParams<T>& params) const;

    std::size_t node_count() const { return nodes_.size(); }

private:
    struct Node {
        BasicTensor<T> owned;
        const BasicTensor<T>* external = nullptr;
        BasicTensor<T> grad;
        bool needs_grad = false;
        std::function<void()> backprop;
        const BasicNetworkParams<T>* params = nullptr;
        std::size_t param_index = 0;

        const BasicTensor<T>& val() const { return external ? *external : owned; }
    };

    Node& node(Var v);
    const Node& node(Var v) const;
    Var push(BasicTensor<T> value, bool needs_grad);
    bool any_needs_grad(std::initializer_list<Var> vars) const;
    BasicTensor<T>& grad_buffer(int id);

    bool track_;
    std::vector<Node> nodes_;
};

using Graph = BasicGraph<float>;
using Graph64 = BasicGraph<double>;

/// Huber loss on a scalar difference, kappa > 0.
template <typename T>
T huber_value(T prediction, T target, T kappa = T(1)) {
    const T delta = prediction - target;
    const T a = delta < T(0) ? -delta : delta;
    return a <= kappa ? T(0.5) * delta * delta : kappa * (a - T(0.5) * kappa);
}

}  // namespace eccl
