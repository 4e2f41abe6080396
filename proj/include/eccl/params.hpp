// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "eccl/tensor.hpp"

namespace eccl {

/// One learnable tensor plus its Adam state. Moment shapes always mirror the value shape.
template <typename T>
struct ParamEntry {
    std::string name;
    BasicTensor<T> value;
    BasicTensor<T> first_moment;
    BasicTensor<T> second_moment;
    std::int64_t step = 0;
};

template <typename T>
class BasicNetworkParams {
public:
    /// Adds a tensor; names must be unique. Returns its index.
    std::size_t add(std::string name, BasicTensor<T> value);

    std::size_t size() const { return entries_.size(); }
    const ParamEntry<T>& entry(std::size_t i) const { return entries_.at(i); }
    ParamEntry<T>& entry(std::size_t i) { return entries_.at(i); }
    const std::vector<ParamEntry<T>>& entries() const { return entries_; }

    std::optional<std::size_t> find(const std::string& name) const;
    /// Throws std::out_of_range naming the missing tensor.
    std::size_t index_of(const std::string& name) const;

    const BasicTensor<T>& value(const std::string& name) const { return entries_[index_of(name)].value; }
    BasicTensor<T>& value(const std::string& name) { return entries_[index_of(name)].value; }

    /// Copies values only; optimizer state of *this is preserved. Layouts must match.
    void copy_values_from(const BasicNetworkParams& other);
    bool same_layout(const BasicNetworkParams& other) const;
    std::size_t parameter_count() const;

    bool operator==(const BasicNetworkParams& other) const;

private:
    std::vector<ParamEntry<T>> entries_;
};

template <typename T>
bool operator==(const ParamEntry<T>& a, const ParamEntry<T>& b) {
    return a.name == b.name && a.value == b.value && a.first_moment == b.first_moment &&
           a.second_moment == b.second_moment && a.step == b.step;
}

using NetworkParams = BasicNetworkParams<float>;
using NetworkParams64 = BasicNetworkParams<double>;

/// Gradients aligned index-for-index with a BasicNetworkParams.
template <typename T>
using Gradients = std::vector<BasicTensor<T>>;

}  // namespace eccl
