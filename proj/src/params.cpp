// SPDX-License-Identifier: Apache-2.0
#include "eccl/params.hpp"

#include <stdexcept>

namespace eccl {

std::string shape_string(const Shape& shape) {
    std::string out = "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) out += ",";
        out += std::to_string(shape[i]);
    }
    return out + "]";
}

template <typename T>
std::size_t BasicNetworkParams<T>::add(std::string name, BasicTensor<T> value) {
    if (find(name)) throw std::invalid_argument("duplicate parameter name: " + name);
    ParamEntry<T> e;
    e.name = std::move(name);
    e.first_moment = BasicTensor<T>(value.shape());
    e.second_moment = BasicTensor<T>(value.shape());
    e.value = std::move(value);
    entries_.push_back(std::move(e));
    return entries_.size() - 1;
}

template <typename T>
std::optional<std::size_t> BasicNetworkParams<T>::find(const std::string& name) const {
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        if (entries_[i].name == name) return i;
    }
    return std::nullopt;
}

template <typename T>
std::size_t BasicNetworkParams<T>::index_of(const std::string& name) const {
    auto i = find(name);
    if (!i) throw std::out_of_range("no parameter named " + name);
    return *i;
}

template <typename T>
bool BasicNetworkParams<T>::same_layout(const BasicNetworkParams& other) const {
    if (other.entries_.size() != entries_.size()) return false;
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        if (entries_[i].name != other.entries_[i].name) return false;
        if (entries_[i].value.shape() != other.entries_[i].value.shape()) return false;
    }
    return true;
}

template <typename T>
void BasicNetworkParams<T>::copy_values_from(const BasicNetworkParams& other) {
    if (!same_layout(other)) throw std::invalid_argument("parameter layouts differ");
    for (std::size_t i = 0; i < entries_.size(); ++i) entries_[i].value = other.entries_[i].value;
}

template <typename T>
std::size_t BasicNetworkParams<T>::parameter_count() const {
    std::size_t n = 0;
    for (const auto& e : entries_) n += e.value.size();
    return n;
}

template <typename T>
bool BasicNetworkParams<T>::operator==(const BasicNetworkParams& other) const {
    if (entries_.size() != other.entries_.size()) return false;
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        if (!(entries_[i] == other.entries_[i])) return false;
    }
    return true;
}

template class BasicNetworkParams<float>;
template class BasicNetworkParams<double>;

}  // namespace eccl
