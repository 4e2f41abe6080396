// SPDX-License-Identifier: Apache-2.0
#include "eccl/replay.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace eccl {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

SumTree::SumTree(std::size_t capacity) : capacity_(capacity), base_(1) {
    if (capacity == 0) throw std::invalid_argument("sum tree capacity must be positive");
    while (base_ < capacity) base_ *= 2;
    sum_.assign(2 * base_, 0.0);
    min_.assign(2 * base_, kInf);
}

void SumTree::set(std::size_t leaf, double priority) {
    if (leaf >= capacity_) throw std::out_of_range("sum tree leaf out of range");
    if (!(priority >= 0.0) || !std::isfinite(priority)) throw std::invalid_argument("priority must be finite and >= 0");
    std::size_t node = base_ + leaf;
    sum_[node] = priority;
    min_[node] = priority > 0.0 ? priority : kInf;
    for (node /= 2; node >= 1; node /= 2) {
        sum_[node] = sum_[2 * node] + sum_[2 * node + 1];
        min_[node] = std::min(min_[2 * node], min_[2 * node + 1]);
    }
}

std::size_t SumTree::find(double mass) const {
    if (!(total() > 0.0)) throw std::logic_error("sampling from an empty sum tree");
    mass = std::clamp(mass, 0.0, total());
    std::size_t node = 1;
    while (node < base_) {
        const std::size_t left = 2 * node;
        if (mass < sum_[left] || sum_[left + 1] <= 0.0) {
            node = left;
        } else {
            mass -= sum_[left];
            node = left + 1;
        }
    }
    return node - base_;
}

ReplayBank::ReplayBank(std::size_t capacity, double alpha, double priority_epsilon)
    : storage_(capacity), serial_(capacity, 0), tree_(capacity), alpha_(alpha), epsilon_(priority_epsilon) {
    if (alpha < 0.0) throw std::invalid_argument("alpha must be >= 0");
    if (priority_epsilon <= 0.0) throw std::invalid_argument("priority epsilon must be > 0");
}

double ReplayBank::priority_for_loss(double loss) const {
    return std::pow(std::abs(loss) + epsilon_, alpha_);
}

std::size_t ReplayBank::insert(Experience exp) {
    const std::size_t slot = next_;
    storage_[slot] = std::move(exp);
    serial_[slot] = next_serial_++;
    tree_.set(slot, max_priority_);
    next_ = (next_ + 1) % storage_.size();
    size_ = std::min(size_ + 1, storage_.size());
    return slot;
}

ReplaySample ReplayBank::sample(std::size_t batch_size, double beta, std::mt19937_64& rng) const {
    if (batch_size == 0) throw std::invalid_argument("batch size must be positive");
    if (size_ < batch_size) {
        throw std::length_error("replay bank holds " + std::to_string(size_) + " experiences, need " +
                                std::to_string(batch_size));
    }
    ReplaySample out;
    out.experiences.reserve(batch_size);
    const double total = tree_.total();
    const double stratum = total / static_cast<double>(batch_size);
    const double p_min = tree_.min_positive();
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (std::size_t i = 0; i < batch_size; ++i) {
        const double mass = stratum * (static_cast<double>(i) + unit(rng));
        const std::size_t slot = tree_.find(mass);
        const double p = tree_.get(slot);
        out.slots.push_back(slot);
        out.serials.push_back(serial_[slot]);
        out.experiences.push_back(&storage_[slot]);
        out.probabilities.push_back(p / total);
        // (N P_i)^-beta / max_j (N P_j)^-beta == (p_min / p_i)^beta
        out.weights.push_back(static_cast<float>(std::pow(p_min / p, beta)));
    }
    return out;
}

int ReplayBank::update_priorities(const ReplaySample& sample, const std::vector<double>& losses) {
    return update_priorities(sample.slots, sample.serials, losses);
}

int ReplayBank::update_priorities(const std::vector<std::size_t>& slots, const std::vector<std::uint64_t>& serials,
                                  const std::vector<double>& losses) {
    if (slots.size() != losses.size() || slots.size() != serials.size()) {
        throw std::invalid_argument("update_priorities: slot and loss counts differ");
    }
    int skipped = 0;
    for (std::size_t i = 0; i < slots.size(); ++i) {
        if (slots[i] >= storage_.size()) throw std::out_of_range("update_priorities: slot out of range");
        if (serial_[slots[i]] != serials[i]) {
            ++skipped;
            continue;
        }
        const double p = priority_for_loss(losses[i]);
        tree_.set(slots[i], p);
        max_priority_ = std::max(max_priority_, p);
    }
    return skipped;
}

}  // namespace eccl
