// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "eccl/game.hpp"
#include "eccl/tensor.hpp"

namespace eccl {

struct Experience {
    Tensor state;
    int action = 0;
    int reward = 0;
    Tensor next_state;
    bool terminal = false;
    ActionMask next_legal;  // unused when terminal
    int map_id = -1;
};

/// Binary sum tree (plus a min tree for importance-weight normalisation) over
/// a fixed number of leaves. Internal nodes hold exact sums of their children.
class SumTree {
public:
    explicit SumTree(std::size_t capacity);

    std::size_t capacity() const { return capacity_; }
    void set(std::size_t leaf, double priority);
    double get(std::size_t leaf) const { return sum_[base_ + leaf]; }
    double total() const { return sum_[1]; }
    /// Smallest priority among leaves with a positive priority (infinity if none).
    double min_positive() const { return min_[1]; }
    /// Leaf whose cumulative range contains mass, for mass in [0, total()).
    std::size_t find(double mass) const;

private:
    std::size_t capacity_;
    std::size_t base_;
    std::vector<double> sum_;
    std::vector<double> min_;
};

struct ReplaySample {
    std::vector<const Experience*> experiences;
    std::vector<std::size_t> slots;
    std::vector<std::uint64_t> serials;  // detect slots overwritten since sampling
    std::vector<float> weights;          // importance-sampling weights in (0, 1]
    std::vector<double> probabilities;
};

/// Proportional prioritized replay: p_i = (|loss_i| + epsilon)^alpha, ring-buffer
/// storage with oldest-first eviction, new entries at the running max priority.
class ReplayBank {
public:
    ReplayBank(std::size_t capacity, double alpha, double priority_epsilon);

    std::size_t size() const { return size_; }
    std::size_t capacity() const { return storage_.size(); }
    double alpha() const { return alpha_; }
    double max_priority() const { return max_priority_; }
    double total_priority() const { return tree_.total(); }
    double priority(std::size_t slot) const { return tree_.get(slot); }
    const Experience& at(std::size_t slot) const { return storage_.at(slot); }
    std::uint64_t serial(std::size_t slot) const { return serial_.at(slot); }
    const SumTree& tree() const { return tree_; }

    /// Returns the slot written.
    std::size_t insert(Experience exp);

    /// Stratified proportional sampling: [0, total) is cut into batch_size equal
    /// strata with one draw each. Throws std::length_error when size() < batch_size.
    ReplaySample sample(std::size_t batch_size, double beta, std::mt19937_64& rng) const;

    /// Sets p = (|loss| + epsilon)^alpha for each still-live sampled slot.
    /// Returns how many stale entries were skipped.
    int update_priorities(const ReplaySample& sample, const std::vector<double>& losses);
    int update_priorities(const std::vector<std::size_t>& slots, const std::vector<std::uint64_t>& serials,
                          const std::vector<double>& losses);

    double priority_for_loss(double loss) const;

private:
    std::vector<Experience> storage_;
    std::vector<std::uint64_t> serial_;
    SumTree tree_;
    double alpha_;
    double epsilon_;
    double max_priority_ = 1.0;
    std::size_t size_ = 0;
    std::size_t next_ = 0;
    std::uint64_t next_serial_ = 1;
};

}  // namespace eccl
