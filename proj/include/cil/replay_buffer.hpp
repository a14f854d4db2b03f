#pragma once

#include <cmath>
#include <map>
#include <vector>

#include "cil/dataset.hpp"
#include "cil/rng.hpp"

namespace cil {

enum class Partition { Train, Val };

// Capacity-bounded, class-balanced replay store with disjoint train and
// validation partitions. mirrors the greedy balancing of GDumb: per-class
// quota = capacity / classes seen, remainder to the smallest class ids,
// over-quota classes evicted uniformly at random.
class ReplayBuffer {
public:
    // val_capacity defaults to round(0.10 * capacity)
    explicit ReplayBuffer(int capacity)
        : ReplayBuffer(capacity, static_cast<int>(std::llround(0.10 * capacity))) {}

    ReplayBuffer(int capacity, int val_capacity) : capacity_(capacity), val_capacity_(val_capacity) {
        if (capacity < 0 || val_capacity < 0 || val_capacity > capacity)
            throw std::invalid_argument("ReplayBuffer: bad capacities");
    }

    int capacity() const { return capacity_; }
    int val_capacity() const { return val_capacity_; }
    int train_capacity() const { return capacity_ - val_capacity_; }

    const std::vector<LabeledExample>& part(Partition p) const {
        return p == Partition::Train ? train_part_ : val_part_;
    }
    std::size_t size(Partition p) const { return part(p).size(); }
    bool empty(Partition p) const { return part(p).empty(); }

    void update(Partition partition, const std::vector<LabeledExample>& new_examples, Rng& rng);

    std::vector<LabeledExample> sample_batch(Partition partition, int k, Rng& rng) const;

    std::map<int, int> class_counts(Partition partition) const;

private:
    int capacity_;
    int val_capacity_;
    std::vector<int> feature_shape_;
    std::vector<LabeledExample> train_part_;
    std::vector<LabeledExample> val_part_;
};

} // namespace cil
