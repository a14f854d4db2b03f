#include "cil/replay_buffer.hpp"

#include <algorithm>

namespace cil {

void ReplayBuffer::update(Partition partition, const std::vector<LabeledExample>& new_examples,
                          Rng& rng) {
    for (const auto& ex : new_examples) {
        if (feature_shape_.empty())
            feature_shape_ = ex.features.shape;
        else if (ex.features.shape != feature_shape_)
            throw std::invalid_argument("ReplayBuffer::update: feature shape mismatch");
    }

    auto& stored = partition == Partition::Train ? train_part_ : val_part_;
    int cap = partition == Partition::Train ? train_capacity() : val_capacity();

    // bucket stored examples and candidates by class; map keys give the
    // ascending class order the quota remainder rule needs
    std::map<int, std::vector<LabeledExample>> buckets;
    for (auto& ex : stored) buckets[ex.label].push_back(std::move(ex));
    std::map<int, std::vector<const LabeledExample*>> cand;
    for (const auto& ex : new_examples) cand[ex.label].push_back(&ex);

    std::map<int, int> quota;
    {
        std::vector<int> seen;
        for (const auto& [c, v] : buckets) seen.push_back(c);
        for (const auto& [c, v] : cand)
            if (!buckets.count(c)) seen.push_back(c);
        std::sort(seen.begin(), seen.end());
        if (seen.empty()) return;
        int n = static_cast<int>(seen.size());
        int base = cap / n, rem = cap % n;
        for (int i = 0; i < n; ++i) quota[seen[i]] = base + (i < rem ? 1 : 0);
    }

    // evict over-quota classes, uniformly at random
    for (auto& [c, bucket] : buckets) {
        int q = quota[c];
        while (static_cast<int>(bucket.size()) > q) {
            std::size_t i = rng.next_below(bucket.size());
            bucket.erase(bucket.begin() + static_cast<std::ptrdiff_t>(i));
        }
    }

    // admit candidates of under-quota classes, sampled without replacement
    for (auto& [c, candidates] : cand) {
        int need = quota[c] - static_cast<int>(buckets[c].size());
        if (need <= 0) continue;
        int m = static_cast<int>(candidates.size());
        int take = std::min(need, m);
        std::vector<int> pool(static_cast<std::size_t>(m));
        for (int i = 0; i < m; ++i) pool[i] = i;
        for (int i = 0; i < take; ++i) {
            int j = i + static_cast<int>(rng.next_below(static_cast<std::uint64_t>(m - i)));
            std::swap(pool[i], pool[j]);
            buckets[c].push_back(*candidates[pool[i]]);
        }
    }

    stored.clear();
    for (auto& [c, bucket] : buckets)
        for (auto& ex : bucket) stored.push_back(std::move(ex));
}

std::vector<LabeledExample> ReplayBuffer::sample_batch(Partition partition, int k, Rng& rng) const {
    if (k < 0) throw std::invalid_argument("sample_batch: negative k");
    const auto& stored = part(partition);
    if (k == 0) return {};
    if (stored.empty()) throw std::invalid_argument("sample_batch: empty partition");
    int n = static_cast<int>(stored.size());
    std::vector<LabeledExample> out;
    out.reserve(static_cast<std::size_t>(k));
    if (k <= n) {
        // without replacement, partial Fisher-Yates
        std::vector<int> pool(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) pool[i] = i;
        for (int i = 0; i < k; ++i) {
            int j = i + static_cast<int>(rng.next_below(static_cast<std::uint64_t>(n - i)));
            std::swap(pool[i], pool[j]);
            out.push_back(stored[static_cast<std::size_t>(pool[i])]);
        }
    } else {
        // documented oversampling: with replacement
        for (int i = 0; i < k; ++i)
            out.push_back(stored[rng.next_below(static_cast<std::uint64_t>(n))]);
    }
    return out;
}

std::map<int, int> ReplayBuffer::class_counts(Partition partition) const {
    std::map<int, int> counts;
    for (const auto& ex : part(partition)) counts[ex.label]++;
    return counts;
}

} // namespace cil
