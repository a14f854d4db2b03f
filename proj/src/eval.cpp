#include "cil/eval.hpp"

#include <algorithm>
#include <stdexcept>

namespace cil {

double evaluate(const PredictFn& predict, const Dataset& test) {
    if (test.empty()) throw std::invalid_argument("evaluate: empty test set");
    long long correct = 0;
    for (const auto& ex : test.examples)
        if (predict(ex.features) == ex.label) ++correct;
    return static_cast<double>(correct) / static_cast<double>(test.size());
}

int ConfusionMatrix::index_of(int class_id) const {
    auto it = std::lower_bound(class_ids.begin(), class_ids.end(), class_id);
    if (it == class_ids.end() || *it != class_id)
        throw std::invalid_argument("ConfusionMatrix: unknown class id " +
                                    std::to_string(class_id));
    return static_cast<int>(it - class_ids.begin());
}

long long ConfusionMatrix::total() const {
    long long n = 0;
    for (const auto& row : counts)
        for (long long v : row) n += v;
    return n;
}

long long ConfusionMatrix::trace() const {
    long long n = 0;
    for (std::size_t i = 0; i < counts.size(); ++i) n += counts[i][i];
    return n;
}

ConfusionMatrix confusion_matrix(const PredictFn& predict, const Dataset& test,
                                 std::vector<int> class_ids) {
    std::sort(class_ids.begin(), class_ids.end());
    class_ids.erase(std::unique(class_ids.begin(), class_ids.end()), class_ids.end());
    ConfusionMatrix cm;
    cm.class_ids = std::move(class_ids);
    cm.counts.assign(cm.class_ids.size(), std::vector<long long>(cm.class_ids.size(), 0));
    for (const auto& ex : test.examples) {
        int pred = predict(ex.features);
        cm.counts[static_cast<std::size_t>(cm.index_of(ex.label))]
                 [static_cast<std::size_t>(cm.index_of(pred))]++;
    }
    return cm;
}

ConfusionMatrix confusion_matrix(const PredictFn& predict, const Dataset& test) {
    std::vector<int> ids(test.class_set.begin(), test.class_set.end());
    std::vector<int> preds;
    for (const auto& ex : test.examples) preds.push_back(predict(ex.features));
    ids.insert(ids.end(), preds.begin(), preds.end());
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());

    ConfusionMatrix cm;
    cm.class_ids = std::move(ids);
    cm.counts.assign(cm.class_ids.size(), std::vector<long long>(cm.class_ids.size(), 0));
    for (std::size_t i = 0; i < test.examples.size(); ++i) {
        cm.counts[static_cast<std::size_t>(cm.index_of(test.examples[i].label))]
                 [static_cast<std::size_t>(cm.index_of(preds[i]))]++;
    }
    return cm;
}

double last_group_bias(const ConfusionMatrix& confusion, const std::set<int>& last_group_ids) {
    long long old_total = 0, into_last = 0;
    for (std::size_t t = 0; t < confusion.class_ids.size(); ++t) {
        if (last_group_ids.count(confusion.class_ids[t])) continue;
        for (std::size_t p = 0; p < confusion.class_ids.size(); ++p) {
            old_total += confusion.counts[t][p];
            if (last_group_ids.count(confusion.class_ids[p])) into_last += confusion.counts[t][p];
        }
    }
    if (old_total == 0) throw std::invalid_argument("last_group_bias: no old-class test examples");
    return static_cast<double>(into_last) / static_cast<double>(old_total);
}

std::vector<double> forgetting(const AccuracyMatrix& matrix) {
    std::size_t t = matrix.acc.size();
    if (t == 0) return {};
    std::vector<double> f(t, 0.0);
    for (std::size_t j = 0; j < t; ++j) {
        double best = 0.0;
        for (std::size_t i = j; i < t; ++i) best = std::max(best, matrix.acc[i][j]);
        f[j] = best - matrix.acc[t - 1][j];
    }
    return f;
}

} // namespace cil
