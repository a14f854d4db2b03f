#pragma once

#include <functional>
#include <set>
#include <vector>

#include "cil/dataset.hpp"

namespace cil {

using PredictFn = std::function<int(const Tensor&)>;

// fraction of test examples where prediction == label
double evaluate(const PredictFn& predict, const Dataset& test);

struct ConfusionMatrix {
    std::vector<int> class_ids;                 // sorted
    std::vector<std::vector<long long>> counts; // counts[true][pred]

    int index_of(int class_id) const;
    long long total() const;
    long long trace() const;
};

// counts[t][p] over the test set; the class universe defaults to the labels
// and predictions observed
ConfusionMatrix confusion_matrix(const PredictFn& predict, const Dataset& test);
ConfusionMatrix confusion_matrix(const PredictFn& predict, const Dataset& test,
                                 std::vector<int> class_ids);

// fraction of old-class test examples predicted into the last class group
double last_group_bias(const ConfusionMatrix& confusion, const std::set<int>& last_group_ids);

// acc[i][j]: accuracy on session-j test classes after training session i.
// seen_accuracy[i]: accuracy over the union of test sets of sessions 0..i.
struct AccuracyMatrix {
    std::vector<std::vector<double>> acc;
    std::vector<double> seen_accuracy;
};

// f_j = max_{i>=j} acc[i][j] - acc[T][j]
std::vector<double> forgetting(const AccuracyMatrix& matrix);

} // namespace cil
