#pragma once

#include <set>
#include <string>
#include <utility>
#include <vector>

#include "cil/rng.hpp"
#include "cil/tensor.hpp"

namespace cil {

// One feature-space example. Features come from a frozen extractor, so the
// shape is H x W x D; flat vectors use H = W = 1.
struct LabeledExample {
    Tensor features;
    int label = 0;
};

struct Dataset {
    std::vector<LabeledExample> examples;
    std::vector<int> feature_shape; // H, W, D
    std::set<int> class_set;

    void add(LabeledExample ex) {
        if (feature_shape.empty())
            feature_shape = ex.features.shape;
        else if (ex.features.shape != feature_shape)
            throw std::invalid_argument("Dataset: feature shape mismatch");
        class_set.insert(ex.label);
        examples.push_back(std::move(ex));
    }

    std::size_t size() const { return examples.size(); }
    bool empty() const { return examples.empty(); }
};

struct Session {
    Dataset train;
    Dataset val;
    Dataset test;
    std::vector<int> class_ids; // this session's classes, in class_order order
};

struct SessionStream {
    std::vector<Session> sessions;
    std::vector<int> class_order; // permutation of all class ids
};

// Splits classes into num_splits disjoint sessions along a seeded class order
// and stratifies each class into train/val parts. The class order and the
// per-class splits depend only on (rng stream, class count), never on
// num_splits, so 5/10/20-way splits of one experiment share an ordering.
SessionStream split_into_groups(const Dataset& dataset, const Dataset& test_set, int num_splits,
                                double val_fraction, Rng& rng);

// Synthetic stand-in for precomputed extractor features: class means drawn
// uniformly on the sphere of radius `separation`, unit Gaussian noise around
// them. Returns (train, test), feature shape 1 x 1 x dim.
std::pair<Dataset, Dataset> gen_gaussian_blobs(int num_classes, int dim, int n_train_per_class,
                                               int n_test_per_class, double separation, Rng& rng);

// CSV feature-file round trip. Format:
//   label,h,w,d
//   #shape,<H>,<W>,<D>
//   <label>,<f_0>,...,<f_{HWD-1}>
// Features are printed as shortest round-trip decimals of the 64-bit float.
Dataset load_feature_file(const std::string& path);
void save_feature_file(const Dataset& dataset, const std::string& path);

// shortest round-trip decimal of a 64-bit float
std::string format_double(double v);

} // namespace cil
