#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "cil/dataset.hpp"
#include "cil/ops.hpp"
#include "cil/rng.hpp"
#include "cil/tensor.hpp"

namespace cil {

// One session's head: per-position projection (the 1x1 convolution), global
// average pooling, dense output. Owns a fixed group of global class ids.
struct PartialClassifier {
    Tensor w_proj; // D x K
    Tensor b_proj; // K
    Tensor w_out;  // K x m
    Tensor b_out;  // m
    std::vector<int> class_ids;
    bool frozen = false;
    bool use_activation = true;

    int in_depth() const { return w_proj.shape[0]; }
    int hidden() const { return w_proj.shape[1]; }
    int out_units() const { return w_out.shape[1]; }
};

// Two-parameter affine correction of the newest classes' logits:
// q_k = alpha * o_k + beta for k in new_class_ids, identity elsewhere.
struct BiCLayer {
    double alpha = 1.0;
    double beta = 0.0;
    std::set<int> new_class_ids;
};

struct HeadGrads {
    Tensor w_proj, b_proj, w_out, b_out;
};

// Gradients of the batch-mean loss, one entry per unfrozen head.
struct BankGrads {
    double loss = 0.0;
    std::vector<std::pair<int, HeadGrads>> heads; // head index -> grads
};

Tensor head_forward(const PartialClassifier& clf, const Tensor& features);

// backprop through one head for one example given dL/dlogits of its slice;
// accumulates into g (caller divides by batch size)
void accumulate_head_grads(const PartialClassifier& clf, const Tensor& features,
                           const std::vector<double>& dlogits, HeadGrads& g);

HeadGrads zero_grads_like(const PartialClassifier& clf);
void sgd_step(PartialClassifier& clf, const HeadGrads& g, double lr);

// Glorot-uniform init, biases zero. Weight draws are row-major so any two
// construction paths that allocate the same blocks consume the rng alike.
PartialClassifier make_head(int depth, int hidden, const std::vector<int>& class_ids, Rng& rng,
                            bool use_activation = true);

// Ordered set of partial classifiers over one feature space. The final layer
// concatenates every head's logits; softmax happens in the loss / predict.
class ClassifierBank {
public:
    ClassifierBank() = default;
    explicit ClassifierBank(int feature_depth) : depth_(feature_depth) {}

    int feature_depth() const { return depth_; }

    const std::vector<PartialClassifier>& heads() const { return heads_; }
    PartialClassifier& head(int i) { return heads_[static_cast<std::size_t>(i)]; }
    const PartialClassifier& head(int i) const { return heads_[static_cast<std::size_t>(i)]; }
    int num_heads() const { return static_cast<int>(heads_.size()); }
    bool empty() const { return heads_.empty(); }

    // total output width C = sum of head sizes
    int total_classes() const;
    int class_offset(int head_index) const;

    // position of a global class id in the concatenated logit vector
    int logit_index_of(int class_id) const;
    // global class id at a logit position
    int class_id_at(int logit_index) const;
    std::vector<int> all_class_ids() const; // in logit order

    const std::optional<BiCLayer>& bic() const { return bic_; }
    void set_bic(BiCLayer b) { bic_ = std::move(b); }
    void clear_bic() { bic_.reset(); }

    // freezes the current last head (if any) and appends a freshly
    // initialized one; freeze_previous=false is the no-freezing ablation
    void add_classifier(const std::vector<int>& class_ids, int hidden, Rng& rng,
                        bool use_activation = true, bool freeze_previous = true);

    // append an already-built head (deserialization)
    void restore_head(PartialClassifier clf);

    void freeze_all();

    Tensor forward(const Tensor& features) const;

    int predict(const Tensor& features, bool use_bic) const;

    long long count_trainable_params() const;

private:
    int depth_ = 0;
    std::vector<PartialClassifier> heads_;
    std::vector<int> offsets_; // prefix sums of head sizes
    std::map<int, int> logit_index_;
    std::optional<BiCLayer> bic_;
};

Tensor bank_forward(const ClassifierBank& bank, const Tensor& features);

Tensor apply_bic(const Tensor& logits, const BiCLayer& bic, const ClassifierBank& bank);

// Batch-mean softmax cross-entropy over the concatenated logits with
// gradients for every unfrozen head. Targets are global class ids.
BankGrads loss_and_grads(const ClassifierBank& bank,
                         const std::vector<const LabeledExample*>& batch);

void apply_sgd(ClassifierBank& bank, const BankGrads& grads, double lr);

// JSON serialization with full-precision floats; stable byte-for-byte for
// frozen-immutability checks and checkpoints.
std::string serialize_head(const PartialClassifier& clf);
std::string serialize_bank(const ClassifierBank& bank);
ClassifierBank bank_from_json(const std::string& text);

} // namespace cil
