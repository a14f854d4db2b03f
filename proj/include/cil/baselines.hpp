#pragma once

#include <vector>

#include "cil/trainer.hpp"

namespace cil {

// Single expanding head shared by the ER and GDumb baselines: same
// conv/GAP/dense layer stack as a partial classifier but with the output row
// growing over sessions and every parameter trainable in every session.
struct SingleHeadModel {
    PartialClassifier head; // head.class_ids holds global ids in extension order
    BiCLayer bic;
    std::vector<int> group_sizes; // per-session extension sizes

    bool initialized() const { return !head.w_proj.data.empty(); }
    int num_classes() const { return head.w_out.data.empty() ? 0 : head.w_out.shape[1]; }

    int logit_index_of(int class_id) const;
    Tensor forward(const Tensor& features) const { return head_forward(head, features); }
    int predict(const Tensor& features, bool use_bic) const;
};

SingleHeadModel make_single_head_model(int depth, int hidden, Rng& rng,
                                       bool use_activation = true);

// Appends output units for a new class group. New columns are
// Glorot-initialized (drawn row-major over the new block), biases zero;
// existing columns are bit-unchanged at the moment of extension.
void extend_head(SingleHeadModel& model, const std::vector<int>& new_class_ids, Rng& rng);

// ER with BiC: extend the head, train all parameters on balanced
// current/memory minibatches, update memory at session end, fit BiC on the
// validation memory.
SessionReport er_train_session(SingleHeadModel& model, const Session& session,
                               ReplayBuffer& buffer, const SessionConfig& cfg, Rng& rng);

// GDumb: update memory first, reinitialize the model from scratch, train on
// the buffer's train partition only, early-stop on its validation partition.
// No BiC.
SessionReport gdumb_train_session(SingleHeadModel& model, const Session& session,
                                  ReplayBuffer& buffer, const SessionConfig& cfg, Rng& rng);

} // namespace cil
