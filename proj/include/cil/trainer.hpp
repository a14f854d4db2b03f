#pragma once

#include <map>
#include <string>
#include <vector>

#include "cil/classifier_bank.hpp"
#include "cil/dataset.hpp"
#include "cil/replay_buffer.hpp"

namespace cil {

enum class LrSchedule { Plateau, Exponential };

struct SessionConfig {
    double lr0 = 0.01;
    int stop_patience = 10;   // stop after this many epochs without val improvement
    int lr_patience = 3;      // plateau decay trigger
    double lr_decay_factor = 0.1;
    int batch_size = 32;      // split 16 current + 16 memory when the buffer has data
    int max_epochs = 200;
    int hidden_width = 32;    // K; for the partial-classifier method the harness resizes this
    double val_fraction = 0.10;
    int bic_epochs = 100;
    double bic_lr = 0.001;
    LrSchedule lr_schedule = LrSchedule::Plateau;
    double exp_decay_rate = 0.95; // ER / GDumb schedule
    bool use_activation = true;
};

struct SessionReport {
    int epochs_run = 0;
    std::vector<double> train_losses; // per-epoch batch-mean
    std::vector<double> val_losses;
    double alpha = 1.0;
    double beta = 0.0;
    int best_epoch = 0;
    int lr_decays = 0;
    double final_lr = 0.0;
    double wall_time_sec = 0.0;
    std::map<int, int> buffer_train_counts;
    std::map<int, int> buffer_val_counts;
};

// Anything the epoch loop can drive: the multi-head bank or a single-head
// baseline. One loop implementation keeps the methods' data streams and rng
// consumption identical, which the single-session equivalence check relies on.
class TrainableModel {
public:
    virtual ~TrainableModel() = default;
    virtual double train_step(const std::vector<const LabeledExample*>& batch, double lr) = 0;
    virtual double eval_loss(const std::vector<const LabeledExample*>& examples) const = 0;
    virtual void snapshot_best() = 0;
    virtual void restore_best() = 0;
};

// Balanced minibatch: half current data, half replay memory; all current
// while the buffer is still empty. Order shuffled.
std::vector<LabeledExample> compose_minibatch(const Dataset& current, const ReplayBuffer& buffer,
                                              int batch_size, Rng& rng);

// true iff the running minimum of val_losses has not improved by > 1e-12 in
// the last `patience` entries
bool should_stop(const std::vector<double>& val_losses, int patience);

// Shared epoch loop: shuffled walk over `current` (chunks of batch_size/2
// plus an equal memory draw when `memory` has train data; full batch_size
// chunks otherwise), per-epoch validation, plateau or exponential lr decay,
// early stopping, best-epoch weight restoration.
SessionReport run_session_loop(TrainableModel& model, const Dataset& current,
                               const ReplayBuffer* memory,
                               const std::vector<const LabeledExample*>& val_pool,
                               const SessionConfig& cfg, Rng& rng);

// One session of the partial-classifier method: new head, balanced-replay
// SGD, early stop, buffer update, BiC fit. freeze_previous=false keeps every
// head trainable (ablation); fit_bic_at_end=false skips the BiC fit.
SessionReport train_session(ClassifierBank& bank, const Session& session, ReplayBuffer& buffer,
                            const SessionConfig& cfg, Rng& rng, bool freeze_previous = true,
                            bool fit_bic_at_end = true);

// BiC objective over fixed logits: loss and (dalpha, dbeta) at (alpha, beta).
// is_new marks the logit positions the correction applies to.
struct BicGrads {
    double loss = 0.0;
    double dalpha = 0.0;
    double dbeta = 0.0;
};
BicGrads bic_loss_and_grads(const std::vector<Tensor>& logits, const std::vector<int>& targets,
                            const std::vector<char>& is_new, double alpha, double beta);

// full-batch gradient descent from (1, 0); returns fitted (alpha, beta)
std::pair<double, double> fit_bic_logits(const std::vector<Tensor>& logits,
                                         const std::vector<int>& targets,
                                         const std::vector<char>& is_new, int epochs, double lr);

// Fits the bank's BiC layer on the buffer's validation partition. Identity
// when fewer than two heads exist.
std::pair<double, double> fit_bic(ClassifierBank& bank, const ReplayBuffer& buffer,
                                  const SessionConfig& cfg, Rng& rng);

} // namespace cil
