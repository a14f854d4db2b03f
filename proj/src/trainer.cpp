#include "cil/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

namespace cil {

namespace {

// without replacement when k <= n, with replacement otherwise
std::vector<LabeledExample> sample_examples(const std::vector<LabeledExample>& pool, int k,
                                            Rng& rng) {
    int n = static_cast<int>(pool.size());
    std::vector<LabeledExample> out;
    out.reserve(static_cast<std::size_t>(k));
    if (k <= n) {
        std::vector<int> idx(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) idx[i] = i;
        for (int i = 0; i < k; ++i) {
            int j = i + static_cast<int>(rng.next_below(static_cast<std::uint64_t>(n - i)));
            std::swap(idx[i], idx[j]);
            out.push_back(pool[static_cast<std::size_t>(idx[i])]);
        }
    } else {
        for (int i = 0; i < k; ++i)
            out.push_back(pool[rng.next_below(static_cast<std::uint64_t>(n))]);
    }
    return out;
}

} // namespace

std::vector<LabeledExample> compose_minibatch(const Dataset& current, const ReplayBuffer& buffer,
                                              int batch_size, Rng& rng) {
    if (current.empty()) throw std::invalid_argument("compose_minibatch: empty current dataset");
    if (batch_size < 2 || batch_size % 2 != 0)
        throw std::invalid_argument("compose_minibatch: batch_size must be even and positive");

    bool have_memory = !buffer.empty(Partition::Train);
    int from_current = have_memory ? batch_size / 2 : batch_size;

    std::vector<LabeledExample> batch = sample_examples(current.examples, from_current, rng);
    if (have_memory) {
        auto mem = buffer.sample_batch(Partition::Train, batch_size / 2, rng);
        batch.insert(batch.end(), std::make_move_iterator(mem.begin()),
                     std::make_move_iterator(mem.end()));
    }
    std::vector<int> order = rng_shuffle(rng, static_cast<int>(batch.size()));
    std::vector<LabeledExample> shuffled;
    shuffled.reserve(batch.size());
    for (int i : order) shuffled.push_back(std::move(batch[static_cast<std::size_t>(i)]));
    return shuffled;
}

bool should_stop(const std::vector<double>& val_losses, int patience) {
    if (patience < 1) throw std::invalid_argument("should_stop: patience must be >= 1");
    if (val_losses.empty()) return false;
    int last_improve = 0;
    double best = val_losses[0];
    for (int i = 1; i < static_cast<int>(val_losses.size()); ++i) {
        if (val_losses[static_cast<std::size_t>(i)] < best - 1e-12) {
            best = val_losses[static_cast<std::size_t>(i)];
            last_improve = i;
        }
    }
    return static_cast<int>(val_losses.size()) - 1 - last_improve >= patience;
}

SessionReport run_session_loop(TrainableModel& model, const Dataset& current,
                               const ReplayBuffer* memory,
                               const std::vector<const LabeledExample*>& val_pool,
                               const SessionConfig& cfg, Rng& rng) {
    if (current.empty()) throw std::invalid_argument("run_session_loop: empty train set");
    if (cfg.batch_size < 2 || cfg.batch_size % 2 != 0)
        throw std::invalid_argument("run_session_loop: batch_size must be even and positive");
    if (val_pool.empty()) throw std::invalid_argument("run_session_loop: empty validation pool");
    if (!(cfg.lr0 > 0.0) || !(cfg.lr_decay_factor > 0.0 && cfg.lr_decay_factor < 1.0))
        throw std::invalid_argument("run_session_loop: bad learning-rate config");

    auto t0 = std::chrono::steady_clock::now();

    SessionReport report;
    int n = static_cast<int>(current.size());
    double lr = cfg.lr0;
    double best_val = std::numeric_limits<double>::infinity();
    int since_improve = 0;

    for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
        if (cfg.lr_schedule == LrSchedule::Exponential)
            lr = cfg.lr0 * std::pow(cfg.exp_decay_rate, epoch);

        bool memory_half = memory != nullptr && !memory->empty(Partition::Train);
        int chunk = memory_half ? cfg.batch_size / 2 : cfg.batch_size;

        std::vector<int> perm = rng_shuffle(rng, n);
        double epoch_loss = 0.0;
        int steps = 0;
        for (int start = 0; start < n; start += chunk) {
            int len = std::min(chunk, n - start);
            std::vector<const LabeledExample*> batch;
            batch.reserve(static_cast<std::size_t>(2 * len));
            for (int i = 0; i < len; ++i)
                batch.push_back(&current.examples[static_cast<std::size_t>(perm[start + i])]);
            std::vector<LabeledExample> mem;
            if (memory_half) {
                mem = memory->sample_batch(Partition::Train, len, rng);
                for (const auto& ex : mem) batch.push_back(&ex);
            }
            epoch_loss += model.train_step(batch, lr);
            ++steps;
        }
        report.train_losses.push_back(epoch_loss / steps);

        double vloss = model.eval_loss(val_pool);
        report.val_losses.push_back(vloss);
        if (vloss < best_val - 1e-12) {
            best_val = vloss;
            report.best_epoch = epoch;
            since_improve = 0;
            model.snapshot_best();
        } else {
            ++since_improve;
        }

        if (should_stop(report.val_losses, cfg.stop_patience)) break;
        if (cfg.lr_schedule == LrSchedule::Plateau && since_improve >= cfg.lr_patience) {
            lr *= cfg.lr_decay_factor;
            ++report.lr_decays;
            since_improve = 0;
        }
    }

    model.restore_best();
    report.epochs_run = static_cast<int>(report.val_losses.size());
    report.final_lr = lr;
    report.wall_time_sec =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return report;
}

namespace {

// epoch-loop adapter for the bank: updates flow into unfrozen heads only
class BankTrainable final : public TrainableModel {
public:
    explicit BankTrainable(ClassifierBank& bank) : bank_(bank) {}

    double train_step(const std::vector<const LabeledExample*>& batch, double lr) override {
        BankGrads grads = loss_and_grads(bank_, batch);
        apply_sgd(bank_, grads, lr);
        return grads.loss;
    }

    double eval_loss(const std::vector<const LabeledExample*>& examples) const override {
        double total = 0.0;
        for (const auto* ex : examples) {
            Tensor probs = softmax(bank_.forward(ex->features));
            total += cross_entropy(probs, bank_.logit_index_of(ex->label));
        }
        return total / static_cast<double>(examples.size());
    }

    void snapshot_best() override {
        best_.clear();
        for (int h = 0; h < bank_.num_heads(); ++h)
            if (!bank_.head(h).frozen) best_.emplace_back(h, bank_.head(h));
    }

    void restore_best() override {
        for (auto& [h, clf] : best_) bank_.head(h) = clf;
    }

private:
    ClassifierBank& bank_;
    std::vector<std::pair<int, PartialClassifier>> best_;
};

} // namespace

SessionReport train_session(ClassifierBank& bank, const Session& session, ReplayBuffer& buffer,
                            const SessionConfig& cfg, Rng& rng, bool freeze_previous,
                            bool fit_bic_at_end) {
    if (session.train.empty()) throw std::invalid_argument("train_session: empty train set");

    bank.add_classifier(session.class_ids, cfg.hidden_width, rng, cfg.use_activation,
                        freeze_previous);

    std::vector<const LabeledExample*> val_pool;
    for (const auto& ex : session.val.examples) val_pool.push_back(&ex);
    for (const auto& ex : buffer.part(Partition::Val)) val_pool.push_back(&ex);

    BankTrainable trainable(bank);
    SessionReport report = run_session_loop(trainable, session.train, &buffer, val_pool, cfg, rng);

    buffer.update(Partition::Train, session.train.examples, rng);
    buffer.update(Partition::Val, session.val.examples, rng);

    if (fit_bic_at_end) {
        auto [alpha, beta] = fit_bic(bank, buffer, cfg, rng);
        report.alpha = alpha;
        report.beta = beta;
    } else {
        BiCLayer identity;
        identity.new_class_ids.insert(session.class_ids.begin(), session.class_ids.end());
        bank.set_bic(std::move(identity));
    }

    report.buffer_train_counts = buffer.class_counts(Partition::Train);
    report.buffer_val_counts = buffer.class_counts(Partition::Val);
    return report;
}

BicGrads bic_loss_and_grads(const std::vector<Tensor>& logits, const std::vector<int>& targets,
                            const std::vector<char>& is_new, double alpha, double beta) {
    if (logits.empty()) throw std::invalid_argument("bic_loss_and_grads: no examples");
    BicGrads out;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        const Tensor& o = logits[i];
        Tensor q = o;
        for (std::size_t k = 0; k < q.size(); ++k)
            if (is_new[k]) q[k] = alpha * o[k] + beta;
        Tensor p = softmax(q);
        out.loss += cross_entropy(p, targets[i]);
        for (std::size_t k = 0; k < q.size(); ++k) {
            if (!is_new[k]) continue;
            double t = (static_cast<int>(k) == targets[i]) ? 1.0 : 0.0;
            double g = p[k] - t;
            out.dalpha += g * o[k];
            out.dbeta += g;
        }
    }
    double inv = 1.0 / static_cast<double>(logits.size());
    out.loss *= inv;
    out.dalpha *= inv;
    out.dbeta *= inv;
    return out;
}

std::pair<double, double> fit_bic_logits(const std::vector<Tensor>& logits,
                                         const std::vector<int>& targets,
                                         const std::vector<char>& is_new, int epochs, double lr) {
    double alpha = 1.0, beta = 0.0;
    for (int e = 0; e < epochs; ++e) {
        BicGrads g = bic_loss_and_grads(logits, targets, is_new, alpha, beta);
        alpha -= lr * g.dalpha;
        beta -= lr * g.dbeta;
    }
    return {alpha, beta};
}

std::pair<double, double> fit_bic(ClassifierBank& bank, const ReplayBuffer& buffer,
                                  const SessionConfig& cfg, Rng& rng) {
    (void)rng; // full-batch fit, deterministic
    if (bank.empty()) throw std::invalid_argument("fit_bic: empty bank");

    const auto& last = bank.heads().back();
    BiCLayer layer;
    layer.new_class_ids.insert(last.class_ids.begin(), last.class_ids.end());

    if (bank.num_heads() < 2) { // nothing to correct against in session 1
        bank.set_bic(std::move(layer));
        return {1.0, 0.0};
    }
    const auto& val = buffer.part(Partition::Val);
    if (val.empty())
        throw std::invalid_argument("fit_bic: empty validation memory");

    int c = bank.total_classes();
    std::vector<char> is_new(static_cast<std::size_t>(c), 0);
    for (int id : layer.new_class_ids) is_new[static_cast<std::size_t>(bank.logit_index_of(id))] = 1;

    std::vector<Tensor> logits;
    std::vector<int> targets;
    logits.reserve(val.size());
    for (const auto& ex : val) {
        logits.push_back(bank.forward(ex.features));
        targets.push_back(bank.logit_index_of(ex.label));
    }

    auto [alpha, beta] = fit_bic_logits(logits, targets, is_new, cfg.bic_epochs, cfg.bic_lr);
    layer.alpha = alpha;
    layer.beta = beta;
    bank.set_bic(std::move(layer));
    return {alpha, beta};
}

} // namespace cil
