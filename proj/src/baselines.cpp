#include "cil/baselines.hpp"

#include <algorithm>
#include <cmath>

namespace cil {

int SingleHeadModel::logit_index_of(int class_id) const {
    for (std::size_t i = 0; i < head.class_ids.size(); ++i)
        if (head.class_ids[i] == class_id) return static_cast<int>(i);
    throw std::invalid_argument("SingleHeadModel: unknown class id " + std::to_string(class_id));
}

int SingleHeadModel::predict(const Tensor& features, bool use_bic) const {
    Tensor logits = forward(features);
    if (use_bic) {
        for (std::size_t i = 0; i < logits.size(); ++i)
            if (bic.new_class_ids.count(head.class_ids[i]))
                logits[i] = bic.alpha * logits[i] + bic.beta;
    }
    int best = 0;
    for (int i = 1; i < static_cast<int>(logits.size()); ++i) {
        double v = logits[static_cast<std::size_t>(i)];
        double bv = logits[static_cast<std::size_t>(best)];
        if (v > bv || (v == bv && head.class_ids[static_cast<std::size_t>(i)] <
                                      head.class_ids[static_cast<std::size_t>(best)]))
            best = i;
    }
    return head.class_ids[static_cast<std::size_t>(best)];
}

SingleHeadModel make_single_head_model(int depth, int hidden, Rng& rng, bool use_activation) {
    if (depth < 1 || hidden < 1)
        throw std::invalid_argument("make_single_head_model: bad sizes");
    SingleHeadModel model;
    double s = std::sqrt(6.0 / (depth + hidden));
    model.head.w_proj = Tensor::zeros({depth, hidden});
    for (auto& v : model.head.w_proj.data) v = rng.uniform(-s, s);
    model.head.b_proj = Tensor::zeros({hidden});
    model.head.use_activation = use_activation;
    // w_out stays empty until the first extension
    return model;
}

void extend_head(SingleHeadModel& model, const std::vector<int>& new_class_ids, Rng& rng) {
    if (!model.initialized())
        throw std::invalid_argument("extend_head: model not initialized");
    if (new_class_ids.empty())
        throw std::invalid_argument("extend_head: need at least one new class");
    for (int c : new_class_ids)
        for (int old : model.head.class_ids)
            if (c == old)
                throw std::invalid_argument("extend_head: class id " + std::to_string(c) +
                                            " already present");
    int k = model.head.hidden();
    int m_old = model.num_classes();
    int n_new = static_cast<int>(new_class_ids.size());

    // draw the new block row-major so a first extension consumes the rng
    // exactly like make_head does
    double s = std::sqrt(6.0 / (k + n_new));
    Tensor block = Tensor::zeros({k, n_new});
    for (auto& v : block.data) v = rng.uniform(-s, s);

    Tensor w = Tensor::zeros({k, m_old + n_new});
    for (int r = 0; r < k; ++r) {
        for (int j = 0; j < m_old; ++j) w.at2(r, j) = model.head.w_out.at2(r, j);
        for (int j = 0; j < n_new; ++j) w.at2(r, m_old + j) = block.at2(r, j);
    }
    Tensor b = Tensor::zeros({m_old + n_new});
    for (int j = 0; j < m_old; ++j) b[static_cast<std::size_t>(j)] =
        model.head.b_out[static_cast<std::size_t>(j)];

    model.head.w_out = std::move(w);
    model.head.b_out = std::move(b);
    model.head.class_ids.insert(model.head.class_ids.end(), new_class_ids.begin(),
                                new_class_ids.end());
    model.group_sizes.push_back(n_new);
}

namespace {

class SingleTrainable final : public TrainableModel {
public:
    explicit SingleTrainable(SingleHeadModel& model) : model_(model) {}

    double train_step(const std::vector<const LabeledExample*>& batch, double lr) override {
        HeadGrads grads = zero_grads_like(model_.head);
        double loss = 0.0;
        int m = model_.num_classes();
        for (const auto* ex : batch) {
            int target = model_.logit_index_of(ex->label);
            Tensor probs = softmax(model_.forward(ex->features));
            loss += cross_entropy(probs, target);
            std::vector<double> dlog(static_cast<std::size_t>(m));
            for (int j = 0; j < m; ++j) {
                double t = (j == target) ? 1.0 : 0.0;
                dlog[static_cast<std::size_t>(j)] = probs[static_cast<std::size_t>(j)] - t;
            }
            accumulate_head_grads(model_.head, ex->features, dlog, grads);
        }
        double inv = 1.0 / static_cast<double>(batch.size());
        loss *= inv;
        for (auto& v : grads.w_proj.data) v *= inv;
        for (auto& v : grads.b_proj.data) v *= inv;
        for (auto& v : grads.w_out.data) v *= inv;
        for (auto& v : grads.b_out.data) v *= inv;
        sgd_step(model_.head, grads, lr);
        return loss;
    }

    double eval_loss(const std::vector<const LabeledExample*>& examples) const override {
        double total = 0.0;
        for (const auto* ex : examples) {
            Tensor probs = softmax(model_.forward(ex->features));
            total += cross_entropy(probs, model_.logit_index_of(ex->label));
        }
        return total / static_cast<double>(examples.size());
    }

    void snapshot_best() override { best_ = model_.head; }
    void restore_best() override { model_.head = best_; }

private:
    SingleHeadModel& model_;
    PartialClassifier best_;
};

std::pair<double, double> fit_single_bic(SingleHeadModel& model, const ReplayBuffer& buffer,
                                         const SessionConfig& cfg) {
    const auto& new_ids = model.head.class_ids;
    int last_group = model.group_sizes.back();
    BiCLayer layer;
    for (std::size_t i = new_ids.size() - static_cast<std::size_t>(last_group);
         i < new_ids.size(); ++i)
        layer.new_class_ids.insert(new_ids[i]);

    if (model.group_sizes.size() < 2) {
        model.bic = std::move(layer);
        return {1.0, 0.0};
    }
    const auto& val = buffer.part(Partition::Val);
    if (val.empty()) throw std::invalid_argument("fit_bic: empty validation memory");

    int c = model.num_classes();
    std::vector<char> is_new(static_cast<std::size_t>(c), 0);
    for (int id : layer.new_class_ids)
        is_new[static_cast<std::size_t>(model.logit_index_of(id))] = 1;

    std::vector<Tensor> logits;
    std::vector<int> targets;
    for (const auto& ex : val) {
        logits.push_back(model.forward(ex.features));
        targets.push_back(model.logit_index_of(ex.label));
    }
    auto [alpha, beta] = fit_bic_logits(logits, targets, is_new, cfg.bic_epochs, cfg.bic_lr);
    layer.alpha = alpha;
    layer.beta = beta;
    model.bic = std::move(layer);
    return {alpha, beta};
}

} // namespace

SessionReport er_train_session(SingleHeadModel& model, const Session& session,
                               ReplayBuffer& buffer, const SessionConfig& cfg, Rng& rng) {
    if (session.train.empty()) throw std::invalid_argument("er_train_session: empty train set");
    if (!model.initialized()) {
        int depth = session.train.feature_shape[2];
        model = make_single_head_model(depth, cfg.hidden_width, rng, cfg.use_activation);
    }
    extend_head(model, session.class_ids, rng);

    std::vector<const LabeledExample*> val_pool;
    for (const auto& ex : session.val.examples) val_pool.push_back(&ex);
    for (const auto& ex : buffer.part(Partition::Val)) val_pool.push_back(&ex);

    SingleTrainable trainable(model);
    SessionReport report = run_session_loop(trainable, session.train, &buffer, val_pool, cfg, rng);

    buffer.update(Partition::Train, session.train.examples, rng);
    buffer.update(Partition::Val, session.val.examples, rng);

    auto [alpha, beta] = fit_single_bic(model, buffer, cfg);
    report.alpha = alpha;
    report.beta = beta;
    report.buffer_train_counts = buffer.class_counts(Partition::Train);
    report.buffer_val_counts = buffer.class_counts(Partition::Val);
    return report;
}

SessionReport gdumb_train_session(SingleHeadModel& model, const Session& session,
                                  ReplayBuffer& buffer, const SessionConfig& cfg, Rng& rng) {
    if (session.train.empty()) throw std::invalid_argument("gdumb_train_session: empty train set");

    // memory first, then train on it alone
    buffer.update(Partition::Train, session.train.examples, rng);
    buffer.update(Partition::Val, session.val.examples, rng);
    if (buffer.empty(Partition::Train))
        throw std::invalid_argument("gdumb_train_session: empty buffer");

    std::vector<int> seen_ids = model.head.class_ids;
    seen_ids.insert(seen_ids.end(), session.class_ids.begin(), session.class_ids.end());
    std::vector<int> group_sizes = model.group_sizes;
    group_sizes.push_back(static_cast<int>(session.class_ids.size()));

    // from-scratch reinitialization every session
    int depth = session.train.feature_shape[2];
    model = make_single_head_model(depth, cfg.hidden_width, rng, cfg.use_activation);
    extend_head(model, seen_ids, rng);
    model.group_sizes = group_sizes;

    Dataset memory_data;
    for (const auto& ex : buffer.part(Partition::Train)) memory_data.add(ex);

    std::vector<const LabeledExample*> val_pool;
    for (const auto& ex : buffer.part(Partition::Val)) val_pool.push_back(&ex);

    SingleTrainable trainable(model);
    SessionReport report = run_session_loop(trainable, memory_data, nullptr, val_pool, cfg, rng);

    report.buffer_train_counts = buffer.class_counts(Partition::Train);
    report.buffer_val_counts = buffer.class_counts(Partition::Val);
    return report;
}

} // namespace cil
