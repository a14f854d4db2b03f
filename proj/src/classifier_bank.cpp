#include "cil/classifier_bank.hpp"

#include <algorithm>
#include <cmath>

#include "json.hpp"

namespace cil {

Tensor head_forward(const PartialClassifier& clf, const Tensor& features) {
    if (features.rank() != 3 || features.shape[2] != clf.in_depth())
        throw std::invalid_argument("head_forward: feature depth mismatch");
    int positions = features.shape[0] * features.shape[1];
    int depth = clf.in_depth();
    int k = clf.hidden();

    Tensor pooled = Tensor::zeros({k});
    Tensor x = Tensor::zeros({depth});
    for (int p = 0; p < positions; ++p) {
        std::copy_n(features.data.begin() + static_cast<std::size_t>(p) * depth, depth,
                    x.data.begin());
        Tensor z = affine(x, clf.w_proj, clf.b_proj);
        for (int j = 0; j < k; ++j) {
            double v = z[static_cast<std::size_t>(j)];
            if (clf.use_activation && v < 0.0) v = 0.0;
            pooled[static_cast<std::size_t>(j)] += v;
        }
    }
    for (int j = 0; j < k; ++j) pooled[static_cast<std::size_t>(j)] /= positions;

    return affine(pooled, clf.w_out, clf.b_out);
}

void accumulate_head_grads(const PartialClassifier& clf, const Tensor& features,
                           const std::vector<double>& dlogits, HeadGrads& g) {
    int positions = features.shape[0] * features.shape[1];
    int depth = clf.in_depth();
    int k = clf.hidden();
    int m = clf.out_units();

    // recompute the forward activations (heads are small, batches are small)
    std::vector<std::vector<double>> z_all(static_cast<std::size_t>(positions),
                                           std::vector<double>(static_cast<std::size_t>(k)));
    std::vector<double> pooled(static_cast<std::size_t>(k), 0.0);
    for (int p = 0; p < positions; ++p) {
        const double* xp = features.data.data() + static_cast<std::size_t>(p) * depth;
        auto& z = z_all[static_cast<std::size_t>(p)];
        for (int j = 0; j < k; ++j) z[static_cast<std::size_t>(j)] = clf.b_proj[static_cast<std::size_t>(j)];
        for (int d = 0; d < depth; ++d) {
            double xd = xp[d];
            const double* wrow = clf.w_proj.data.data() + static_cast<std::size_t>(d) * k;
            for (int j = 0; j < k; ++j) z[static_cast<std::size_t>(j)] += xd * wrow[j];
        }
        for (int j = 0; j < k; ++j) {
            double v = z[static_cast<std::size_t>(j)];
            if (clf.use_activation && v < 0.0) v = 0.0;
            pooled[static_cast<std::size_t>(j)] += v;
        }
    }
    for (auto& v : pooled) v /= positions;

    // dense layer
    std::vector<double> dpooled(static_cast<std::size_t>(k), 0.0);
    for (int j = 0; j < m; ++j) {
        double gj = dlogits[static_cast<std::size_t>(j)];
        g.b_out[static_cast<std::size_t>(j)] += gj;
        for (int q = 0; q < k; ++q) {
            g.w_out.at2(q, j) += pooled[static_cast<std::size_t>(q)] * gj;
            dpooled[static_cast<std::size_t>(q)] += clf.w_out.at2(q, j) * gj;
        }
    }

    // mean pool then projection, ReLU mask from the recomputed z
    for (int p = 0; p < positions; ++p) {
        const double* xp = features.data.data() + static_cast<std::size_t>(p) * depth;
        const auto& z = z_all[static_cast<std::size_t>(p)];
        for (int j = 0; j < k; ++j) {
            double dz = dpooled[static_cast<std::size_t>(j)] / positions;
            if (clf.use_activation && z[static_cast<std::size_t>(j)] <= 0.0) dz = 0.0;
            if (dz == 0.0) continue;
            g.b_proj[static_cast<std::size_t>(j)] += dz;
            for (int d = 0; d < depth; ++d) g.w_proj.at2(d, j) += xp[d] * dz;
        }
    }
}

HeadGrads zero_grads_like(const PartialClassifier& clf) {
    HeadGrads g;
    g.w_proj = Tensor::zeros(clf.w_proj.shape);
    g.b_proj = Tensor::zeros(clf.b_proj.shape);
    g.w_out = Tensor::zeros(clf.w_out.shape);
    g.b_out = Tensor::zeros(clf.b_out.shape);
    return g;
}

void sgd_step(PartialClassifier& clf, const HeadGrads& g, double lr) {
    if (clf.frozen) throw std::logic_error("sgd_step: head is frozen");
    for (std::size_t i = 0; i < clf.w_proj.size(); ++i) clf.w_proj[i] -= lr * g.w_proj[i];
    for (std::size_t i = 0; i < clf.b_proj.size(); ++i) clf.b_proj[i] -= lr * g.b_proj[i];
    for (std::size_t i = 0; i < clf.w_out.size(); ++i) clf.w_out[i] -= lr * g.w_out[i];
    for (std::size_t i = 0; i < clf.b_out.size(); ++i) clf.b_out[i] -= lr * g.b_out[i];
}

namespace {

Tensor glorot_uniform(int rows, int cols, Rng& rng) {
    double s = std::sqrt(6.0 / (rows + cols));
    Tensor w = Tensor::zeros({rows, cols});
    for (auto& v : w.data) v = rng.uniform(-s, s);
    return w;
}

} // namespace

PartialClassifier make_head(int depth, int hidden, const std::vector<int>& class_ids, Rng& rng,
                            bool use_activation) {
    if (class_ids.empty()) throw std::invalid_argument("make_head: no class ids");
    if (depth < 1 || hidden < 1) throw std::invalid_argument("make_head: bad sizes");
    int m = static_cast<int>(class_ids.size());
    PartialClassifier clf;
    clf.w_proj = glorot_uniform(depth, hidden, rng);
    clf.b_proj = Tensor::zeros({hidden});
    clf.w_out = glorot_uniform(hidden, m, rng);
    clf.b_out = Tensor::zeros({m});
    clf.class_ids = class_ids;
    clf.use_activation = use_activation;
    return clf;
}

int ClassifierBank::total_classes() const {
    return offsets_.empty() ? 0 : offsets_.back() + heads_.back().out_units();
}

int ClassifierBank::class_offset(int head_index) const {
    return offsets_[static_cast<std::size_t>(head_index)];
}

int ClassifierBank::logit_index_of(int class_id) const {
    auto it = logit_index_.find(class_id);
    if (it == logit_index_.end())
        throw std::invalid_argument("ClassifierBank: unknown class id " + std::to_string(class_id));
    return it->second;
}

int ClassifierBank::class_id_at(int logit_index) const {
    for (std::size_t h = 0; h < heads_.size(); ++h) {
        int off = offsets_[h];
        int m = heads_[h].out_units();
        if (logit_index >= off && logit_index < off + m)
            return heads_[h].class_ids[static_cast<std::size_t>(logit_index - off)];
    }
    throw std::invalid_argument("ClassifierBank: logit index out of range");
}

std::vector<int> ClassifierBank::all_class_ids() const {
    std::vector<int> ids;
    for (const auto& h : heads_)
        ids.insert(ids.end(), h.class_ids.begin(), h.class_ids.end());
    return ids;
}

void ClassifierBank::add_classifier(const std::vector<int>& class_ids, int hidden, Rng& rng,
                                    bool use_activation, bool freeze_previous) {
    for (int c : class_ids)
        if (logit_index_.count(c))
            throw std::invalid_argument("add_classifier: class id " + std::to_string(c) +
                                        " already owned by an earlier head");
    if (depth_ < 1)
        throw std::logic_error("add_classifier: bank has no feature depth");
    if (freeze_previous)
        for (auto& h : heads_) h.frozen = true;

    PartialClassifier clf = make_head(depth_, hidden, class_ids, rng, use_activation);
    restore_head(std::move(clf));
}

void ClassifierBank::restore_head(PartialClassifier clf) {
    if (depth_ < 1) depth_ = clf.in_depth();
    if (clf.in_depth() != depth_)
        throw std::invalid_argument("restore_head: feature depth mismatch");
    int offset = total_classes();
    offsets_.push_back(offset);
    for (std::size_t i = 0; i < clf.class_ids.size(); ++i) {
        if (logit_index_.count(clf.class_ids[i]))
            throw std::invalid_argument("restore_head: duplicate class id");
        logit_index_[clf.class_ids[i]] = offset + static_cast<int>(i);
    }
    heads_.push_back(std::move(clf));
}

void ClassifierBank::freeze_all() {
    for (auto& h : heads_) h.frozen = true;
}

Tensor ClassifierBank::forward(const Tensor& features) const {
    if (heads_.empty()) throw std::invalid_argument("bank_forward: empty bank");
    Tensor out = Tensor::zeros({total_classes()});
    for (std::size_t h = 0; h < heads_.size(); ++h) {
        Tensor logits = head_forward(heads_[h], features);
        std::copy(logits.data.begin(), logits.data.end(),
                  out.data.begin() + offsets_[h]);
    }
    return out;
}

int ClassifierBank::predict(const Tensor& features, bool use_bic) const {
    Tensor logits = forward(features);
    if (use_bic && bic_) logits = apply_bic(logits, *bic_, *this);
    int best_pos = 0;
    int best_id = class_id_at(0);
    for (int i = 1; i < static_cast<int>(logits.size()); ++i) {
        double v = logits[static_cast<std::size_t>(i)];
        double bv = logits[static_cast<std::size_t>(best_pos)];
        int id = class_id_at(i);
        if (v > bv || (v == bv && id < best_id)) {
            best_pos = i;
            best_id = id;
        }
    }
    return best_id;
}

long long ClassifierBank::count_trainable_params() const {
    long long n = 0;
    for (const auto& h : heads_) {
        if (h.frozen) continue;
        n += static_cast<long long>(h.w_proj.size()) + h.b_proj.size() + h.w_out.size() +
             h.b_out.size();
    }
    return n;
}

Tensor bank_forward(const ClassifierBank& bank, const Tensor& features) {
    return bank.forward(features);
}

Tensor apply_bic(const Tensor& logits, const BiCLayer& bic, const ClassifierBank& bank) {
    Tensor out = logits;
    for (int c : bic.new_class_ids) {
        int pos = bank.logit_index_of(c);
        out[static_cast<std::size_t>(pos)] = bic.alpha * logits[static_cast<std::size_t>(pos)] + bic.beta;
    }
    return out;
}

BankGrads loss_and_grads(const ClassifierBank& bank,
                         const std::vector<const LabeledExample*>& batch) {
    if (bank.empty()) throw std::invalid_argument("loss_and_grads: empty bank");
    if (batch.empty()) throw std::invalid_argument("loss_and_grads: empty batch");

    std::vector<int> live; // unfrozen head indices
    for (int h = 0; h < bank.num_heads(); ++h)
        if (!bank.head(h).frozen) live.push_back(h);
    if (live.empty()) throw std::invalid_argument("loss_and_grads: all heads frozen");

    BankGrads out;
    for (int h : live) out.heads.emplace_back(h, zero_grads_like(bank.head(h)));

    for (const auto* ex : batch) {
        int target_pos = bank.logit_index_of(ex->label);
        Tensor logits = bank.forward(ex->features);
        Tensor probs = softmax(logits);
        out.loss += cross_entropy(probs, target_pos);

        for (std::size_t li = 0; li < live.size(); ++li) {
            int h = live[li];
            int off = bank.class_offset(h);
            int m = bank.head(h).out_units();
            std::vector<double> dlog(static_cast<std::size_t>(m));
            for (int j = 0; j < m; ++j) {
                double t = (off + j == target_pos) ? 1.0 : 0.0;
                dlog[static_cast<std::size_t>(j)] = probs[static_cast<std::size_t>(off + j)] - t;
            }
            accumulate_head_grads(bank.head(h), ex->features, dlog, out.heads[li].second);
        }
    }

    double inv = 1.0 / static_cast<double>(batch.size());
    out.loss *= inv;
    for (auto& [h, g] : out.heads) {
        for (auto& v : g.w_proj.data) v *= inv;
        for (auto& v : g.b_proj.data) v *= inv;
        for (auto& v : g.w_out.data) v *= inv;
        for (auto& v : g.b_out.data) v *= inv;
    }
    return out;
}

void apply_sgd(ClassifierBank& bank, const BankGrads& grads, double lr) {
    for (const auto& [h, g] : grads.heads) sgd_step(bank.head(h), g, lr);
}

namespace {

using nlohmann::json;

json head_to_json(const PartialClassifier& h) {
    json j;
    j["class_ids"] = h.class_ids;
    j["frozen"] = h.frozen;
    j["use_activation"] = h.use_activation;
    j["d"] = h.in_depth();
    j["k"] = h.hidden();
    j["m"] = h.out_units();
    j["w_proj"] = h.w_proj.data;
    j["b_proj"] = h.b_proj.data;
    j["w_out"] = h.w_out.data;
    j["b_out"] = h.b_out.data;
    return j;
}

PartialClassifier head_from_json(const json& j) {
    PartialClassifier h;
    int d = j.at("d"), k = j.at("k"), m = j.at("m");
    h.w_proj = Tensor({d, k}, j.at("w_proj").get<std::vector<double>>());
    h.b_proj = Tensor({k}, j.at("b_proj").get<std::vector<double>>());
    h.w_out = Tensor({k, m}, j.at("w_out").get<std::vector<double>>());
    h.b_out = Tensor({m}, j.at("b_out").get<std::vector<double>>());
    h.class_ids = j.at("class_ids").get<std::vector<int>>();
    h.frozen = j.at("frozen");
    h.use_activation = j.at("use_activation");
    return h;
}

} // namespace

std::string serialize_head(const PartialClassifier& clf) {
    return head_to_json(clf).dump();
}

std::string serialize_bank(const ClassifierBank& bank) {
    json j;
    j["heads"] = json::array();
    for (const auto& h : bank.heads()) j["heads"].push_back(head_to_json(h));
    if (bank.bic()) {
        const auto& b = *bank.bic();
        j["bic"] = {{"alpha", b.alpha},
                    {"beta", b.beta},
                    {"new_class_ids", std::vector<int>(b.new_class_ids.begin(), b.new_class_ids.end())}};
    }
    return j.dump(2);
}

ClassifierBank bank_from_json(const std::string& text) {
    json j = json::parse(text);
    ClassifierBank bank;
    for (const auto& jh : j.at("heads")) bank.restore_head(head_from_json(jh));
    if (j.contains("bic")) {
        BiCLayer b;
        b.alpha = j["bic"].at("alpha");
        b.beta = j["bic"].at("beta");
        for (int c : j["bic"].at("new_class_ids").get<std::vector<int>>()) b.new_class_ids.insert(c);
        bank.set_bic(std::move(b));
    }
    return bank;
}

} // namespace cil
