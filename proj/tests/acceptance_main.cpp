// Acceptance suite: one check per criterion, one PASS/FAIL line each.
// Run via ctest or directly; exits nonzero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <climits>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "cil/baselines.hpp"
#include "cil/experiment.hpp"

using namespace cil;
namespace fs = std::filesystem;

namespace {

double elapsed_sec(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double rel_err(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    std::size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// ---------------------------------------------------------------------------
// 1. gradient oracle: bank loss and BiC parameters vs central differences
// ---------------------------------------------------------------------------
bool criterion_gradients(std::string& detail) {
    auto t0 = std::chrono::steady_clock::now();
    Rng rng(101);
    double worst = 0.0;

    for (int trial = 0; trial < 10; ++trial) {
        int depth = 2 + static_cast<int>(rng.next_below(15));  // <= 16
        int hidden = 1 + static_cast<int>(rng.next_below(8));  // <= 8
        int m1 = 1 + static_cast<int>(rng.next_below(5));
        int m2 = 1 + static_cast<int>(rng.next_below(5));      // C <= 10
        bool activation = trial % 2 == 0;
        bool spatial = trial % 3 == 0;

        ClassifierBank bank(depth);
        std::vector<int> ids1, ids2;
        for (int j = 0; j < m1; ++j) ids1.push_back(j);
        for (int j = 0; j < m2; ++j) ids2.push_back(m1 + j);
        bank.add_classifier(ids1, hidden, rng, activation);
        bank.add_classifier(ids2, hidden, rng, activation);

        std::vector<LabeledExample> batch;
        int h = spatial ? 2 : 1, w = spatial ? 2 : 1;
        for (int b = 0; b < 5; ++b) {
            Tensor f = Tensor::zeros({h, w, depth});
            for (auto& v : f.data) v = rng.uniform(-2.0, 2.0);
            batch.push_back({std::move(f), static_cast<int>(rng.next_below(
                                               static_cast<std::uint64_t>(m1 + m2)))});
        }
        std::vector<const LabeledExample*> ptrs;
        for (const auto& ex : batch) ptrs.push_back(&ex);

        BankGrads analytic = loss_and_grads(bank, ptrs);
        int head_idx = analytic.heads[0].first;
        const HeadGrads& g = analytic.heads[0].second;

        auto check = [&](Tensor PartialClassifier::* member, const Tensor& grad) {
            Tensor original = bank.head(head_idx).*member;
            auto f = [&](const Tensor& candidate) {
                ClassifierBank probe = bank;
                probe.head(head_idx).*member = candidate;
                double total = 0.0;
                for (const auto* ex : ptrs) {
                    Tensor probs = softmax(probe.forward(ex->features));
                    total += cross_entropy(probs, probe.logit_index_of(ex->label));
                }
                return total / static_cast<double>(ptrs.size());
            };
            Tensor numeric = finite_diff_grad(f, original, 1e-4);
            for (std::size_t i = 0; i < numeric.size(); ++i)
                worst = std::max(worst, rel_err(grad[i], numeric[i]));
        };
        check(&PartialClassifier::w_proj, g.w_proj);
        check(&PartialClassifier::b_proj, g.b_proj);
        check(&PartialClassifier::w_out, g.w_out);
        check(&PartialClassifier::b_out, g.b_out);
    }

    // BiC objective gradients
    for (int trial = 0; trial < 10; ++trial) {
        int c = 4 + static_cast<int>(rng.next_below(7));
        std::vector<Tensor> logits;
        std::vector<int> targets;
        std::vector<char> is_new(static_cast<std::size_t>(c), 0);
        for (int k = c / 2; k < c; ++k) is_new[static_cast<std::size_t>(k)] = 1;
        for (int i = 0; i < 8; ++i) {
            Tensor o = Tensor::zeros({c});
            for (auto& v : o.data) v = rng.uniform(-3.0, 3.0);
            logits.push_back(std::move(o));
            targets.push_back(static_cast<int>(rng.next_below(static_cast<std::uint64_t>(c))));
        }
        double alpha = rng.uniform(0.3, 1.7), beta = rng.uniform(-1.5, 1.5);
        BicGrads g = bic_loss_and_grads(logits, targets, is_new, alpha, beta);
        auto f = [&](const Tensor& ab) {
            return bic_loss_and_grads(logits, targets, is_new, ab[0], ab[1]).loss;
        };
        Tensor numeric = finite_diff_grad(f, Tensor({2}, {alpha, beta}), 1e-4);
        worst = std::max(worst, rel_err(g.dalpha, numeric[0]));
        worst = std::max(worst, rel_err(g.dbeta, numeric[1]));
    }

    double secs = elapsed_sec(t0);
    char buf[128];
    std::snprintf(buf, sizeof(buf), "max rel err %.2e, %.2f s", worst, secs);
    detail = buf;
    return worst < 1e-5 && secs < 5.0;
}

// ---------------------------------------------------------------------------
// 2. frozen immutability across a 5-session run
// ---------------------------------------------------------------------------
std::string canonical_head_bytes(const PartialClassifier& head) {
    PartialClassifier copy = head;
    copy.frozen = true; // the flag flips at the next session start; weights may not
    return serialize_head(copy);
}

bool criterion_frozen(std::string& detail) {
    Rng gen(202);
    auto [train, test] = gen_gaussian_blobs(10, 8, 30, 10, 3.0, gen);
    Rng srng(7);
    SessionStream stream = split_into_groups(train, test, 5, 0.10, srng);

    SessionConfig cfg;
    cfg.hidden_width = 6;
    cfg.max_epochs = 40;

    ClassifierBank bank(8);
    ReplayBuffer buffer(60);
    Rng rng(303);

    // fixed probes
    std::vector<Tensor> probes;
    Rng prng(404);
    for (int i = 0; i < 100; ++i) {
        Tensor f = Tensor::zeros({1, 1, 8});
        for (auto& v : f.data) v = prng.uniform(-3.0, 3.0);
        probes.push_back(std::move(f));
    }

    std::vector<std::string> bytes_after; // per head, from the session that trained it
    std::vector<std::vector<double>> probe_prefix(100);

    for (std::size_t s = 0; s < stream.sessions.size(); ++s) {
        train_session(bank, stream.sessions[s], buffer, cfg, rng);

        // every previously trained head must serialize to the exact old bytes
        for (std::size_t h = 0; h < bytes_after.size(); ++h)
            if (canonical_head_bytes(bank.head(static_cast<int>(h))) != bytes_after[h]) {
                detail = "head " + std::to_string(h) + " changed during session " +
                         std::to_string(s);
                return false;
            }
        bytes_after.push_back(canonical_head_bytes(bank.heads().back()));

        // old positions of the forward output must be bit-identical
        for (int p = 0; p < 100; ++p) {
            Tensor out = bank.forward(probes[static_cast<std::size_t>(p)]);
            const auto& prev = probe_prefix[static_cast<std::size_t>(p)];
            for (std::size_t k = 0; k < prev.size(); ++k)
                if (out[k] != prev[k]) {
                    detail = "probe logit " + std::to_string(k) + " moved in session " +
                             std::to_string(s);
                    return false;
                }
            probe_prefix[static_cast<std::size_t>(p)] =
                std::vector<double>(out.data.begin(), out.data.end());
        }
    }
    detail = "5 sessions, 100 probes, heads byte-stable";
    return true;
}

// ---------------------------------------------------------------------------
// 3. buffer fuzz: 10,000 operations
// ---------------------------------------------------------------------------
bool criterion_buffer_fuzz(std::string& detail) {
    auto t0 = std::chrono::steady_clock::now();
    Rng driver(505);
    long ops = 0;
    while (ops < 10000) {
        int capacity = 8 + static_cast<int>(driver.next_below(249));
        int num_classes = 2 + static_cast<int>(driver.next_below(49));
        ReplayBuffer buffer(capacity);
        Rng rng(driver.next_u64());
        std::map<int, long> supplied_train, supplied_val;

        for (int op = 0; op < 50 && ops < 10000; ++op, ++ops) {
            bool to_val = driver.next_below(4) == 0;
            Partition part = to_val ? Partition::Val : Partition::Train;
            auto& supplied = to_val ? supplied_val : supplied_train;
            int part_cap = to_val ? buffer.val_capacity() : buffer.train_capacity();

            if (driver.next_below(5) == 0 && !buffer.empty(part)) {
                // sampling op: distinct without replacement
                int k = 1 + static_cast<int>(driver.next_below(buffer.size(part)));
                auto batch = buffer.sample_batch(part, k, rng);
                std::set<std::pair<double, double>> distinct;
                for (const auto& ex : batch)
                    distinct.insert({ex.features.data[0], ex.features.data[1]});
                if (static_cast<int>(distinct.size()) != k) {
                    detail = "sample without replacement returned duplicates";
                    return false;
                }
                continue;
            }

            std::vector<LabeledExample> incoming;
            int groups = 1 + static_cast<int>(driver.next_below(3));
            for (int g = 0; g < groups; ++g) {
                int cls = static_cast<int>(
                    driver.next_below(static_cast<std::uint64_t>(num_classes)));
                int n = 1 + static_cast<int>(driver.next_below(24));
                for (int i = 0; i < n; ++i) {
                    double uid = static_cast<double>(ops) * 1000.0 + g * 100.0 + i;
                    incoming.push_back(
                        {Tensor({1, 1, 2}, {uid, to_val ? 1.0 : 0.0}), cls});
                    ++supplied[cls];
                }
            }
            buffer.update(part, incoming, rng);

            if (static_cast<int>(buffer.size(Partition::Train)) > buffer.train_capacity() ||
                static_cast<int>(buffer.size(Partition::Val)) > buffer.val_capacity()) {
                detail = "capacity exceeded";
                return false;
            }
            for (const auto& ex : buffer.part(Partition::Val))
                if (ex.features.data[1] != 1.0) {
                    detail = "train-provenance example in the val partition";
                    return false;
                }
            for (const auto& ex : buffer.part(Partition::Train))
                if (ex.features.data[1] != 0.0) {
                    detail = "val-provenance example in the train partition";
                    return false;
                }

            auto counts = buffer.class_counts(part);
            std::set<int> seen;
            for (auto [c, n] : counts) seen.insert(c);
            int nc = static_cast<int>(seen.size());
            if (nc > 0) {
                int base = part_cap / nc, rem = part_cap % nc;
                int idx = 0, lo = INT_MAX, hi = INT_MIN;
                for (int c : seen) {
                    int quota = base + (idx++ < rem ? 1 : 0);
                    if (supplied[c] >= quota) {
                        lo = std::min(lo, counts[c]);
                        hi = std::max(hi, counts[c]);
                    }
                }
                if (lo <= hi && hi - lo > 1) {
                    detail = "balance violated: spread " + std::to_string(hi - lo);
                    return false;
                }
            }
        }
    }
    double secs = elapsed_sec(t0);
    char buf[96];
    std::snprintf(buf, sizeof(buf), "10000 ops, %.2f s", secs);
    detail = buf;
    return secs < 10.0;
}

// ---------------------------------------------------------------------------
// 4. single-session equivalence of the method and ER
// ---------------------------------------------------------------------------
bool criterion_equivalence(std::string& detail) {
    Rng gen(data_seed(42));
    auto [train, test] = gen_gaussian_blobs(20, 32, 100, 50, 3.0, gen);
    Rng s1(split_seed(42)), s2(split_seed(42));
    SessionStream stream_a = split_into_groups(train, test, 1, 0.10, s1);
    SessionStream stream_b = split_into_groups(train, test, 1, 0.10, s2);

    SessionConfig cfg;
    cfg.hidden_width = 16;
    cfg.max_epochs = 40;
    cfg.lr_schedule = LrSchedule::Exponential; // matched schedule on both sides

    if (partial_head_width(32, cfg.hidden_width, 20, 1) != cfg.hidden_width) {
        detail = "width sizing does not degenerate to the baseline";
        return false;
    }

    ClassifierBank bank(32);
    ReplayBuffer buf_a(120);
    Rng ra(train_seed(42));
    train_session(bank, stream_a.sessions[0], buf_a, cfg, ra);

    SingleHeadModel model;
    ReplayBuffer buf_b(120);
    Rng rb(train_seed(42));
    er_train_session(model, stream_b.sessions[0], buf_b, cfg, rb);

    long long n = 0;
    for (const auto& ex : stream_a.sessions[0].test.examples) {
        if (bank.predict(ex.features, true) != model.predict(ex.features, true)) {
            detail = "prediction mismatch on test example " + std::to_string(n);
            return false;
        }
        ++n;
    }
    detail = std::to_string(n) + " test predictions identical";
    return true;
}

// ---------------------------------------------------------------------------
// 5 & 6. desk-scale grid reproduction and ablation directionality
// ---------------------------------------------------------------------------
// Calibrated once against the joint-training oracle on this data. The narrow
// baseline head mirrors the paper's rank-deficient single head (85 filters
// for 100 classes there, 20 for 20 classes here); lr 0.01 is the paper's.
nlohmann::json grid_config(const std::string& method, int splits, int capacity,
                           std::uint64_t seed) {
    nlohmann::json j;
    j["method"] = method;
    j["dataset"]["blobs"] = {{"num_classes", 20},
                             {"dim", 32},
                             {"n_train_per_class", 100},
                             {"n_test_per_class", 50},
                             {"separation", 3.0}};
    j["num_splits"] = splits;
    j["memory_capacity"] = capacity;
    j["seed"] = seed;
    j["session"] = {{"max_epochs", 400},
                    {"hidden_width", 20},
                    {"bic_epochs", 500},
                    {"bic_lr", 0.1}};
    return j;
}

struct GridResults {
    // (method, splits, capacity) -> final accuracies over seeds
    std::map<std::tuple<std::string, int, int>, std::vector<double>> cells;
    double run(const std::string& method, int splits, int capacity, std::uint64_t seed) {
        ExperimentConfig cfg = config_from_json(grid_config(method, splits, capacity, seed));
        ExperimentResult r = run_experiment_in_memory(cfg);
        double acc = r.report.at("final_accuracy");
        cells[{method, splits, capacity}].push_back(acc);
        return acc;
    }
    double med(const std::string& method, int splits, int capacity) {
        return median(cells.at({method, splits, capacity}));
    }
};

GridResults g_grid; // shared between criteria 5 and 6

bool criterion_grid(std::string& detail) {
    auto t0 = std::chrono::steady_clock::now();
    const std::vector<int> splits_grid = {5, 10};
    const std::vector<int> caps_grid = {100, 200};
    const std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};

    for (const std::string method : {"ours", "er", "gdumb"})
        for (int splits : splits_grid)
            for (int cap : caps_grid)
                for (auto seed : seeds) g_grid.run(method, splits, cap, seed);

    // joint-training oracle: the ceiling this data admits (calibration anchor)
    std::vector<double> joint;
    for (auto seed : seeds) joint.push_back(g_grid.run("er", 1, 200, seed));
    double joint_med = median(joint);

    bool ordered = true;
    int margin_cells = 0, total_cells = 0;
    std::string table;
    for (int splits : splits_grid) {
        for (int cap : caps_grid) {
            double ours = g_grid.med("ours", splits, cap);
            double er = g_grid.med("er", splits, cap);
            double gd = g_grid.med("gdumb", splits, cap);
            char line[128];
            std::snprintf(line, sizeof(line),
                          "    splits=%2d B=%3d  ours=%.4f er=%.4f gdumb=%.4f\n", splits, cap,
                          ours, er, gd);
            table += line;
            ordered = ordered && ours >= er && er >= gd;
            if (ours - er >= 0.02) ++margin_cells;
            ++total_cells;
        }
    }
    std::printf("%s    joint oracle median=%.4f\n", table.c_str(), joint_med);

    // golden bounds frozen from the calibration run (5-seed medians: ours
    // 0.58/0.64/0.52/0.56 across the cells, gdumb near chance), with slack
    // for libm differences across platforms
    bool golden = joint_med >= 0.40 && g_grid.med("ours", 5, 200) >= 0.55 &&
                  g_grid.med("ours", 10, 200) >= 0.45 &&
                  g_grid.med("gdumb", 10, 200) <= joint_med;

    double secs = elapsed_sec(t0);
    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "ordered=%s margin cells=%d/%d joint=%.3f, %.0f s", ordered ? "yes" : "no",
                  margin_cells, total_cells, joint_med, secs);
    detail = buf;
    return ordered && margin_cells * 2 >= total_cells && golden && secs < 600.0;
}

bool criterion_ablation(std::string& detail) {
    const std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
    for (const std::string method : {"ours_no_bic", "ours_no_freeze"})
        for (auto seed : seeds) g_grid.run(method, 10, 200, seed);

    double ours = g_grid.med("ours", 10, 200);
    double no_bic = g_grid.med("ours_no_bic", 10, 200);
    double no_freeze = g_grid.med("ours_no_freeze", 10, 200);

    char buf[128];
    std::snprintf(buf, sizeof(buf), "ours=%.4f no_bic=%.4f no_freeze=%.4f", ours, no_bic,
                  no_freeze);
    detail = buf;
    return ours >= no_bic && ours >= no_freeze;
}

// ---------------------------------------------------------------------------
// 7. BiC behavior on a synthetically biased bank
// ---------------------------------------------------------------------------
bool criterion_bic(std::string& detail) {
    Rng gen(707);
    auto [train, test] = gen_gaussian_blobs(8, 12, 40, 20, 4.0, gen);
    Rng srng(8);
    SessionStream stream = split_into_groups(train, test, 2, 0.25, srng);

    SessionConfig cfg;
    cfg.hidden_width = 8;
    cfg.max_epochs = 50;
    ClassifierBank bank(12);
    ReplayBuffer buffer(120, 40);
    Rng rng(808);
    train_session(bank, stream.sessions[0], buffer, cfg, rng);
    train_session(bank, stream.sessions[1], buffer, cfg, rng);

    // bias the new head
    for (auto& v : bank.head(1).b_out.data) v += 5.0;

    const auto& last_ids = bank.head(1).class_ids;
    std::set<int> last_group(last_ids.begin(), last_ids.end());

    auto val_loss = [&](const BiCLayer& layer) {
        double total = 0.0;
        for (const auto& ex : buffer.part(Partition::Val)) {
            Tensor q = apply_bic(bank.forward(ex.features), layer, bank);
            total += cross_entropy(softmax(q), bank.logit_index_of(ex.label));
        }
        return total / static_cast<double>(buffer.size(Partition::Val));
    };

    Dataset old_test;
    for (const auto& ex : stream.sessions[0].test.examples) old_test.add(ex);

    BiCLayer identity;
    identity.new_class_ids = last_group;
    double loss_identity = val_loss(identity);
    double bias_identity = last_group_bias(
        confusion_matrix([&](const Tensor& f) { return bank.predict(f, false); }, old_test,
                         bank.all_class_ids()),
        last_group);

    SessionConfig bic_cfg = cfg;
    bic_cfg.bic_epochs = 2000;
    bic_cfg.bic_lr = 0.1;
    fit_bic(bank, buffer, bic_cfg, rng);
    double loss_fitted = val_loss(*bank.bic());
    double bias_fitted = last_group_bias(
        confusion_matrix([&](const Tensor& f) { return bank.predict(f, true); }, old_test,
                         bank.all_class_ids()),
        last_group);

    // old-class logits bit-identical through apply_bic, any inputs
    for (const auto& ex : test.examples) {
        Tensor raw = bank.forward(ex.features);
        Tensor adj = apply_bic(raw, *bank.bic(), bank);
        for (int id : bank.head(0).class_ids) {
            int pos = bank.logit_index_of(id);
            if (adj[static_cast<std::size_t>(pos)] != raw[static_cast<std::size_t>(pos)]) {
                detail = "old-class logit moved under apply_bic";
                return false;
            }
        }
    }

    char buf[160];
    std::snprintf(buf, sizeof(buf), "loss %.4f->%.4f bias %.3f->%.3f", loss_identity,
                  loss_fitted, bias_identity, bias_fitted);
    detail = buf;
    return loss_fitted < loss_identity && bias_fitted < bias_identity;
}

// ---------------------------------------------------------------------------
// 8. determinism: reruns byte-identical, feature files lossless
// ---------------------------------------------------------------------------
std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
}

bool criterion_determinism(std::string& detail) {
    nlohmann::json j = grid_config("ours", 5, 100, 9);
    j["dataset"]["blobs"]["n_train_per_class"] = 30;
    j["dataset"]["blobs"]["n_test_per_class"] = 10;
    j["session"]["max_epochs"] = 25;

    ExperimentConfig cfg = config_from_json(j);
    std::string out1 = (fs::temp_directory_path() / "cil_acc_det1").string();
    std::string out2 = (fs::temp_directory_path() / "cil_acc_det2").string();
    cfg.output_dir = out1;
    run_experiment(cfg);
    cfg.output_dir = out2;
    run_experiment(cfg);
    bool same = read_file(out1 + "/report.json") == read_file(out2 + "/report.json");
    fs::remove_all(out1);
    fs::remove_all(out2);
    if (!same) {
        detail = "report.json differs between reruns";
        return false;
    }

    Rng gen(999);
    auto [train, test] = gen_gaussian_blobs(10, 7, 100, 0, 2.0, gen);
    std::string path = (fs::temp_directory_path() / "cil_acc_feat.csv").string();
    save_feature_file(train, path);
    Dataset loaded = load_feature_file(path);
    fs::remove(path);
    if (loaded.size() != train.size()) {
        detail = "feature file lost rows";
        return false;
    }
    for (std::size_t i = 0; i < train.size(); ++i) {
        if (loaded.examples[i].label != train.examples[i].label ||
            loaded.examples[i].features.data != train.examples[i].features.data) {
            detail = "feature file round trip not lossless at row " + std::to_string(i);
            return false;
        }
    }
    detail = "rerun byte-identical; 1000-example round trip lossless";
    return true;
}

// ---------------------------------------------------------------------------
// 9. softmax / cross-entropy unit facts
// ---------------------------------------------------------------------------
bool criterion_softmax(std::string& detail) {
    Tensor two({2}, {0.0, 0.0});
    Tensor p = softmax(two);
    if (p[0] != 0.5 || p[1] != 0.5) {
        detail = "softmax([0,0]) != [0.5,0.5]";
        return false;
    }

    Tensor big({3}, {1000.0, 1000.0, 1000.0});
    p = softmax(big);
    for (int i = 0; i < 3; ++i)
        if (std::abs(p[static_cast<std::size_t>(i)] - 1.0 / 3.0) > 1e-15) {
            detail = "huge uniform logits not uniform";
            return false;
        }

    Rng rng(111);
    for (int trial = 0; trial < 100; ++trial) {
        int n = 1 + static_cast<int>(rng.next_below(12));
        Tensor v = Tensor::zeros({n});
        for (auto& x : v.data)
            x = static_cast<double>(static_cast<long long>(rng.next_below(961)) - 480) / 16.0;
        Tensor probs = softmax(v);
        double sum = 0.0;
        for (double x : probs.data) sum += x;
        if (std::abs(sum - 1.0) > 1e-12) {
            detail = "normalization worse than 1e-12";
            return false;
        }
        double c = static_cast<double>(rng.next_below(1001)) - 500.0;
        Tensor shifted = v;
        for (auto& x : shifted.data) x += c;
        Tensor q = softmax(shifted);
        for (std::size_t i = 0; i < probs.size(); ++i)
            if (probs[i] != q[i]) {
                detail = "shift invariance broke";
                return false;
            }
    }

    for (int cc = 2; cc <= 16; ++cc) {
        Tensor uniform = Tensor::zeros({cc});
        for (auto& x : uniform.data) x = 1.0 / cc;
        for (int t = 0; t < cc; ++t)
            if (std::abs(cross_entropy(uniform, t) - std::log(static_cast<double>(cc))) >
                1e-12) {
                detail = "uniform cross entropy != ln C";
                return false;
            }
    }
    Tensor onehot({4}, {0.0, 0.0, 1.0, 0.0});
    if (cross_entropy(onehot, 2) != 0.0) {
        detail = "perfect prediction loss nonzero";
        return false;
    }
    detail = "normalization, shift invariance, ln C checks exact";
    return true;
}

} // namespace

int main() {
    struct Criterion {
        int id;
        const char* name;
        std::function<bool(std::string&)> run;
    };
    std::vector<Criterion> criteria = {
        {1, "gradient oracle (bank loss + BiC, rel err < 1e-5)", criterion_gradients},
        {2, "frozen classifier immutability", criterion_frozen},
        {3, "buffer capacity/balance/provenance fuzz", criterion_buffer_fuzz},
        {4, "single-session equivalence of ours and ER", criterion_equivalence},
        {5, "desk-scale grid: ours >= er >= gdumb", criterion_grid},
        {6, "ablations: ours >= no_bic, ours >= no_freeze", criterion_ablation},
        {7, "BiC corrects a synthetic bias", criterion_bic},
        {8, "byte-identical reruns and lossless feature files", criterion_determinism},
        {9, "softmax / cross-entropy exact facts", criterion_softmax},
    };

    int failures = 0;
    for (auto& c : criteria) {
        std::string detail;
        bool ok = false;
        try {
            ok = c.run(detail);
        } catch (const std::exception& e) {
            detail = std::string("exception: ") + e.what();
        }
        std::printf("%s  %d. %s  (%s)\n", ok ? "PASS" : "FAIL", c.id, c.name, detail.c_str());
        std::fflush(stdout);
        if (!ok) ++failures;
    }
    if (failures > 0) std::printf("%d criterion(s) failed\n", failures);
    return failures == 0 ? 0 : 1;
}
