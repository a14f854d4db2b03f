#include "cil/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

namespace cil {

namespace fs = std::filesystem;
using nlohmann::json;

std::string method_name(Method m) {
    switch (m) {
        case Method::Ours: return "ours";
        case Method::OursNoBic: return "ours_no_bic";
        case Method::OursNoFreeze: return "ours_no_freeze";
        case Method::Er: return "er";
        case Method::Gdumb: return "gdumb";
    }
    throw std::logic_error("method_name: bad enum");
}

Method method_from_name(const std::string& name) {
    if (name == "ours") return Method::Ours;
    if (name == "ours_no_bic") return Method::OursNoBic;
    if (name == "ours_no_freeze") return Method::OursNoFreeze;
    if (name == "er") return Method::Er;
    if (name == "gdumb") return Method::Gdumb;
    throw std::invalid_argument("config.method: unknown method '" + name + "'");
}

namespace {

constexpr std::uint64_t kTagData = 0x9D2C5680F0ABCD01ULL;
constexpr std::uint64_t kTagSplit = 0x3C6EF372FE94F82AULL;
constexpr std::uint64_t kTagTrain = 0x61C88646801F2E2BULL;

bool is_ours_family(Method m) {
    return m == Method::Ours || m == Method::OursNoBic || m == Method::OursNoFreeze;
}

LrSchedule default_schedule(Method m) {
    return is_ours_family(m) ? LrSchedule::Plateau : LrSchedule::Exponential;
}

} // namespace

std::uint64_t data_seed(std::uint64_t master) { return splitmix64(master ^ kTagData); }
std::uint64_t split_seed(std::uint64_t master) { return splitmix64(master ^ kTagSplit); }
// one train stream for every method: the comparison protocol feeds all
// methods identical data, shuffles and draws
std::uint64_t train_seed(std::uint64_t master) { return splitmix64(master ^ kTagTrain); }

int partial_head_width(int depth, int baseline_hidden, int total_classes, int num_splits) {
    long long group = total_classes / num_splits;
    long long budget = static_cast<long long>(depth) * baseline_hidden + baseline_hidden +
                       static_cast<long long>(baseline_hidden) * total_classes + total_classes;
    long long per_k = static_cast<long long>(num_splits) * (depth + 1 + group);
    long long fixed = static_cast<long long>(num_splits) * group;
    long long k = (budget - fixed) / per_k;
    return static_cast<int>(std::max(1LL, k));
}

std::uint64_t fnv1a64(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string stream_fingerprint(const SessionStream& stream) {
    std::ostringstream os;
    for (int c : stream.class_order) os << c << ',';
    os << '|';
    for (const auto& s : stream.sessions) {
        for (int c : s.class_ids) os << c << ',';
        os << ':' << s.train.size() << ':' << s.val.size() << ':' << s.test.size() << ';';
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(os.str())));
    return std::string(buf);
}

namespace {

SessionConfig session_from_json(const json& j, Method method) {
    SessionConfig cfg;
    cfg.lr_schedule = default_schedule(method);
    if (j.is_null()) return cfg;
    for (const auto& [key, value] : j.items()) {
        if (key == "lr0") cfg.lr0 = value;
        else if (key == "stop_patience") cfg.stop_patience = value;
        else if (key == "lr_patience") cfg.lr_patience = value;
        else if (key == "lr_decay_factor") cfg.lr_decay_factor = value;
        else if (key == "batch_size") cfg.batch_size = value;
        else if (key == "max_epochs") cfg.max_epochs = value;
        else if (key == "hidden_width") cfg.hidden_width = value;
        else if (key == "val_fraction") cfg.val_fraction = value;
        else if (key == "bic_epochs") cfg.bic_epochs = value;
        else if (key == "bic_lr") cfg.bic_lr = value;
        else if (key == "exp_decay_rate") cfg.exp_decay_rate = value;
        else if (key == "use_activation") cfg.use_activation = value;
        else if (key == "lr_schedule") {
            std::string s = value;
            if (s == "plateau") cfg.lr_schedule = LrSchedule::Plateau;
            else if (s == "exponential") cfg.lr_schedule = LrSchedule::Exponential;
            else throw std::invalid_argument("config.session.lr_schedule: unknown value '" + s + "'");
        } else {
            throw std::invalid_argument("config.session: unknown field '" + key + "'");
        }
    }
    return cfg;
}

json session_to_json(const SessionConfig& cfg) {
    json j;
    j["lr0"] = cfg.lr0;
    j["stop_patience"] = cfg.stop_patience;
    j["lr_patience"] = cfg.lr_patience;
    j["lr_decay_factor"] = cfg.lr_decay_factor;
    j["batch_size"] = cfg.batch_size;
    j["max_epochs"] = cfg.max_epochs;
    j["hidden_width"] = cfg.hidden_width;
    j["val_fraction"] = cfg.val_fraction;
    j["bic_epochs"] = cfg.bic_epochs;
    j["bic_lr"] = cfg.bic_lr;
    j["lr_schedule"] = cfg.lr_schedule == LrSchedule::Plateau ? "plateau" : "exponential";
    j["exp_decay_rate"] = cfg.exp_decay_rate;
    j["use_activation"] = cfg.use_activation;
    return j;
}

BlobSpec blobs_from_json(const json& j) {
    BlobSpec b;
    if (j.contains("num_classes")) b.num_classes = j["num_classes"];
    if (j.contains("dim")) b.dim = j["dim"];
    if (j.contains("n_train_per_class")) b.n_train_per_class = j["n_train_per_class"];
    if (j.contains("n_test_per_class")) b.n_test_per_class = j["n_test_per_class"];
    if (j.contains("separation")) b.separation = j["separation"];
    return b;
}

} // namespace

ExperimentConfig config_from_json(const json& j) {
    ExperimentConfig cfg;
    if (!j.contains("method")) throw std::invalid_argument("config.method: missing");
    cfg.method = method_from_name(j["method"].get<std::string>());

    if (!j.contains("dataset")) throw std::invalid_argument("config.dataset: missing");
    const json& ds = j["dataset"];
    bool has_blobs = ds.contains("blobs");
    bool has_files = ds.contains("feature_files");
    if (has_blobs == has_files)
        throw std::invalid_argument(
            "config.dataset: exactly one of 'blobs' or 'feature_files' required");
    if (has_blobs) cfg.blobs = blobs_from_json(ds["blobs"]);
    if (has_files) {
        const json& ff = ds["feature_files"];
        if (!ff.contains("train") || !ff.contains("test"))
            throw std::invalid_argument("config.dataset.feature_files: need 'train' and 'test'");
        cfg.feature_files = {ff["train"].get<std::string>(), ff["test"].get<std::string>()};
    }

    if (j.contains("num_splits")) cfg.num_splits = j["num_splits"];
    if (cfg.num_splits < 1) throw std::invalid_argument("config.num_splits: must be >= 1");
    if (j.contains("memory_capacity")) cfg.memory_capacity = j["memory_capacity"];
    if (j.contains("seed")) cfg.seed = j["seed"];
    if (j.contains("output_dir")) cfg.output_dir = j["output_dir"];
    cfg.session = session_from_json(j.contains("session") ? j["session"] : json(), cfg.method);

    for (const auto& [key, value] : j.items()) {
        (void)value;
        if (key != "method" && key != "dataset" && key != "num_splits" &&
            key != "memory_capacity" && key != "seed" && key != "output_dir" && key != "session")
            throw std::invalid_argument("config: unknown field '" + key + "'");
    }
    return cfg;
}

ExperimentConfig config_from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file " + path);
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw std::runtime_error(path + ": " + e.what());
    }
    return config_from_json(j);
}

json config_to_json(const ExperimentConfig& cfg) {
    json j;
    j["method"] = method_name(cfg.method);
    if (cfg.blobs) {
        const auto& b = *cfg.blobs;
        j["dataset"]["blobs"] = {{"num_classes", b.num_classes},
                                 {"dim", b.dim},
                                 {"n_train_per_class", b.n_train_per_class},
                                 {"n_test_per_class", b.n_test_per_class},
                                 {"separation", b.separation}};
    } else if (cfg.feature_files) {
        j["dataset"]["feature_files"] = {{"train", cfg.feature_files->first},
                                         {"test", cfg.feature_files->second}};
    }
    j["num_splits"] = cfg.num_splits;
    j["memory_capacity"] = cfg.memory_capacity;
    j["seed"] = cfg.seed;
    j["session"] = session_to_json(cfg.session);
    return j;
}

namespace {

struct SessionOutcome {
    SessionReport report;
    std::vector<double> acc_row;
    double seen_accuracy = 0.0;
    std::vector<int> class_ids;
    int seen_classes = 0;
};

std::vector<double> accuracy_row(const PredictFn& predict, const SessionStream& stream,
                                 int upto) {
    std::vector<double> row;
    for (int j = 0; j <= upto; ++j) {
        const Dataset& test = stream.sessions[static_cast<std::size_t>(j)].test;
        if (test.empty())
            throw std::runtime_error("evaluate: empty test set for session " + std::to_string(j));
        row.push_back(evaluate(predict, test));
    }
    return row;
}

double seen_accuracy_direct(const PredictFn& predict, const SessionStream& stream, int upto) {
    long long correct = 0, total = 0;
    for (int j = 0; j <= upto; ++j) {
        for (const auto& ex : stream.sessions[static_cast<std::size_t>(j)].test.examples) {
            if (predict(ex.features) == ex.label) ++correct;
            ++total;
        }
    }
    return static_cast<double>(correct) / static_cast<double>(total);
}

json report_json(const ExperimentConfig& cfg, const SessionStream& stream, int head_width,
                 const std::vector<SessionOutcome>& outcomes) {
    json j;
    j["config"] = config_to_json(cfg);
    j["method"] = method_name(cfg.method);
    j["head_width"] = head_width;
    j["stream_fingerprint"] = stream_fingerprint(stream);

    json sessions = json::array();
    AccuracyMatrix matrix;
    for (std::size_t i = 0; i < outcomes.size(); ++i) {
        const auto& o = outcomes[i];
        json s;
        s["session"] = i;
        s["class_ids"] = o.class_ids;
        s["seen_classes"] = o.seen_classes;
        s["epochs_run"] = o.report.epochs_run;
        s["best_epoch"] = o.report.best_epoch;
        s["lr_decays"] = o.report.lr_decays;
        s["train_losses"] = o.report.train_losses;
        s["val_losses"] = o.report.val_losses;
        s["alpha"] = o.report.alpha;
        s["beta"] = o.report.beta;
        json btc = json::object(), bvc = json::object();
        for (auto [c, n] : o.report.buffer_train_counts) btc[std::to_string(c)] = n;
        for (auto [c, n] : o.report.buffer_val_counts) bvc[std::to_string(c)] = n;
        s["buffer_train_counts"] = btc;
        s["buffer_val_counts"] = bvc;
        s["acc_row"] = o.acc_row;
        s["seen_accuracy"] = o.seen_accuracy;
        sessions.push_back(std::move(s));
        matrix.acc.push_back(o.acc_row);
        matrix.seen_accuracy.push_back(o.seen_accuracy);
    }
    j["sessions"] = std::move(sessions);

    // pad the matrix rows to a rectangle of nulls above the diagonal
    json acc = json::array();
    std::size_t t = matrix.acc.size();
    for (std::size_t i = 0; i < t; ++i) {
        json row = json::array();
        for (std::size_t k = 0; k < t; ++k) {
            if (k < matrix.acc[i].size()) row.push_back(matrix.acc[i][k]);
            else row.push_back(nullptr);
        }
        acc.push_back(std::move(row));
    }
    j["accuracy_matrix"] = std::move(acc);
    j["seen_accuracy"] = matrix.seen_accuracy;
    j["forgetting"] = forgetting(matrix);
    j["final_accuracy"] = matrix.seen_accuracy.empty() ? 0.0 : matrix.seen_accuracy.back();
    return j;
}

std::string curves_csv_from(const std::vector<SessionOutcome>& outcomes,
                            const std::string& method) {
    std::string csv = "session,seen_classes,method,accuracy\n";
    for (std::size_t i = 0; i < outcomes.size(); ++i) {
        csv += std::to_string(i) + ',' + std::to_string(outcomes[i].seen_classes) + ',' + method +
               ',' + format_double(outcomes[i].seen_accuracy) + '\n';
    }
    return csv;
}

} // namespace

ExperimentResult run_experiment_in_memory(const ExperimentConfig& cfg) {
    Dataset train, test;
    if (cfg.blobs) {
        Rng rng(data_seed(cfg.seed));
        const auto& b = *cfg.blobs;
        std::tie(train, test) = gen_gaussian_blobs(b.num_classes, b.dim, b.n_train_per_class,
                                                   b.n_test_per_class, b.separation, rng);
    } else if (cfg.feature_files) {
        train = load_feature_file(cfg.feature_files->first);
        test = load_feature_file(cfg.feature_files->second);
    } else {
        throw std::invalid_argument("config.dataset: no dataset source");
    }

    int num_classes = static_cast<int>(train.class_set.size());
    if (cfg.memory_capacity <= num_classes)
        throw std::invalid_argument("config.memory_capacity: must exceed the number of classes (" +
                                    std::to_string(num_classes) + ")");

    Rng srng(split_seed(cfg.seed));
    SessionStream stream =
        split_into_groups(train, test, cfg.num_splits, cfg.session.val_fraction, srng);

    int depth = train.feature_shape[2];
    SessionConfig scfg = cfg.session;
    int head_width = cfg.session.hidden_width;
    if (is_ours_family(cfg.method)) {
        head_width = partial_head_width(depth, cfg.session.hidden_width, num_classes,
                                        cfg.num_splits);
        scfg.hidden_width = head_width;
    }

    ReplayBuffer buffer(cfg.memory_capacity);
    Rng rng(train_seed(cfg.seed));
    std::vector<SessionOutcome> outcomes;

    ClassifierBank bank(depth);
    SingleHeadModel model;

    for (std::size_t i = 0; i < stream.sessions.size(); ++i) {
        const Session& sess = stream.sessions[i];
        SessionOutcome outcome;
        outcome.class_ids = sess.class_ids;

        PredictFn predict;
        switch (cfg.method) {
            case Method::Ours:
            case Method::OursNoBic:
            case Method::OursNoFreeze:
                outcome.report = train_session(bank, sess, buffer, scfg, rng,
                                               cfg.method != Method::OursNoFreeze,
                                               cfg.method != Method::OursNoBic);
                predict = [&bank](const Tensor& f) { return bank.predict(f, true); };
                break;
            case Method::Er:
                outcome.report = er_train_session(model, sess, buffer, scfg, rng);
                predict = [&model](const Tensor& f) { return model.predict(f, true); };
                break;
            case Method::Gdumb:
                outcome.report = gdumb_train_session(model, sess, buffer, scfg, rng);
                predict = [&model](const Tensor& f) { return model.predict(f, false); };
                break;
        }

        int upto = static_cast<int>(i);
        outcome.acc_row = accuracy_row(predict, stream, upto);
        outcome.seen_accuracy = seen_accuracy_direct(predict, stream, upto);
        outcome.seen_classes = (upto + 1) * (num_classes / cfg.num_splits);
        outcomes.push_back(std::move(outcome));
    }

    ExperimentResult result;
    result.report = report_json(cfg, stream, head_width, outcomes);
    result.curves_csv = curves_csv_from(outcomes, method_name(cfg.method));

    // final model checkpoint, written next to the report
    if (is_ours_family(cfg.method)) {
        result.model = json::parse(serialize_bank(bank));
    } else {
        json m;
        m["head"] = json::parse(serialize_head(model.head));
        m["bic"] = {{"alpha", model.bic.alpha},
                    {"beta", model.bic.beta},
                    {"new_class_ids",
                     std::vector<int>(model.bic.new_class_ids.begin(), model.bic.new_class_ids.end())}};
        result.model = std::move(m);
    }
    return result;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
    ExperimentResult result = run_experiment_in_memory(cfg);

    fs::path dir(cfg.output_dir);
    fs::create_directories(dir);
    result.report_path = (dir / "report.json").string();
    result.curves_path = (dir / "curves.csv").string();
    std::string model_path = (dir / "model.json").string();

    auto write_file = [](const std::string& path, const std::string& text) {
        std::ofstream out(path, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write " + path);
        out << text;
        if (!out) throw std::runtime_error("write failed: " + path);
    };
    try {
        write_file(result.report_path, result.report.dump(2) + '\n');
        write_file(result.curves_path, result.curves_csv);
        write_file(model_path, result.model.dump(2) + '\n');
    } catch (...) {
        std::error_code ec;
        fs::remove(result.report_path, ec);
        fs::remove(result.curves_path, ec);
        fs::remove(model_path, ec);
        throw;
    }
    return result;
}

namespace {

json load_report(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open report " + path);
    json j;
    in >> j;
    return j;
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    std::size_t n = v.size();
    if (n == 0) return std::nan("");
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

} // namespace

ComparisonTable compare_reports(const std::vector<std::string>& report_paths) {
    if (report_paths.empty()) throw std::invalid_argument("compare: no reports");
    std::vector<json> reports;
    for (const auto& p : report_paths) reports.push_back(load_report(p));

    const json& dataset0 = reports[0].at("config").at("dataset");
    for (const auto& r : reports)
        if (r.at("config").at("dataset") != dataset0)
            throw std::invalid_argument("compare: reports use different dataset specs");

    // group final accuracy by (method, splits, capacity); median across seeds
    std::map<std::string, std::map<std::pair<int, int>, std::vector<double>>> grouped;
    std::set<std::pair<int, int>> cells;
    std::vector<std::string> method_order;
    for (const auto& r : reports) {
        std::string m = r.at("method");
        int splits = r.at("config").at("num_splits");
        int cap = r.at("config").at("memory_capacity");
        if (std::find(method_order.begin(), method_order.end(), m) == method_order.end())
            method_order.push_back(m);
        grouped[m][{splits, cap}].push_back(r.at("final_accuracy").get<double>());
        cells.insert({splits, cap});
    }

    ComparisonTable table;
    table.methods = method_order;
    table.cells.assign(cells.begin(), cells.end());
    for (const auto& m : table.methods) {
        std::vector<double> row;
        for (const auto& cell : table.cells) {
            auto it = grouped[m].find(cell);
            row.push_back(it == grouped[m].end() ? std::nan("") : median(it->second));
        }
        table.values.push_back(std::move(row));
    }
    return table;
}

std::string ComparisonTable::to_csv() const {
    std::string csv = "method";
    for (const auto& [splits, cap] : cells)
        csv += ",splits=" + std::to_string(splits) + ";memory=" + std::to_string(cap);
    csv += '\n';
    for (std::size_t i = 0; i < methods.size(); ++i) {
        csv += methods[i];
        for (double v : values[i]) csv += ',' + (std::isnan(v) ? std::string() : format_double(v));
        csv += '\n';
    }
    return csv;
}

std::string ComparisonTable::to_console() const {
    std::ostringstream os;
    os << "final seen-class accuracy (median over seeds)\n";
    os << "  method";
    for (const auto& [splits, cap] : cells) os << "  s" << splits << "/B" << cap;
    os << '\n';
    for (std::size_t i = 0; i < methods.size(); ++i) {
        os << "  " << methods[i];
        for (double v : values[i]) {
            char buf[32];
            if (std::isnan(v)) std::snprintf(buf, sizeof(buf), "   -  ");
            else std::snprintf(buf, sizeof(buf), "  %.4f", v);
            os << buf;
        }
        os << '\n';
    }
    return os.str();
}

std::string merged_curves_csv(const std::vector<std::string>& report_paths) {
    std::vector<json> reports;
    for (const auto& p : report_paths) reports.push_back(load_report(p));

    bool uniform_cell = true;
    int splits0 = reports[0].at("config").at("num_splits");
    int cap0 = reports[0].at("config").at("memory_capacity");
    for (const auto& r : reports)
        if (r.at("config").at("num_splits") != splits0 ||
            r.at("config").at("memory_capacity") != cap0)
            uniform_cell = false;

    // median per (label, session) across seeds
    std::map<std::pair<std::string, int>, std::pair<int, std::vector<double>>> series;
    for (const auto& r : reports) {
        std::string label = r.at("method");
        if (!uniform_cell)
            label += "[s=" + std::to_string(r.at("config").at("num_splits").get<int>()) +
                     ",B=" + std::to_string(r.at("config").at("memory_capacity").get<int>()) + "]";
        const auto& sessions = r.at("sessions");
        for (const auto& s : sessions) {
            int idx = s.at("session");
            auto& entry = series[{label, idx}];
            entry.first = s.at("seen_classes");
            entry.second.push_back(s.at("seen_accuracy").get<double>());
        }
    }

    std::string csv = "session,seen_classes,method,accuracy\n";
    for (const auto& [key, entry] : series) {
        csv += std::to_string(key.second) + ',' + std::to_string(entry.first) + ',' + key.first +
               ',' + format_double(median(entry.second)) + '\n';
    }
    return csv;
}

void generate_data(const std::string& spec_path, const std::string& out_dir) {
    std::ifstream in(spec_path);
    if (!in) throw std::runtime_error("cannot open spec file " + spec_path);
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw std::runtime_error(spec_path + ": " + e.what());
    }
    if (!j.contains("blobs")) throw std::invalid_argument("spec.blobs: missing");
    BlobSpec b = blobs_from_json(j["blobs"]);
    std::uint64_t seed = j.contains("seed") ? j["seed"].get<std::uint64_t>() : 1;

    Rng rng(data_seed(seed));
    auto [train, test] =
        gen_gaussian_blobs(b.num_classes, b.dim, b.n_train_per_class, b.n_test_per_class,
                           b.separation, rng);

    fs::path dir(out_dir);
    fs::create_directories(dir);
    std::string train_path = (dir / "train.csv").string();
    std::string test_path = (dir / "test.csv").string();
    try {
        save_feature_file(train, train_path);
        save_feature_file(test, test_path);
    } catch (...) {
        std::error_code ec;
        fs::remove(train_path, ec);
        fs::remove(test_path, ec);
        throw;
    }
}

} // namespace cil
