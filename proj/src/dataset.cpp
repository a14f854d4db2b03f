#include "cil/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace cil {

SessionStream split_into_groups(const Dataset& dataset, const Dataset& test_set, int num_splits,
                                double val_fraction, Rng& rng) {
    if (num_splits < 1)
        throw std::invalid_argument("split_into_groups: num_splits must be >= 1");
    if (!(val_fraction > 0.0 && val_fraction < 1.0))
        throw std::invalid_argument("split_into_groups: val_fraction must be in (0,1)");
    if (dataset.empty())
        throw std::invalid_argument("split_into_groups: empty dataset");

    std::vector<int> classes(dataset.class_set.begin(), dataset.class_set.end());
    int num_classes = static_cast<int>(classes.size());
    if (num_classes % num_splits != 0)
        throw std::invalid_argument("split_into_groups: class count not divisible by num_splits");
    for (int c : test_set.class_set)
        if (!dataset.class_set.count(c))
            throw std::invalid_argument("split_into_groups: test class " + std::to_string(c) +
                                        " absent from train data");

    // class order first: it must depend only on (rng stream, class count)
    std::vector<int> perm = rng_shuffle(rng, num_classes);
    std::vector<int> class_order(static_cast<std::size_t>(num_classes));
    for (int i = 0; i < num_classes; ++i) class_order[i] = classes[perm[i]];

    std::map<int, std::vector<std::size_t>> by_class;
    for (std::size_t i = 0; i < dataset.size(); ++i)
        by_class[dataset.examples[i].label].push_back(i);

    // per-class stratified train/val pick, consumed in class_order order so it
    // is independent of num_splits as well
    std::map<int, std::vector<std::size_t>> val_idx, train_idx;
    for (int c : class_order) {
        const auto& idx = by_class[c];
        int n = static_cast<int>(idx.size());
        if (n == 0) throw std::invalid_argument("split_into_groups: empty class");
        int n_val = static_cast<int>(std::llround(val_fraction * n));
        std::vector<int> p = rng_shuffle(rng, n);
        std::vector<std::size_t> v, t;
        for (int i = 0; i < n; ++i)
            (i < n_val ? v : t).push_back(idx[p[i]]);
        std::sort(v.begin(), v.end());
        std::sort(t.begin(), t.end());
        val_idx[c] = std::move(v);
        train_idx[c] = std::move(t);
    }

    std::map<int, std::vector<std::size_t>> test_by_class;
    for (std::size_t i = 0; i < test_set.size(); ++i)
        test_by_class[test_set.examples[i].label].push_back(i);

    int group = num_classes / num_splits;
    SessionStream stream;
    stream.class_order = class_order;
    for (int s = 0; s < num_splits; ++s) {
        Session sess;
        for (int k = 0; k < group; ++k) {
            int c = class_order[static_cast<std::size_t>(s) * group + k];
            sess.class_ids.push_back(c);
            for (auto i : train_idx[c]) sess.train.add(dataset.examples[i]);
            for (auto i : val_idx[c]) sess.val.add(dataset.examples[i]);
            for (auto i : test_by_class[c]) sess.test.add(test_set.examples[i]);
        }
        stream.sessions.push_back(std::move(sess));
    }
    return stream;
}

std::pair<Dataset, Dataset> gen_gaussian_blobs(int num_classes, int dim, int n_train_per_class,
                                               int n_test_per_class, double separation, Rng& rng) {
    if (dim < 2) throw std::invalid_argument("gen_gaussian_blobs: dim must be >= 2");
    if (!(separation > 0.0))
        throw std::invalid_argument("gen_gaussian_blobs: separation must be > 0");
    if (num_classes < 1 || n_train_per_class < 1 || n_test_per_class < 0)
        throw std::invalid_argument("gen_gaussian_blobs: bad counts");

    Dataset train, test;
    for (int c = 0; c < num_classes; ++c) {
        std::vector<double> mean(static_cast<std::size_t>(dim));
        double norm = 0.0;
        for (auto& m : mean) {
            m = rng.gaussian();
            norm += m * m;
        }
        norm = std::sqrt(norm);
        for (auto& m : mean) m = separation * m / norm;

        auto draw = [&](Dataset& out) {
            Tensor f = Tensor::zeros({1, 1, dim});
            for (int d = 0; d < dim; ++d) f[static_cast<std::size_t>(d)] = mean[d] + rng.gaussian();
            out.add({std::move(f), c});
        };
        for (int i = 0; i < n_train_per_class; ++i) draw(train);
        for (int i = 0; i < n_test_per_class; ++i) draw(test);
    }
    return {std::move(train), std::move(test)};
}

std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

namespace {

[[noreturn]] void file_error(const std::string& path, std::size_t line, const std::string& msg) {
    throw std::runtime_error(path + ":" + std::to_string(line) + ": " + msg);
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        std::size_t pos = line.find(',', start);
        if (pos == std::string::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

double parse_double(const std::string& s, const std::string& path, std::size_t line) {
    double v = 0.0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
        file_error(path, line, "non-numeric field '" + s + "'");
    return v;
}

long parse_int(const std::string& s, const std::string& path, std::size_t line) {
    long v = 0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
        file_error(path, line, "non-integer field '" + s + "'");
    return v;
}

} // namespace

Dataset load_feature_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_feature_file: cannot open " + path);

    std::string line;
    std::size_t lineno = 0;

    if (!std::getline(in, line)) file_error(path, 1, "missing header");
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "label,h,w,d") file_error(path, lineno, "malformed header '" + line + "'");

    if (!std::getline(in, line)) file_error(path, 2, "missing shape line");
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    auto fields = split_csv(line);
    if (fields.size() != 4 || fields[0] != "#shape")
        file_error(path, lineno, "malformed shape line '" + line + "'");
    int h = static_cast<int>(parse_int(fields[1], path, lineno));
    int w = static_cast<int>(parse_int(fields[2], path, lineno));
    int d = static_cast<int>(parse_int(fields[3], path, lineno));
    if (h < 1 || w < 1 || d < 1) file_error(path, lineno, "non-positive shape");
    std::size_t hwd = static_cast<std::size_t>(h) * w * d;

    Dataset out;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        fields = split_csv(line);
        if (fields.size() != hwd + 1)
            file_error(path, lineno,
                       "expected " + std::to_string(hwd + 1) + " fields, got " +
                           std::to_string(fields.size()));
        LabeledExample ex;
        ex.label = static_cast<int>(parse_int(fields[0], path, lineno));
        if (ex.label < 0) file_error(path, lineno, "negative label");
        std::vector<double> feat(hwd);
        for (std::size_t i = 0; i < hwd; ++i) feat[i] = parse_double(fields[i + 1], path, lineno);
        ex.features = Tensor({h, w, d}, std::move(feat));
        out.add(std::move(ex));
    }
    if (out.feature_shape.empty()) out.feature_shape = {h, w, d};
    return out;
}

void save_feature_file(const Dataset& dataset, const std::string& path) {
    std::ofstream out(path, std::ios::binary); // binary: LF line endings everywhere
    if (!out) throw std::runtime_error("save_feature_file: cannot open " + path);
    int h = 1, w = 1, d = 1;
    if (!dataset.feature_shape.empty()) {
        h = dataset.feature_shape[0];
        w = dataset.feature_shape[1];
        d = dataset.feature_shape[2];
    }
    out << "label,h,w,d\n";
    out << "#shape," << h << ',' << w << ',' << d << '\n';
    for (const auto& ex : dataset.examples) {
        out << ex.label;
        for (double v : ex.features.data) out << ',' << format_double(v);
        out << '\n';
    }
    if (!out) throw std::runtime_error("save_feature_file: write failed for " + path);
}

} // namespace cil
