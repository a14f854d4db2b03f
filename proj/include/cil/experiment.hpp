#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cil/baselines.hpp"
#include "cil/eval.hpp"
#include "cil/trainer.hpp"
#include "json.hpp"

namespace cil {

enum class Method { Ours, OursNoBic, OursNoFreeze, Er, Gdumb };

std::string method_name(Method m);
Method method_from_name(const std::string& name);

struct BlobSpec {
    int num_classes = 20;
    int dim = 32;
    int n_train_per_class = 100;
    int n_test_per_class = 50;
    double separation = 3.0;
};

struct ExperimentConfig {
    Method method = Method::Ours;
    std::optional<BlobSpec> blobs;
    std::optional<std::pair<std::string, std::string>> feature_files; // train, test paths
    int num_splits = 5;
    int memory_capacity = 100;
    std::uint64_t seed = 1;
    SessionConfig session; // lr_schedule resolved per method unless overridden
    std::string output_dir = "out";
};

ExperimentConfig config_from_json(const nlohmann::json& j);
ExperimentConfig config_from_file(const std::string& path);
nlohmann::json config_to_json(const ExperimentConfig& cfg); // canonical echo, no output_dir

// per-component seeds derived from the master seed so adding a method never
// perturbs another method's stream
std::uint64_t data_seed(std::uint64_t master);
std::uint64_t split_seed(std::uint64_t master);
std::uint64_t train_seed(std::uint64_t master);

// Sizes the partial-classifier hidden width so the cumulative parameter count
// stays at or below the single-head baseline's budget.
int partial_head_width(int depth, int baseline_hidden, int total_classes, int num_splits);

std::uint64_t fnv1a64(const std::string& bytes);
std::string stream_fingerprint(const SessionStream& stream);

struct ExperimentResult {
    nlohmann::json report;
    nlohmann::json model; // final bank / single-head checkpoint
    std::string curves_csv;
    std::string report_path;
    std::string curves_path;
};

// Runs the full protocol for one (method, splits, capacity, seed) cell and
// writes report.json / curves.csv / model.json into the output directory.
// Identical configs produce byte-identical report.json.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

// in-memory variant used by tests and the python bindings; writes nothing
ExperimentResult run_experiment_in_memory(const ExperimentConfig& cfg);

struct ComparisonTable {
    std::vector<std::string> methods;               // rows
    std::vector<std::pair<int, int>> cells;         // columns: (splits, capacity)
    std::vector<std::vector<double>> values;        // median final accuracy, NaN if absent
    std::string to_csv() const;
    std::string to_console() const;
};

ComparisonTable compare_reports(const std::vector<std::string>& report_paths);
std::string merged_curves_csv(const std::vector<std::string>& report_paths);

// materializes a blob dataset spec into train.csv / test.csv feature files
void generate_data(const std::string& spec_path, const std::string& out_dir);

} // namespace cil
