#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "cil/experiment.hpp"

namespace fs = std::filesystem;

int main(int argc, char** argv) {
    CLI::App app{"class-incremental learning experiments with partial classifier banks"};
    app.require_subcommand(1);

    std::string spec_path, out_dir, config_path;
    std::vector<std::string> report_paths;
    std::string compare_out;

    auto* gen = app.add_subcommand("generate-data", "materialize a blob dataset as feature files");
    gen->add_option("--spec", spec_path, "dataset spec JSON")->required();
    gen->add_option("--out", out_dir, "output directory")->required();

    auto* run = app.add_subcommand("run", "run one experiment from a config file");
    run->add_option("--config", config_path, "experiment config JSON")->required();

    auto* cmp = app.add_subcommand("compare", "tabulate final accuracies across reports");
    cmp->add_option("reports", report_paths, "report.json paths")->required();
    cmp->add_option("--out", compare_out, "directory for comparison.csv and curves.csv");

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) {
            cil::generate_data(spec_path, out_dir);
            std::cout << "wrote " << (fs::path(out_dir) / "train.csv").string() << " and "
                      << (fs::path(out_dir) / "test.csv").string() << '\n';
        } else if (run->parsed()) {
            cil::ExperimentConfig cfg = cil::config_from_file(config_path);
            cil::ExperimentResult result = cil::run_experiment(cfg);
            double final_acc = result.report.at("final_accuracy");
            std::cout << "method=" << result.report.at("method").get<std::string>()
                      << " sessions=" << result.report.at("sessions").size()
                      << " final_accuracy=" << final_acc << '\n'
                      << "report: " << result.report_path << '\n';
        } else if (cmp->parsed()) {
            cil::ComparisonTable table = cil::compare_reports(report_paths);
            std::cout << table.to_console();
            if (!compare_out.empty()) {
                fs::create_directories(compare_out);
                std::string table_path = (fs::path(compare_out) / "comparison.csv").string();
                std::string curves_path = (fs::path(compare_out) / "curves.csv").string();
                std::ofstream t(table_path, std::ios::binary);
                t << table.to_csv();
                std::ofstream c(curves_path, std::ios::binary);
                c << cil::merged_curves_csv(report_paths);
                if (!t || !c) throw std::runtime_error("write failed in " + compare_out);
                std::cout << "wrote " << table_path << " and " << curves_path << '\n';
            }
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
