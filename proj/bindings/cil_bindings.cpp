#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "cil/baselines.hpp"
#include "cil/experiment.hpp"

namespace py = pybind11;
using namespace cil;

namespace {

Partition partition_from_name(const std::string& name) {
    if (name == "train") return Partition::Train;
    if (name == "val") return Partition::Val;
    throw std::invalid_argument("partition must be 'train' or 'val'");
}

std::string run_experiment_json(const std::string& config_json) {
    ExperimentConfig cfg = config_from_json(nlohmann::json::parse(config_json));
    ExperimentResult result = run_experiment_in_memory(cfg);
    return result.report.dump(2);
}

} // namespace

PYBIND11_MODULE(cilcore, m) {
    m.doc() = "class-incremental learning with a sequence of partial classifiers";

    py::class_<Tensor>(m, "Tensor")
        .def(py::init<>())
        .def(py::init<std::vector<int>, std::vector<double>>(), py::arg("shape"), py::arg("data"))
        .def_readonly("shape", &Tensor::shape)
        .def_readonly("data", &Tensor::data)
        .def("__len__", [](const Tensor& t) { return t.size(); });

    py::class_<Rng>(m, "Rng")
        .def(py::init<std::uint64_t>(), py::arg("seed") = 0)
        .def("next_u64", &Rng::next_u64)
        .def("uniform", py::overload_cast<>(&Rng::uniform))
        .def("gaussian", &Rng::gaussian);

    m.def("rng_shuffle", &rng_shuffle, py::arg("rng"), py::arg("n"));
    m.def("splitmix64", [](std::uint64_t x) { return splitmix64(x); });

    m.def(
        "softmax",
        [](const std::vector<double>& v) {
            return softmax(Tensor({static_cast<int>(v.size())}, v)).data;
        },
        py::arg("logits"));
    m.def(
        "cross_entropy",
        [](const std::vector<double>& probs, int target) {
            return cross_entropy(Tensor({static_cast<int>(probs.size())}, probs), target);
        },
        py::arg("probs"), py::arg("target"));
    m.def("affine", &affine, py::arg("x"), py::arg("w"), py::arg("b"));

    py::class_<LabeledExample>(m, "LabeledExample")
        .def(py::init<>())
        .def_readwrite("features", &LabeledExample::features)
        .def_readwrite("label", &LabeledExample::label);

    py::class_<Dataset>(m, "Dataset")
        .def(py::init<>())
        .def("add", &Dataset::add)
        .def("__len__", &Dataset::size)
        .def_readonly("examples", &Dataset::examples)
        .def_readonly("feature_shape", &Dataset::feature_shape)
        .def_readonly("class_set", &Dataset::class_set);

    py::class_<Session>(m, "Session")
        .def_readonly("train", &Session::train)
        .def_readonly("val", &Session::val)
        .def_readonly("test", &Session::test)
        .def_readonly("class_ids", &Session::class_ids);

    py::class_<SessionStream>(m, "SessionStream")
        .def_readonly("sessions", &SessionStream::sessions)
        .def_readonly("class_order", &SessionStream::class_order);

    m.def("split_into_groups", &split_into_groups, py::arg("dataset"), py::arg("test_set"),
          py::arg("num_splits"), py::arg("val_fraction"), py::arg("rng"));
    m.def("gen_gaussian_blobs", &gen_gaussian_blobs, py::arg("num_classes"), py::arg("dim"),
          py::arg("n_train_per_class"), py::arg("n_test_per_class"), py::arg("separation"),
          py::arg("rng"));
    m.def("load_feature_file", &load_feature_file, py::arg("path"));
    m.def("save_feature_file", &save_feature_file, py::arg("dataset"), py::arg("path"));

    py::class_<ReplayBuffer>(m, "ReplayBuffer")
        .def(py::init<int>(), py::arg("capacity"))
        .def(py::init<int, int>(), py::arg("capacity"), py::arg("val_capacity"))
        .def_property_readonly("capacity", &ReplayBuffer::capacity)
        .def_property_readonly("val_capacity", &ReplayBuffer::val_capacity)
        .def(
            "update",
            [](ReplayBuffer& b, const std::string& partition,
               const std::vector<LabeledExample>& examples, Rng& rng) {
                b.update(partition_from_name(partition), examples, rng);
            },
            py::arg("partition"), py::arg("examples"), py::arg("rng"))
        .def(
            "sample_batch",
            [](const ReplayBuffer& b, const std::string& partition, int k, Rng& rng) {
                return b.sample_batch(partition_from_name(partition), k, rng);
            },
            py::arg("partition"), py::arg("k"), py::arg("rng"))
        .def("class_counts",
             [](const ReplayBuffer& b, const std::string& partition) {
                 return b.class_counts(partition_from_name(partition));
             })
        .def("size", [](const ReplayBuffer& b, const std::string& partition) {
            return b.size(partition_from_name(partition));
        });

    py::class_<BiCLayer>(m, "BiCLayer")
        .def(py::init<>())
        .def_readwrite("alpha", &BiCLayer::alpha)
        .def_readwrite("beta", &BiCLayer::beta)
        .def_readwrite("new_class_ids", &BiCLayer::new_class_ids);

    py::class_<ClassifierBank>(m, "ClassifierBank")
        .def(py::init<int>(), py::arg("feature_depth"))
        .def("add_classifier", &ClassifierBank::add_classifier, py::arg("class_ids"),
             py::arg("hidden"), py::arg("rng"), py::arg("use_activation") = true,
             py::arg("freeze_previous") = true)
        .def("forward", &ClassifierBank::forward)
        .def("predict", &ClassifierBank::predict, py::arg("features"), py::arg("use_bic"))
        .def("num_heads", &ClassifierBank::num_heads)
        .def("total_classes", &ClassifierBank::total_classes)
        .def("count_trainable_params", &ClassifierBank::count_trainable_params)
        .def("serialize", [](const ClassifierBank& b) { return serialize_bank(b); });

    py::class_<SessionConfig>(m, "SessionConfig")
        .def(py::init<>())
        .def_readwrite("lr0", &SessionConfig::lr0)
        .def_readwrite("stop_patience", &SessionConfig::stop_patience)
        .def_readwrite("lr_patience", &SessionConfig::lr_patience)
        .def_readwrite("lr_decay_factor", &SessionConfig::lr_decay_factor)
        .def_readwrite("batch_size", &SessionConfig::batch_size)
        .def_readwrite("max_epochs", &SessionConfig::max_epochs)
        .def_readwrite("hidden_width", &SessionConfig::hidden_width)
        .def_readwrite("val_fraction", &SessionConfig::val_fraction)
        .def_readwrite("bic_epochs", &SessionConfig::bic_epochs)
        .def_readwrite("bic_lr", &SessionConfig::bic_lr)
        .def_readwrite("exp_decay_rate", &SessionConfig::exp_decay_rate)
        .def_readwrite("use_activation", &SessionConfig::use_activation);

    py::class_<SessionReport>(m, "SessionReport")
        .def_readonly("epochs_run", &SessionReport::epochs_run)
        .def_readonly("train_losses", &SessionReport::train_losses)
        .def_readonly("val_losses", &SessionReport::val_losses)
        .def_readonly("alpha", &SessionReport::alpha)
        .def_readonly("beta", &SessionReport::beta)
        .def_readonly("best_epoch", &SessionReport::best_epoch)
        .def_readonly("lr_decays", &SessionReport::lr_decays);

    m.def("train_session", &train_session, py::arg("bank"), py::arg("session"), py::arg("buffer"),
          py::arg("cfg"), py::arg("rng"), py::arg("freeze_previous") = true,
          py::arg("fit_bic_at_end") = true);

    py::class_<SingleHeadModel>(m, "SingleHeadModel")
        .def(py::init<>())
        .def("predict", &SingleHeadModel::predict, py::arg("features"), py::arg("use_bic"))
        .def("num_classes", &SingleHeadModel::num_classes);

    m.def("er_train_session", &er_train_session, py::arg("model"), py::arg("session"),
          py::arg("buffer"), py::arg("cfg"), py::arg("rng"));
    m.def("gdumb_train_session", &gdumb_train_session, py::arg("model"), py::arg("session"),
          py::arg("buffer"), py::arg("cfg"), py::arg("rng"));

    m.def(
        "evaluate",
        [](const std::function<int(const Tensor&)>& predict, const Dataset& test) {
            return evaluate(predict, test);
        },
        py::arg("predict"), py::arg("test"));

    m.def("run_experiment_json", &run_experiment_json, py::arg("config_json"),
          "run an experiment from a config JSON string, return the report JSON");
    m.def(
        "run_experiment_file",
        [](const std::string& config_path) {
            ExperimentResult r = run_experiment(config_from_file(config_path));
            return r.report_path;
        },
        py::arg("config_path"));
    m.def("generate_data", &generate_data, py::arg("spec_path"), py::arg("out_dir"));

    m.attr("__version__") = "0.1.0";
}
