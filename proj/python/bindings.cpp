#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstring>

#include "metazsl/checkpoint.hpp"
#include "metazsl/datasets.hpp"
#include "metazsl/episodes.hpp"
#include "metazsl/errors.hpp"
#include "metazsl/metatrain.hpp"
#include "metazsl/zsleval.hpp"

namespace py = pybind11;
using namespace metazsl;

namespace {

Matrix matrix_from_array(const py::buffer& buf) {
    const py::buffer_info info = py::buffer(buf).request();
    if (info.ndim != 2) throw ShapeError("expected a 2-d array");
    if (info.format != py::format_descriptor<double>::format())
        throw ShapeError("expected a float64 array");
    Matrix m(static_cast<int>(info.shape[0]), static_cast<int>(info.shape[1]));
    const char* src = static_cast<const char*>(info.ptr);
    for (int r = 0; r < m.rows; ++r)
        for (int c = 0; c < m.cols; ++c)
            m(r, c) = *reinterpret_cast<const double*>(src + r * info.strides[0] +
                                                       c * info.strides[1]);
    return m;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Meta-learned generative feature synthesis for zero-shot evaluation";

    py::register_exception<ShapeError>(m, "ShapeError");
    py::register_exception<ConfigError>(m, "ConfigError");
    py::register_exception<DataError>(m, "DataError");
    py::register_exception<DivergenceError>(m, "DivergenceError");

    py::class_<Matrix>(m, "Matrix", py::buffer_protocol())
        .def(py::init<int, int>())
        .def(py::init(&matrix_from_array))
        .def_readonly("rows", &Matrix::rows)
        .def_readonly("cols", &Matrix::cols)
        .def_buffer([](Matrix& mat) {
            return py::buffer_info(mat.data.data(), sizeof(double),
                                   py::format_descriptor<double>::format(), 2,
                                   {static_cast<std::size_t>(mat.rows),
                                    static_cast<std::size_t>(mat.cols)},
                                   {sizeof(double) * mat.cols, sizeof(double)});
        });

    py::class_<Rng>(m, "Rng")
        .def(py::init<std::uint64_t>())
        .def("normal", &Rng::normal)
        .def("uniform01", &Rng::uniform01)
        .def("derive", &Rng::derive);

    py::class_<SyntheticBenchSpec>(m, "SyntheticBenchSpec")
        .def(py::init<>())
        .def_readwrite("n_seen", &SyntheticBenchSpec::n_seen)
        .def_readwrite("n_unseen", &SyntheticBenchSpec::n_unseen)
        .def_readwrite("feature_dim", &SyntheticBenchSpec::feature_dim)
        .def_readwrite("attr_dim", &SyntheticBenchSpec::attr_dim)
        .def_readwrite("cluster_std", &SyntheticBenchSpec::cluster_std)
        .def_readwrite("examples_per_class", &SyntheticBenchSpec::examples_per_class)
        .def_readwrite("attr_noise", &SyntheticBenchSpec::attr_noise)
        .def_readwrite("seen_test_fraction", &SyntheticBenchSpec::seen_test_fraction)
        .def_readwrite("seed", &SyntheticBenchSpec::seed);

    py::class_<DatasetBundle, std::shared_ptr<DatasetBundle>>(m, "DatasetBundle")
        .def_readonly("name", &DatasetBundle::name)
        .def_readonly("feature_dim", &DatasetBundle::feature_dim)
        .def_readonly("attr_dim", &DatasetBundle::attr_dim)
        .def_readonly("features", &DatasetBundle::features)
        .def_readonly("labels", &DatasetBundle::labels)
        .def_readonly("attributes", &DatasetBundle::attributes)
        .def_readonly("seen_classes", &DatasetBundle::seen_classes)
        .def_readonly("unseen_classes", &DatasetBundle::unseen_classes)
        .def_readonly("test_seen_rows", &DatasetBundle::test_seen_rows)
        .def_readonly("test_unseen_rows", &DatasetBundle::test_unseen_rows)
        .def("attribute_for", &DatasetBundle::attribute_for)
        .def("train_rows", &DatasetBundle::train_rows)
        .def("validate", &DatasetBundle::validate);

    py::class_<SyntheticBench>(m, "SyntheticBench")
        .def_readonly("bundle", &SyntheticBench::bundle)
        .def_readonly("class_means", &SyntheticBench::class_means)
        .def_readonly("mean_class_ids", &SyntheticBench::mean_class_ids)
        .def("mean_for", &SyntheticBench::mean_for);

    m.def("make_synthetic", &make_synthetic);
    m.def("load_bundle", &load_bundle);
    m.def("save_bundle", &save_bundle);

    py::class_<ClassPool>(m, "ClassPool").def_property_readonly("class_count",
                                                                &ClassPool::class_count);
    m.def("build_pool",
          [](const DatasetBundle& b) { return build_pool(std::make_shared<DatasetBundle>(b)); });
    m.def("subsample_fewshot", [](const DatasetBundle& b, int shots, std::uint64_t seed) {
        return subsample_fewshot(std::make_shared<DatasetBundle>(b), shots, seed);
    });

    py::enum_<DiscMode>(m, "DiscMode")
        .value("critic", DiscMode::critic)
        .value("probabilistic", DiscMode::probabilistic);
    py::enum_<DeTermZ>(m, "DeTermZ")
        .value("posterior", DeTermZ::posterior)
        .value("prior", DeTermZ::prior);

    py::class_<ModelConfig>(m, "ModelConfig")
        .def_static("make", &ModelConfig::make, py::arg("feature_dim"), py::arg("attr_dim"),
                    py::arg("latent_dim"),
                    py::arg("encoder_hidden") = std::vector<int>{1024, 512},
                    py::arg("decoder_hidden") = std::vector<int>{1024},
                    py::arg("disc_hidden") = std::vector<int>{1024, 512},
                    py::arg("dropout_rate") = 0.3)
        .def_readwrite("feature_dim", &ModelConfig::feature_dim)
        .def_readwrite("attr_dim", &ModelConfig::attr_dim)
        .def_readwrite("latent_dim", &ModelConfig::latent_dim)
        .def_readwrite("dropout_rate", &ModelConfig::dropout_rate)
        .def_readwrite("disc_mode", &ModelConfig::disc_mode)
        .def_readwrite("de_term_z", &ModelConfig::de_term_z)
        .def_readwrite("literal_adv_sign", &ModelConfig::literal_adv_sign)
        .def_readwrite("disc_clip", &ModelConfig::disc_clip)
        .def("validate", &ModelConfig::validate);

    py::class_<ModelParams>(m, "ModelParams");

    m.def("init_params", [](const ModelConfig& cfg, std::uint64_t seed) {
        Rng rng(seed);
        return init_params(cfg, rng);
    });
    m.def("synthesize",
          [](const ModelConfig& cfg, const ModelParams& params, std::uint64_t seed,
             const std::vector<double>& attr, int n) {
              Rng rng(seed);
              return synthesize(cfg, params, rng, attr, n);
          });

    py::class_<EpisodeConfig>(m, "EpisodeConfig")
        .def(py::init<>())
        .def_readwrite("n_way_tr", &EpisodeConfig::n_way_tr)
        .def_readwrite("k_shot_tr", &EpisodeConfig::k_shot_tr)
        .def_readwrite("n_way_v", &EpisodeConfig::n_way_v)
        .def_readwrite("k_shot_v", &EpisodeConfig::k_shot_v)
        .def_readwrite("val_from_full", &EpisodeConfig::val_from_full);

    py::enum_<OptKind>(m, "OptKind").value("sgd", OptKind::sgd).value("adam", OptKind::adam);

    py::class_<MetaConfig>(m, "MetaConfig")
        .def(py::init<>())
        .def_readwrite("eta1", &MetaConfig::eta1)
        .def_readwrite("eta2", &MetaConfig::eta2)
        .def_readwrite("inner_steps", &MetaConfig::inner_steps)
        .def_readwrite("task_batch_size", &MetaConfig::task_batch_size)
        .def_readwrite("outer_steps", &MetaConfig::outer_steps)
        .def_readwrite("outer_kind", &MetaConfig::outer_kind)
        .def_readwrite("outer_lr", &MetaConfig::outer_lr)
        .def_readwrite("lambda_adv", &MetaConfig::lambda_adv)
        .def_readwrite("meta_enabled", &MetaConfig::meta_enabled)
        .def_readwrite("meta_on_generator", &MetaConfig::meta_on_generator)
        .def_readwrite("meta_on_discriminator", &MetaConfig::meta_on_discriminator)
        .def_readwrite("disjoint_tasks", &MetaConfig::disjoint_tasks)
        .def_readwrite("cvae_only", &MetaConfig::cvae_only)
        .def_readwrite("first_order", &MetaConfig::first_order)
        .def_readwrite("checkpoint_interval", &MetaConfig::checkpoint_interval)
        .def("validate", &MetaConfig::validate);

    py::class_<TraceRow>(m, "TraceRow")
        .def_readonly("step", &TraceRow::step)
        .def_readonly("inner_vg", &TraceRow::inner_vg)
        .def_readonly("inner_d", &TraceRow::inner_d)
        .def_readonly("outer_vg", &TraceRow::outer_vg)
        .def_readonly("outer_d", &TraceRow::outer_d);

    py::class_<TrainState>(m, "TrainState")
        .def_readonly("params", &TrainState::params)
        .def_readonly("step", &TrainState::step)
        .def_readonly("trace", &TrainState::trace);

    m.def(
        "train",
        [](const ModelConfig& cfg, const MetaConfig& meta, const EpisodeConfig& ecfg,
           const ClassPool& pool, std::uint64_t seed) {
            return train(cfg, meta, ecfg, pool, seed);
        },
        py::arg("model"), py::arg("meta"), py::arg("episodes"), py::arg("pool"), py::arg("seed"),
        py::call_guard<py::gil_scoped_release>());

    py::class_<EvalOptions>(m, "EvalOptions")
        .def(py::init<>())
        .def_readwrite("per_class", &EvalOptions::per_class)
        .def_readwrite("softmax_epochs", &EvalOptions::softmax_epochs)
        .def_readwrite("softmax_lr", &EvalOptions::softmax_lr);

    py::class_<GzslMetrics>(m, "GzslMetrics")
        .def_readonly("seen_acc", &GzslMetrics::seen_acc)
        .def_readonly("unseen_acc", &GzslMetrics::unseen_acc)
        .def_readonly("harmonic", &GzslMetrics::harmonic);

    m.def("harmonic_mean", &harmonic_mean);
    m.def("evaluate_zsl", &evaluate_zsl, py::arg("model"), py::arg("params"), py::arg("bundle"),
          py::arg("options"), py::arg("seed"), py::call_guard<py::gil_scoped_release>());
    m.def("evaluate_gzsl", &evaluate_gzsl, py::arg("model"), py::arg("params"),
          py::arg("bundle"), py::arg("options"), py::arg("seed"),
          py::call_guard<py::gil_scoped_release>());
    m.def("synthesize_dataset",
          [](const ModelConfig& cfg, const ModelParams& params,
             const std::map<int, std::vector<double>>& attrs, int per_class,
             std::uint64_t seed) {
              Rng rng(seed);
              const SyntheticDataset ds = synthesize_dataset(cfg, params, attrs, per_class, rng);
              return py::make_tuple(ds.x, ds.labels);
          });

    py::class_<Checkpoint>(m, "Checkpoint")
        .def(py::init<>())
        .def_readwrite("config", &Checkpoint::config)
        .def_readwrite("params", &Checkpoint::params)
        .def_readwrite("seed", &Checkpoint::seed)
        .def_readwrite("step", &Checkpoint::step);
    m.def("save_checkpoint", &save_checkpoint);
    m.def("load_checkpoint", &load_checkpoint);
}
