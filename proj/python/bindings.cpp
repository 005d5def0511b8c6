// Python bindings for the main pipeline operations. Matrices cross the
// boundary as numpy float64 arrays via pybind11's Eigen support.

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <json.hpp>

#include "fscil/complementary.hpp"
#include "fscil/harness.hpp"
#include "fscil/inference.hpp"
#include "fscil/pretrain.hpp"
#include "fscil/resa.hpp"

namespace py = pybind11;
using namespace fscil;

namespace {

ExperimentConfig config_from_json_str(const std::string& text) {
    return config_from_json(nlohmann::json::parse(text));
}

std::string config_to_json_str(const ExperimentConfig& cfg) {
    return config_to_json(cfg).dump(2);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "few-shot class-incremental learning core";

    py::class_<ImageShape>(m, "ImageShape")
        .def(py::init<>())
        .def(py::init([](int c, int h, int w) { return ImageShape{c, h, w}; }))
        .def_readwrite("channels", &ImageShape::channels)
        .def_readwrite("height", &ImageShape::height)
        .def_readwrite("width", &ImageShape::width)
        .def("size", &ImageShape::size);

    py::class_<LabeledSet>(m, "LabeledSet")
        .def_readonly("inputs", &LabeledSet::inputs)
        .def_readonly("labels", &LabeledSet::labels)
        .def_readonly("class_ids", &LabeledSet::class_ids)
        .def_readonly("shape", &LabeledSet::shape)
        .def("size", &LabeledSet::size)
        .def("num_classes", &LabeledSet::num_classes);
    m.def("make_labeled_set",
          [](Matrix inputs, std::vector<int> labels, const ImageShape& shape) {
              return make_labeled_set(std::move(inputs), std::move(labels), shape);
          },
          py::arg("inputs"), py::arg("labels"), py::arg("shape"));

    py::class_<WeightMatrix>(m, "WeightMatrix")
        .def_readonly("rows", &WeightMatrix::rows)
        .def_readonly("class_registry", &WeightMatrix::class_registry)
        .def("num_classes", &WeightMatrix::num_classes);

    py::class_<ScoreMatrix>(m, "ScoreMatrix")
        .def_readonly("values", &ScoreMatrix::values);
    py::class_<ProbMatrix>(m, "ProbMatrix")
        .def_readonly("values", &ProbMatrix::values);

    m.def("prototype",
          [](const Matrix& emb, const std::vector<int>& labels) {
              return prototype(emb, labels);
          },
          py::arg("embeddings"), py::arg("labels"));
    m.def("cosine_scores",
          [](const Matrix& emb, const WeightMatrix& w) { return cosine_scores(emb, w); });
    m.def("sqeuclid_scores",
          [](const Matrix& emb, const WeightMatrix& w) { return sqeuclid_scores(emb, w); });
    m.def("scaled_softmax", &scaled_softmax, py::arg("scores"), py::arg("s"));
    m.def("cross_entropy", &cross_entropy, py::arg("probs"), py::arg("label_indices"));

    py::class_<SplitConfig>(m, "SplitConfig")
        .def(py::init<>())
        .def_readwrite("base_classes", &SplitConfig::base_classes)
        .def_readwrite("incremental_sessions", &SplitConfig::incremental_sessions)
        .def_readwrite("way", &SplitConfig::way)
        .def_readwrite("shot", &SplitConfig::shot)
        .def_readwrite("seed", &SplitConfig::seed);

    py::class_<Session>(m, "Session")
        .def_readonly("train", &Session::train)
        .def_readonly("test", &Session::test);

    py::class_<SessionStream>(m, "SessionStream")
        .def_readonly("sessions", &SessionStream::sessions)
        .def_readonly("base_class_count", &SessionStream::base_class_count)
        .def("num_sessions", &SessionStream::num_sessions)
        .def("classes_through", &SessionStream::classes_through);

    m.def("synth_blob_source", &synth_blob_source, py::arg("classes"), py::arg("per_class"),
          py::arg("dim"), py::arg("separation"), py::arg("seed"));
    m.def("build_session_stream", &build_session_stream, py::arg("source"), py::arg("config"),
          py::arg("test_fraction") = 0.5);
    m.def("cumulative_test_set", &cumulative_test_set, py::arg("stream"), py::arg("session_id"));

    py::class_<EncoderState>(m, "EncoderState")
        .def_readonly("embed_dim", &EncoderState::embed_dim);
    m.def("init_encoder",
          [](const std::string& arch, const ImageShape& shape, int embed_dim,
             std::uint64_t seed) {
              return init_encoder(arch_from_string(arch), shape, embed_dim, seed);
          },
          py::arg("arch"), py::arg("input_shape"), py::arg("embed_dim"), py::arg("seed"));
    m.def("encode",
          [](const EncoderState& enc, const Matrix& batch) { return encode(enc, batch); },
          py::arg("encoder"), py::arg("batch"));

    py::class_<ModelState>(m, "ModelState")
        .def_readonly("encoder", &ModelState::encoder)
        .def_readonly("classifier", &ModelState::classifier);
    m.def("make_model",
          [](const EncoderState& enc, const WeightMatrix& w, const std::string& metric) {
              return ModelState{enc, w, metric_from_string(metric)};
          },
          py::arg("encoder"), py::arg("classifier"), py::arg("metric") = "cosine");

    py::class_<PretrainConfig>(m, "PretrainConfig")
        .def(py::init<>())
        .def_readwrite("epochs", &PretrainConfig::epochs)
        .def_readwrite("batch_size", &PretrainConfig::batch_size)
        .def_readwrite("learning_rate", &PretrainConfig::learning_rate)
        .def_readwrite("weight_decay", &PretrainConfig::weight_decay)
        .def_readwrite("momentum", &PretrainConfig::momentum)
        .def_readwrite("lr_decay_factor", &PretrainConfig::lr_decay_factor)
        .def_readwrite("lr_decay_every", &PretrainConfig::lr_decay_every)
        .def_readwrite("scale_s", &PretrainConfig::scale_s)
        .def_readwrite("seed", &PretrainConfig::seed);

    m.def("pretrain_base",
          [](const LabeledSet& train, const EncoderState& enc, const PretrainConfig& cfg) {
              PretrainResult r = pretrain_base(train, enc, cfg);
              return py::make_tuple(std::move(r.encoder), std::move(r.classifier));
          },
          py::arg("train"), py::arg("encoder"), py::arg("config"));
    m.def("reinit_classifier_with_prototypes", &reinit_classifier_with_prototypes,
          py::arg("encoder"), py::arg("train"));

    py::class_<PseudoTaskOptions>(m, "PseudoTaskOptions")
        .def(py::init<>())
        .def_readwrite("way", &PseudoTaskOptions::way)
        .def_readwrite("shot", &PseudoTaskOptions::shot)
        .def_readwrite("query_per_class", &PseudoTaskOptions::query_per_class)
        .def_readwrite("rotations_per_task", &PseudoTaskOptions::rotations_per_task)
        .def_readwrite("augment", &PseudoTaskOptions::augment);

    py::class_<Episode>(m, "Episode")
        .def_readonly("support", &Episode::support)
        .def_readonly("query", &Episode::query)
        .def_readonly("pseudo_new_class_ids", &Episode::pseudo_new_class_ids);

    py::class_<PseudoIncrementalTask>(m, "PseudoIncrementalTask")
        .def_readonly("episode", &PseudoIncrementalTask::episode)
        .def_readonly("support_aug", &PseudoIncrementalTask::support_aug)
        .def_readonly("query_aug", &PseudoIncrementalTask::query_aug)
        .def_readonly("w1_po", &PseudoIncrementalTask::w1_po)
        .def_readonly("w2_po", &PseudoIncrementalTask::w2_po)
        .def_readonly("rotation_angle", &PseudoIncrementalTask::rotation_angle);

    m.def("build_pseudo_task",
          [](const LabeledSet& base_train, const WeightMatrix& w1, const WeightMatrix& w2,
             const PseudoTaskOptions& opt, std::uint64_t seed) {
              Rng rng = make_rng(seed);
              return build_pseudo_task(base_train, w1, w2, opt, rng);
          },
          py::arg("base_train"), py::arg("w1"), py::arg("w2"), py::arg("options"),
          py::arg("seed"));
    m.def("compute_model_weights", &compute_model_weights, py::arg("encoder"),
          py::arg("base_train"));

    py::class_<ComplementaryConfig>(m, "ComplementaryConfig")
        .def(py::init<>())
        .def_readwrite("epochs", &ComplementaryConfig::epochs)
        .def_readwrite("tasks_per_epoch", &ComplementaryConfig::tasks_per_epoch)
        .def_readwrite("learning_rate", &ComplementaryConfig::learning_rate)
        .def_readwrite("lambda1", &ComplementaryConfig::lambda1)
        .def_readwrite("lambda2", &ComplementaryConfig::lambda2)
        .def_readwrite("scale_s", &ComplementaryConfig::scale_s)
        .def_readwrite("task", &ComplementaryConfig::task)
        .def_readwrite("seed", &ComplementaryConfig::seed);

    m.def("train_complementary",
          [](const ModelState& base, const ModelState& comp, const LabeledSet& base_train,
             const ComplementaryConfig& cfg) {
              return train_complementary(base, comp, base_train, cfg).comp;
          },
          py::arg("base"), py::arg("comp"), py::arg("base_train"), py::arg("config"));

    py::class_<SessionReport>(m, "SessionReport")
        .def_readonly("session_id", &SessionReport::session_id)
        .def_readonly("top1", &SessionReport::top1)
        .def_readonly("top1_base", &SessionReport::top1_base)
        .def_readonly("top1_new", &SessionReport::top1_new)
        .def_readonly("total", &SessionReport::total)
        .def_readonly("correct", &SessionReport::correct);

    py::class_<EvalSummary>(m, "EvalSummary")
        .def_readonly("reports", &EvalSummary::reports)
        .def_readonly("avg", &EvalSummary::avg)
        .def_readonly("diff", &EvalSummary::diff)
        .def_readonly("upper_bound_last", &EvalSummary::upper_bound_last);

    m.def("expand_classifier", &expand_classifier, py::arg("model"), py::arg("new_train"));
    m.def("evaluate_session",
          [](const SessionStream& stream, int sid, const ModelState& base,
             const ModelState& comp, const std::string& rule) {
              return evaluate_session(stream, sid, base, comp,
                                      ensemble_rule_from_string(rule));
          },
          py::arg("stream"), py::arg("session_id"), py::arg("base"), py::arg("comp"),
          py::arg("rule") = "phi1-plus-phi2");
    m.def("evaluate_session_single",
          [](const SessionStream& stream, int sid, const ModelState& model) {
              return evaluate_session(stream, sid, model);
          },
          py::arg("stream"), py::arg("session_id"), py::arg("model"));
    m.def("summarize", &summarize, py::arg("reports"), py::arg("upper_bound_last"));

    py::class_<RunManifest>(m, "RunManifest")
        .def_readonly("fingerprint", &RunManifest::fingerprint)
        .def_readonly("out_dir", &RunManifest::out_dir)
        .def_readonly("summary_path", &RunManifest::summary_path)
        .def_readonly("results_csv", &RunManifest::results_csv);

    py::class_<ExperimentConfig>(m, "ExperimentConfig")
        .def_property_readonly("out_dir",
                               [](const ExperimentConfig& c) { return c.out_dir; })
        .def_property_readonly("seed", [](const ExperimentConfig& c) { return c.seed; });

    m.def("config_from_json", &config_from_json_str, py::arg("text"));
    m.def("config_to_json", &config_to_json_str, py::arg("config"));
    m.def("config_fingerprint", &config_fingerprint, py::arg("config"));
    m.def("run_experiment",
          [](const ExperimentConfig& cfg, bool overwrite, const std::string& stop_after) {
              return run_experiment(cfg, RunOptions{overwrite, stop_after});
          },
          py::arg("config"), py::arg("overwrite") = false, py::arg("stop_after") = "");
    m.def("read_summary_file", &read_summary_file, py::arg("path"));
}
