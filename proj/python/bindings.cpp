// Python bindings. Configs, reports and checkpoints cross the boundary as
// JSON text; the package wrapper turns them into dicts.
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <numeric>

#include "cotprompt/errors.hpp"
#include "cotprompt/experiment.hpp"

namespace py = pybind11;
using namespace cotprompt;

namespace {

std::string report_text(const RunOutcome& o, const std::string& variant) { return report_json(o, variant).dump(2); }

Json gradcheck_json(const GradCheckReport& r) {
    Json params = Json::array();
    for (const auto& p : r.parameters)
        params.push_back({{"name", p.name},
                          {"coordinates", p.coordinates},
                          {"relative_error", p.relative_error},
                          {"max_coordinate_error", p.max_coordinate_error},
                          {"max_abs_error", p.max_abs_error},
                          {"flagged_coordinates", p.flagged.size()}});
    return {{"step", r.step},
            {"tolerance", r.tolerance},
            {"passed", r.passed()},
            {"max_relative_error", r.max_relative_error()},
            {"max_coordinate_error", r.max_coordinate_error()},
            {"parameters", std::move(params)}};
}

class PyModel {
public:
    explicit PyModel(CotModel m) : model_(std::move(m)) {}

    static PyModel from_config(const std::string& text) {
        const ExperimentConfig c = parse_config(text);
        return PyModel(CotModel::build(c.model_config(), c.encoders, c.task.vocabulary()));
    }
    static PyModel from_checkpoint(const std::string& text) { return PyModel(checkpoint_from_string(text)); }

    std::vector<double> class_probabilities(const std::vector<double>& feature,
                                            std::optional<std::vector<std::size_t>> classes) const {
        std::vector<std::size_t> cls;
        if (classes) {
            cls = *classes;
        } else {
            cls.resize(model_.class_count());
            std::iota(cls.begin(), cls.end(), std::size_t{0});
        }
        const Tensor p = model_.class_probabilities(Tensor::vector(feature), cls);
        return {p.data().begin(), p.data().end()};
    }

    const CotModel& model() const { return model_; }

private:
    CotModel model_;
};

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Chain-of-thought prompt tuning on synthetic vision-language tasks";

    static py::exception<Error> base_error(m, "Error", PyExc_RuntimeError);
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const Error& e) {
            py::object type = base_error;
            py::object err = type(e.what());
            err.attr("code") = e.code();
            PyErr_SetObject(base_error.ptr(), err.ptr());
        }
    });

    m.def("default_config", [] { return to_json(ExperimentConfig{}).dump(2); });
    m.def("normalize_config", [](const std::string& text) { return to_json(parse_config(text)).dump(2); },
          "Parse, validate and re-emit a config with every field filled in.");
    m.def("config_hash", [](const std::string& text) { return hex64(parse_config(text).hash()); });
    m.def("harmonic_mean", &harmonic_mean, py::arg("base"), py::arg("new"));
    m.def("metrics_csv_header", &metrics_csv_header);

    m.def(
        "train",
        [](const std::string& text) {
            const ExperimentConfig c = parse_config(text);
            std::optional<CotModel> trained;
            const RunOutcome o = run_experiment(c, &trained);
            return std::make_pair(report_text(o, "train"), checkpoint_to_string(*trained));
        },
        py::arg("config"), py::call_guard<py::gil_scoped_release>(),
        "Train and evaluate. Returns (report JSON, checkpoint JSON).");
    m.def(
        "evaluate",
        [](const std::string& text, const std::string& checkpoint) {
            const ExperimentConfig c = parse_config(text);
            return report_text(evaluate_experiment(c, checkpoint_from_string(checkpoint)), "eval");
        },
        py::arg("config"), py::arg("checkpoint"), py::call_guard<py::gil_scoped_release>());
    m.def(
        "gradcheck",
        [](const std::string& text, std::uint64_t seed, double step, double tolerance) {
            return gradcheck_json(check_model_gradients(parse_config(text), seed, step, tolerance)).dump();
        },
        py::arg("config"), py::arg("seed"), py::arg("step") = 1e-5, py::arg("tolerance") = 1e-4,
        py::call_guard<py::gil_scoped_release>());
    m.def(
        "ablate",
        [](const std::string& kind, const std::string& text, std::vector<double> values) {
            const AblationResult r = run_ablation(parse_ablation(kind), parse_config(text), std::move(values));
            Json audits = Json::array();
            for (const auto& a : r.audits)
                audits.push_back({{"n", a.n},
                                  {"chain_parameters", a.chain_parameters},
                                  {"average_parameters", a.average_parameters},
                                  {"observed_delta", a.observed_delta},
                                  {"predicted_delta", a.predicted_delta},
                                  {"matches", a.matches()}});
            return py::make_tuple(ablation_csv(r), ablation_delta_csv(r), audits.dump());
        },
        py::arg("kind"), py::arg("config"), py::arg("values") = std::vector<double>{});

    py::class_<PyModel>(m, "Model")
        .def_static("from_config", &PyModel::from_config, py::arg("config"))
        .def_static("from_checkpoint", &PyModel::from_checkpoint, py::arg("checkpoint"))
        .def("class_probabilities", &PyModel::class_probabilities, py::arg("feature"),
             py::arg("classes") = py::none())
        .def_property_readonly("class_count", [](const PyModel& p) { return p.model().class_count(); })
        .def_property_readonly("parameter_count", [](const PyModel& p) { return p.model().parameter_count(); })
        .def_property_readonly("feature_dim",
                               [](const PyModel& p) { return p.model().encoder_spec().dims.feature_dim; })
        .def_property_readonly("frozen_hash", [](const PyModel& p) { return hex64(p.model().frozen_hash()); })
        .def_property_readonly("trainable_hash", [](const PyModel& p) { return hex64(p.model().trainable_hash()); })
        .def("checkpoint", [](const PyModel& p) { return checkpoint_to_string(p.model()); });
}
