#include <string>
#include <vector>

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "collabrep/analysis.hpp"
#include "collabrep/classifiers.hpp"
#include "collabrep/dataset.hpp"
#include "collabrep/degradation.hpp"
#include "collabrep/dictionary.hpp"
#include "collabrep/errors.hpp"
#include "collabrep/experiment.hpp"
#include "collabrep/features.hpp"
#include "collabrep/solvers.hpp"

namespace py = pybind11;
using namespace collabrep;

namespace {

py::object to_python(const nlohmann::json& j) {
  return py::module_::import("json").attr("loads")(j.dump());
}

nlohmann::json from_python(const py::object& o) {
  return nlohmann::json::parse(py::module_::import("json").attr("dumps")(o).cast<std::string>());
}

py::dict decision_dict(const Dictionary& dict, const Decision& d) {
  py::dict out;
  out["predicted"] = d.predicted;
  std::vector<std::string> labels;
  for (const auto& c : dict.classes()) labels.push_back(c.label);
  out["classes"] = labels;
  out["residuals"] = d.residuals;
  out["sci"] = d.sci ? py::cast(*d.sci) : py::none();
  out["alpha"] = d.coding.alpha;
  out["degenerate"] = d.degenerate;
  return out;
}

py::dict coding_dict(const CodingResult& r) {
  py::dict out;
  out["alpha"] = r.alpha;
  out["residual"] = r.residual ? py::cast(*r.residual) : py::none();
  out["multiplier"] = r.multiplier ? py::cast(*r.multiplier) : py::none();
  out["objective"] = r.objective;
  out["iterations"] = r.iterations;
  out["converged"] = r.converged;
  return out;
}

Dataset dataset_from_arrays(const Eigen::MatrixXd& features, const std::vector<Label>& labels,
                            const std::vector<bool>& is_train) {
  Dataset d;
  d.features = features;
  d.labels = labels;
  if (is_train.empty()) {
    d.split.assign(labels.size(), Split::Train);
  } else {
    for (bool t : is_train) d.split.push_back(t ? Split::Train : Split::Test);
  }
  return d;
}

py::dict dataset_dict(const Dataset& d) {
  py::dict out;
  out["features"] = d.features;
  out["labels"] = d.labels;
  std::vector<bool> train;
  for (auto s : d.split) train.push_back(s == Split::Train);
  out["is_train"] = train;
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Collaborative-representation classifiers and experiment harness";

  static py::exception<Error> error(m, "CollabrepError", PyExc_RuntimeError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object args = py::make_tuple(std::string(to_string(e.code())), e.what());
      PyErr_SetObject(error.ptr(), args.ptr());
    }
  });

  py::class_<Dictionary>(m, "Dictionary")
      .def(py::init([](const Eigen::MatrixXd& raw, const std::vector<Label>& labels) {
             return Dictionary::from_matrix(raw, labels);
           }),
           py::arg("raw"), py::arg("labels"))
      .def_property_readonly("data", &Dictionary::data)
      .def_property_readonly("labels", &Dictionary::column_labels)
      .def_property_readonly("classes", [](const Dictionary& d) {
        std::vector<std::string> out;
        for (const auto& c : d.classes()) out.push_back(c.label);
        return out;
      })
      .def_property_readonly("fingerprint",
                             [](const Dictionary& d) { return fingerprint_hex(d.fingerprint()); })
      .def("class_coefficients", [](const Dictionary& d, const Eigen::VectorXd& a,
                                    const std::string& label) { return class_coefficients(d, a, label); })
      .def("__len__", &Dictionary::size);

  py::class_<Projector>(m, "Projector")
      .def(py::init([](const Dictionary& d, std::optional<double> lambda) {
             return lambda ? build_projector(d, *lambda) : build_default_projector(d);
           }),
           py::arg("dictionary"), py::arg("lam") = py::none())
      .def_property_readonly("matrix", &Projector::matrix)
      .def_property_readonly("lam", &Projector::lambda)
      .def("apply", &Projector::apply);

  m.def("normalize_columns", &normalize_columns);
  m.def("default_lambda", &default_lambda);
  m.def(
      "enroll",
      [](const Dictionary& d, const Projector& p, const Eigen::MatrixXd& raw,
         const std::vector<Label>& labels) {
        if (raw.cols() != static_cast<Eigen::Index>(labels.size()))
          throw Error(ErrorCode::DimensionMismatch, "one label per column is required");
        std::vector<Sample> samples;
        for (Eigen::Index j = 0; j < raw.cols(); ++j)
          samples.push_back({raw.col(j), labels[static_cast<std::size_t>(j)]});
        auto e = enroll(d, p, samples);
        return py::make_tuple(e.dictionary, e.projector);
      },
      py::arg("dictionary"), py::arg("projector"), py::arg("raw"), py::arg("labels"));

  m.def("shrink", &shrink, py::arg("x"), py::arg("threshold"));
  m.def(
      "solve_rls",
      [](const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double lam) {
        return coding_dict(solve_rls(x, y, lam));
      },
      py::arg("x"), py::arg("y"), py::arg("lam"));
  m.def(
      "solve_alm_l1res",
      [](const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double lam, double tol, int max_iter) {
        AlmParams p;
        p.tol = tol;
        p.max_iter = max_iter;
        return coding_dict(solve_alm_l1res(x, y, lam, p));
      },
      py::arg("x"), py::arg("y"), py::arg("lam"), py::arg("tol") = 1e-6, py::arg("max_iter") = 500);
  m.def(
      "solve_fista_l1",
      [](const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double lam, double tol, int max_iter) {
        FistaParams p;
        p.tol = tol;
        p.max_iter = max_iter;
        return coding_dict(solve_fista_l1(x, y, lam, p));
      },
      py::arg("x"), py::arg("y"), py::arg("lam"), py::arg("tol") = 1e-8, py::arg("max_iter") = 5000);
  m.def(
      "solve_omp",
      [](const Eigen::MatrixXd& x, const Eigen::VectorXd& y, int k) {
        return coding_dict(solve_omp(x, y, k));
      },
      py::arg("x"), py::arg("y"), py::arg("k"));
  m.def(
      "solve_constrained_lp",
      [](const Eigen::MatrixXd& x, const Eigen::VectorXd& y, int p, const std::vector<double>& grid) {
        std::vector<std::pair<double, double>> out;
        for (const auto& c : solve_constrained_lp(x, y, p, grid)) out.emplace_back(c.epsilon, c.residual);
        return out;
      },
      py::arg("x"), py::arg("y"), py::arg("p"), py::arg("grid"));

  m.def(
      "classify",
      [](const Dictionary& d, const Eigen::VectorXd& y, const std::string& method,
         std::optional<double> lam) {
        const auto kind = parse_classifier(method);
        const double l = lam ? *lam : default_lambda(d.size());
        switch (kind) {
          case ClassifierKind::Src: return decision_dict(d, classify_src(d, y, l));
          case ClassifierKind::CrcRls:
            return decision_dict(d, classify_crc_rls(build_projector(d, l), d, y));
          case ClassifierKind::Rcrc: return decision_dict(d, classify_rcrc(d, y, l));
          case ClassifierKind::RnsL1: return decision_dict(d, classify_rns(d, y, l, 1));
          case ClassifierKind::RnsL2: return decision_dict(d, classify_rns(d, y, l, 2));
          case ClassifierKind::Nn: return decision_dict(d, classify_nn(d, y));
          case ClassifierKind::Ns: break;
        }
        return decision_dict(d, classify_ns(d, y));
      },
      py::arg("dictionary"), py::arg("y"), py::arg("method") = "crc_rls",
      py::arg("lam") = py::none());
  m.def(
      "classify_crc_rls",
      [](const Projector& p, const Dictionary& d, const Eigen::VectorXd& y) {
        return decision_dict(d, classify_crc_rls(p, d, y));
      },
      py::arg("projector"), py::arg("dictionary"), py::arg("y"));
  m.def(
      "compute_sci",
      [](const Dictionary& d, const Eigen::VectorXd& alpha) {
        CodingResult c;
        c.alpha = alpha;
        return compute_sci(d, c);
      },
      py::arg("dictionary"), py::arg("alpha"));

  m.def(
      "fit_pca",
      [](const Eigen::MatrixXd& training, Eigen::Index d) {
        auto p = fit_pca(training, d);
        return py::make_tuple(p.mean, p.basis, p.variances);
      },
      py::arg("training"), py::arg("d"));
  m.def("vectorize_image", &vectorize_image);

  m.def("corrupt_pixels", &corrupt_pixels, py::arg("image"), py::arg("fraction"),
        py::arg("seed"), py::arg("value_min") = 0.0, py::arg("value_max") = 255.0);
  m.def(
      "occlude_block",
      [](const Eigen::MatrixXd& image, double fraction, const Eigen::MatrixXd& occluder,
         std::uint64_t seed) {
        auto o = occlude_block(image, fraction, occluder, seed);
        return py::make_tuple(o.image, Eigen::MatrixXi(o.mask.cast<int>()));
      },
      py::arg("image"), py::arg("fraction"), py::arg("occluder"), py::arg("seed"));

  m.def(
      "coef_distribution_fit",
      [](const std::vector<double>& coefs, int bins) {
        return to_python(to_json(coef_distribution_fit(coefs, bins)));
      },
      py::arg("coefs"), py::arg("bins") = 101);
  m.def(
      "geometry_check",
      [](const Dictionary& d, const Eigen::VectorXd& y, const std::string& label) {
        return to_python(to_json(geometry_check(d, y, label)));
      },
      py::arg("dictionary"), py::arg("y"), py::arg("label"));

  m.def(
      "make_synthetic",
      [](const py::object& spec) {
        return dataset_dict(make_synthetic(synthetic_from_json(from_python(spec))));
      },
      py::arg("spec"));
  m.def(
      "run_experiment",
      [](const py::object& config, const Eigen::MatrixXd& features,
         const std::vector<Label>& labels, const std::vector<bool>& is_train,
         bool include_queries) {
        auto data = dataset_from_arrays(features, labels, is_train);
        const auto cfg = config_from_json(from_python(config));
        Report report;
        {
          py::gil_scoped_release release;
          report = run_experiment(cfg, data);
        }
        return to_python(to_json(report, include_queries));
      },
      py::arg("config"), py::arg("features"), py::arg("labels"), py::arg("is_train"),
      py::arg("include_queries") = false);
}
