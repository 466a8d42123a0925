#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <sstream>

#include "pwscale/ingest.hpp"
#include "pwscale/outliers.hpp"
#include "pwscale/scaling.hpp"
#include "pwscale/simulate.hpp"
#include "pwscale/stats.hpp"

namespace py = pybind11;
using namespace pwscale;

namespace {

CountMatrix matrix_from_array(const Eigen::MatrixXi& counts) {
  if (counts.rows() != counts.cols())
    throw DomainError("count matrix must be square");
  CountMatrix C;
  C.counts = counts;
  C.validate();
  return C;
}

std::vector<CountMatrix> matrices_from_arrays(
    const std::vector<Eigen::MatrixXi>& arrays) {
  std::vector<CountMatrix> out;
  out.reserve(arrays.size());
  for (const auto& a : arrays) out.push_back(matrix_from_array(a));
  return out;
}

}  // namespace

PYBIND11_MODULE(_pwscale, m) {
  m.doc() = "Pairwise comparison scaling (Thurstone Case V, JOD units)";

  py::register_exception<FormatError>(m, "FormatError", PyExc_ValueError);
  py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);

  py::class_<ScaleOptions>(m, "ScaleOptions")
      .def(py::init<>())
      .def_readwrite("sigma_ij", &ScaleOptions::sigma_ij)
      .def_readwrite("use_prior", &ScaleOptions::use_prior)
      .def_readwrite("gamma", &ScaleOptions::gamma)
      .def_readwrite("tolerance", &ScaleOptions::tolerance)
      .def_readwrite("grad_tolerance", &ScaleOptions::grad_tolerance)
      .def_readwrite("max_iterations", &ScaleOptions::max_iterations);

  py::class_<ScaleResult>(m, "ScaleResult")
      .def_readonly("jod", &ScaleResult::jod)
      .def_readonly("log_posterior", &ScaleResult::log_posterior)
      .def_readonly("converged", &ScaleResult::converged);

  py::class_<BootstrapResult>(m, "BootstrapResult")
      .def_readonly("samples", &BootstrapResult::samples)
      .def_readonly("ci_low", &BootstrapResult::ci_low)
      .def_readonly("ci_high", &BootstrapResult::ci_high)
      .def_readonly("mean_jod", &BootstrapResult::mean_jod)
      .def_readonly("covariance", &BootstrapResult::covariance)
      .def_readonly("B", &BootstrapResult::B);

  py::class_<SignificanceReport>(m, "SignificanceReport")
      .def_readonly("alpha", &SignificanceReport::alpha)
      .def_readonly("z_scores", &SignificanceReport::z_scores)
      .def_readonly("p_values", &SignificanceReport::p_values)
      .def_property_readonly("significant",
                             [](const SignificanceReport& r) {
                               return Eigen::MatrixXi(
                                   r.significant.cast<int>());
                             })
      .def_property_readonly("degenerate", [](const SignificanceReport& r) {
        return Eigen::MatrixXi(r.degenerate.cast<int>());
      });

  py::class_<OutlierReport>(m, "OutlierReport")
      .def_readonly("log_likelihood", &OutlierReport::log_likelihood)
      .def_readonly("iqr_score", &OutlierReport::iqr_score)
      .def_readonly("flagged", &OutlierReport::flagged)
      .def_readonly("q1", &OutlierReport::q1)
      .def_readonly("q3", &OutlierReport::q3);

  m.def("prob_to_jod", &prob_to_jod, py::arg("p"),
        py::arg("sigma_ij") = 1.4826);

  m.def(
      "parse_trials_csv",
      [](const std::string& text, std::optional<std::string> reference) {
        std::istringstream in(text);
        TrialTable table = parse_trials(in, reference);
        auto groups = build_observer_matrices(table);
        std::vector<std::string> observers;
        std::vector<Eigen::MatrixXi> counts;
        for (const auto& [key, C] : groups) {
          observers.push_back(key.observer);
          counts.push_back(C.counts);
        }
        py::dict out;
        out["conditions"] = table.conditions.labels;
        out["observers"] = observers;
        out["counts"] = counts;
        out["warnings"] = table.warnings;
        return out;
      },
      py::arg("text"), py::arg("reference") = std::nullopt,
      "Parse trial CSV text into per-observer count matrices.");

  m.def(
      "scale",
      [](const Eigen::MatrixXi& counts, const ScaleOptions& opts) {
        return scale_mle(matrix_from_array(counts), opts);
      },
      py::arg("counts"), py::arg("options") = ScaleOptions{});

  m.def(
      "scale_least_squares",
      [](const Eigen::MatrixXi& counts, double sigma_ij) {
        ScaleOptions opts;
        opts.sigma_ij = sigma_ij;
        return scale_least_squares(
            distance_matrix(matrix_from_array(counts), opts));
      },
      py::arg("counts"), py::arg("sigma_ij") = 1.4826);

  m.def(
      "bootstrap",
      [](const std::vector<Eigen::MatrixXi>& per_observer, int B,
         const ScaleOptions& opts, std::uint64_t seed, int threads) {
        return bootstrap_scale(matrices_from_arrays(per_observer), B, opts,
                               seed, threads);
      },
      py::arg("per_observer"), py::arg("B") = 500,
      py::arg("options") = ScaleOptions{}, py::arg("seed") = 0,
      py::arg("threads") = 1);

  m.def("significance", &pairwise_significance, py::arg("jod"),
        py::arg("covariance"), py::arg("alpha") = 0.05);

  m.def(
      "outliers",
      [](const std::vector<Eigen::MatrixXi>& per_observer,
         const ScaleOptions& opts, int threads) {
        return outlier_scores(matrices_from_arrays(per_observer), opts,
                              threads);
      },
      py::arg("per_observer"), py::arg("options") = ScaleOptions{},
      py::arg("threads") = 1);

  m.def(
      "simulate",
      [](const Eigen::VectorXd& q_true, const std::string& design,
         int observers, int repetitions, int runs, bool ties, bool use_prior,
         bool drop_unanimous, std::uint64_t seed, int threads) {
        SimConfig config;
        config.q_true = q_true;
        if (design == "complete")
          config.design = Design::Complete;
        else if (design == "incomplete-chain")
          config.design = Design::IncompleteChain;
        else
          throw DomainError("unknown design: " + design);
        config.observers = observers;
        config.repetitions = repetitions;
        config.runs = runs;
        if (ties) config.tie_model = TieModel{};
        config.use_prior = use_prior;
        config.drop_unanimous = drop_unanimous;
        config.seed = seed;
        config.compute_ci = runs > 1;
        config.threads = threads;
        SimMetrics metrics = run_monte_carlo(config);
        py::dict out;
        out["mean_jod"] = metrics.mean_jod;
        out["bias"] = metrics.bias;
        out["effect_size"] = metrics.effect_size;
        out["mean_ci_size"] = metrics.mean_ci_size;
        out["rmse"] = metrics.rmse;
        out["runs_used"] = metrics.runs_used;
        out["runs_failed"] = metrics.runs_failed;
        return out;
      },
      py::arg("q_true"), py::arg("design") = "complete",
      py::arg("observers") = 10, py::arg("repetitions") = 3,
      py::arg("runs") = 100, py::arg("ties") = false,
      py::arg("use_prior") = true, py::arg("drop_unanimous") = false,
      py::arg("seed") = 0, py::arg("threads") = 1);
}
