#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "mbp/config.hpp"
#include "mbp/errors.hpp"
#include "mbp/estimator.hpp"
#include "mbp/harness.hpp"
#include "mbp/likelihood.hpp"
#include "mbp/link.hpp"
#include "mbp/markov.hpp"
#include "mbp/process.hpp"
#include "mbp/tensor.hpp"

namespace py = pybind11;
using namespace pybind11::literals;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

// Tensors cross the boundary as C-ordered (N, N, p) arrays, which matches
// the library's storage order exactly.
mbp::ParamTensor to_tensor(const Array& a) {
  if (a.ndim() != 3) throw std::invalid_argument("expected a 3-d array of shape (N, N, p)");
  const auto r = a.unchecked<3>();
  std::vector<double> values(a.data(), a.data() + a.size());
  return mbp::ParamTensor(static_cast<std::size_t>(r.shape(0)), static_cast<std::size_t>(r.shape(1)),
                          static_cast<std::size_t>(r.shape(2)), std::move(values));
}

Array to_array(const mbp::ParamTensor& t) {
  Array out({t.rows(), t.cols(), t.lags()});
  std::copy(t.values().begin(), t.values().end(), out.mutable_data());
  return out;
}

mbp::SamplePath to_path(const py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>& bits,
                        std::size_t lags) {
  if (bits.ndim() != 2) throw std::invalid_argument("expected a 2-d array of shape (n + p, N)");
  const auto rows = static_cast<std::size_t>(bits.shape(0));
  if (rows <= lags) throw std::invalid_argument("path needs more than p rows");
  std::vector<std::uint8_t> data(bits.data(), bits.data() + bits.size());
  return mbp::SamplePath(rows - lags, static_cast<std::size_t>(bits.shape(1)), lags, 0, std::move(data));
}

py::array_t<std::uint8_t> path_bits(const mbp::SamplePath& path) {
  py::array_t<std::uint8_t> out({path.total_rows(), path.dims()});
  std::copy(path.bits().begin(), path.bits().end(), out.mutable_data());
  return out;
}

py::dict summary_row(const mbp::PointSummary& p) {
  return py::dict("s"_a = p.s, "n"_a = p.n, "count"_a = p.count, "lambda"_a = p.lambda,
                  "mean_frob_error"_a = p.mean_frob_error, "std_frob_error"_a = p.std_frob_error,
                  "mean_frob_error_sq"_a = p.mean_frob_error_sq, "mean_support_fraction"_a = p.mean_support_fraction,
                  "std_support_fraction"_a = p.std_support_fraction, "n_over_log"_a = p.n_over_log);
}

}  // namespace

PYBIND11_MODULE(_mbp, m) {
  m.doc() = "Sparse multivariate Bernoulli process estimation";

  py::register_exception<mbp::ResourceLimitError>(m, "ResourceLimitError", PyExc_RuntimeError);
  py::register_exception<mbp::ConfigError>(m, "ConfigError", PyExc_ValueError);

  py::class_<mbp::LinkSpec>(m, "LinkSpec")
      .def(py::init([](double alpha, double eps) { return mbp::LinkSpec::sigmoid(alpha, eps); }), "alpha"_a = 1.0,
           "eps"_a = 0.05)
      .def_property_readonly("alpha", &mbp::LinkSpec::alpha)
      .def_property_readonly("eps", &mbp::LinkSpec::eps)
      .def_property_readonly("lipschitz", &mbp::LinkSpec::lipschitz)
      .def_property_readonly("curvature", &mbp::LinkSpec::curvature)
      .def("eval", &mbp::LinkSpec::eval, "u"_a)
      .def("__repr__", [](const mbp::LinkSpec& l) {
        std::ostringstream ss;
        ss << "LinkSpec(alpha=" << l.alpha() << ", eps=" << l.eps() << ")";
        return ss.str();
      });

  m.def(
      "simulate",
      [](const Array& theta, const mbp::LinkSpec& link, std::size_t n, std::size_t burn_in, std::uint64_t seed) {
        return path_bits(mbp::simulate(to_tensor(theta), link, n, burn_in, seed));
      },
      "theta"_a, "link"_a, "n"_a, "burn_in"_a = mbp::kDefaultBurnIn, "seed"_a = 0,
      "Simulate a path; returns a (n + p, N) uint8 array whose first p rows are the initial history.");

  m.def(
      "random_sparse_theta",
      [](std::size_t dims, std::size_t lags, std::size_t s, double low, double high, std::uint64_t seed) {
        return to_array(mbp::random_sparse_theta(dims, lags, s, low, high, seed));
      },
      "N"_a, "p"_a, "s"_a, "magnitude_low"_a = 0.3, "magnitude_high"_a = 1.0, "seed"_a = 0);

  m.def(
      "nll",
      [](const Array& theta, const py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>& bits,
         const mbp::LinkSpec& link) {
        const auto t = to_tensor(theta);
        return mbp::nll(t, to_path(bits, t.lags()), link);
      },
      "theta"_a, "path"_a, "link"_a);

  m.def(
      "grad_nll",
      [](const Array& theta, const py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>& bits,
         const mbp::LinkSpec& link) {
        const auto t = to_tensor(theta);
        return to_array(mbp::grad_nll(t, to_path(bits, t.lags()), link));
      },
      "theta"_a, "path"_a, "link"_a);

  m.def(
      "lambda_policy",
      [](std::size_t n, std::size_t dims, std::size_t lags, const mbp::LinkSpec& link, double c2,
         const std::string& mode) { return mbp::lambda_policy(n, dims, lags, link, c2, mbp::parse_lambda_mode(mode)); },
      "n"_a, "N"_a, "p"_a, "link"_a, "c2"_a = 0.5, "mode"_a = "simulation");

  m.def(
      "fit",
      [](const py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>& bits, std::size_t lags,
         const mbp::LinkSpec& link, double lambda, std::size_t max_iters, double tol) {
        mbp::FitConfig cfg;
        cfg.lambda = lambda;
        cfg.max_iters = max_iters;
        cfg.tol = tol;
        const auto result = mbp::fit(to_path(bits, lags), link, cfg);
        return py::dict("theta_hat"_a = to_array(result.theta_hat), "objective_trace"_a = result.objective_trace,
                        "iterations"_a = result.iterations, "converged"_a = result.converged);
      },
      "path"_a, "p"_a, "link"_a, "lam"_a, "max_iters"_a = 5000, "tol"_a = 1e-8,
      "l1-penalised maximum likelihood by proximal gradient descent.");

  m.def(
      "norm",
      [](const Array& t, const std::string& kind) { return mbp::norm(to_tensor(t), mbp::parse_norm_kind(kind)); },
      "t"_a, "kind"_a = "frob");
  m.def(
      "gf", [](const Array& t, const mbp::LinkSpec& link) { return mbp::gf(to_tensor(t), link); }, "theta"_a,
      "link"_a);

  m.def(
      "check_gf_bound",
      [](const Array& theta, const mbp::LinkSpec& link) {
        const auto c = mbp::check_gf_bound(to_tensor(theta), link);
        return py::dict("tau1_p_step"_a = c.tau1_p_step, "gf"_a = c.gf, "holds"_a = c.holds);
      },
      "theta"_a, "link"_a);

  m.def(
      "dobrushin_tau1",
      [](const py::array_t<double, py::array::c_style | py::array::forcecast>& k) {
        if (k.ndim() != 2) throw std::invalid_argument("expected a square 2-d array");
        Eigen::MatrixXd mat(k.shape(0), k.shape(1));
        const auto r = k.unchecked<2>();
        for (py::ssize_t i = 0; i < k.shape(0); ++i)
          for (py::ssize_t j = 0; j < k.shape(1); ++j) mat(i, j) = r(i, j);
        return mbp::dobrushin_tau1(mat);
      },
      "kernel"_a);

  m.def("kl_bernoulli", &mbp::kl_bernoulli, "p"_a, "q"_a);
  m.def("kl_bernoulli_bound", &mbp::kl_bernoulli_bound, "p"_a, "q"_a, "eps"_a);
  m.def("f_p_bound", &mbp::f_p_bound, "tau"_a, "p"_a);

  m.def(
      "psd_estimate",
      [](const py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>& bits, std::size_t lags,
         std::size_t segments, std::size_t freq_points) {
        const auto r = mbp::psd_estimate(to_path(bits, lags), segments, freq_points);
        return py::dict("freq_grid"_a = r.freq_grid, "min_eigs"_a = r.min_eigs, "c_ell_sq_hat"_a = r.c_ell_sq_hat);
      },
      "path"_a, "p"_a = 1, "segments"_a = 2000, "freq_points"_a = mbp::kDefaultFreqPoints);

  m.def(
      "run_experiment",
      [](const std::string& config_text, const std::string& output_dir) {
        auto cfg = mbp::ExperimentConfig::from_config(mbp::Config::parse_string(config_text));
        cfg.output_dir = output_dir;
        mbp::ExperimentOutput out;
        {
          py::gil_scoped_release release;
          out = mbp::run_experiment(cfg);
        }
        py::list summary;
        for (const auto& row : out.summary) summary.append(summary_row(row));
        py::dict result("summary"_a = summary, "files"_a = out.files, "records"_a = out.records.size());
        if (out.spearman) result["spearman"] = *out.spearman;
        return result;
      },
      "config"_a, "output_dir"_a = "",
      "Run an experiment from config text; CSVs are written only when output_dir is non-empty.");
}
