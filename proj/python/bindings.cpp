#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "fdr/error.hpp"
#include "fdr/estimator.hpp"
#include "fdr/simulate.hpp"
#include "fdr/sure.hpp"

namespace py = pybind11;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

fdr::PointCloud to_cloud(const Array& x, const Array& y) {
  if (x.ndim() != 2) throw std::invalid_argument("x must have shape (n, d)");
  if (y.ndim() != 1 || y.shape(0) != x.shape(0)) throw std::invalid_argument("y must have shape (n,)");
  const auto n = static_cast<std::size_t>(x.shape(0));
  const auto d = static_cast<std::size_t>(x.shape(1));
  std::vector<double> xs(x.data(), x.data() + n * d);
  std::vector<double> ys(y.data(), y.data() + n);
  return fdr::PointCloud(d, std::move(xs), std::move(ys));
}

py::array_t<double> to_array(const std::vector<double>& v) {
  return py::array_t<double>(static_cast<py::ssize_t>(v.size()), v.data());
}

py::array_t<bool> to_array(const std::vector<bool>& v) {
  py::array_t<bool> out(static_cast<py::ssize_t>(v.size()));
  auto m = out.mutable_unchecked<1>();
  for (std::size_t i = 0; i < v.size(); ++i) m(static_cast<py::ssize_t>(i)) = v[i];
  return out;
}

py::array_t<double> centers(const fdr::GridSpec& grid) {
  const auto m = grid.spatial_cells();
  py::array_t<double> out({static_cast<py::ssize_t>(m), static_cast<py::ssize_t>(grid.dim)});
  auto a = out.mutable_unchecked<2>();
  for (std::size_t c = 0; c < m; ++c) {
    const auto ctr = grid.cell_center(c);
    for (std::size_t j = 0; j < grid.dim; ++j) {
      a(static_cast<py::ssize_t>(c), static_cast<py::ssize_t>(j)) = ctr[j];
    }
  }
  return out;
}

fdr::GridSpec grid_for(const fdr::PointCloud& cloud, std::vector<std::size_t> cells,
                       std::size_t levels, double domain_padding, double value_padding) {
  if (cells.size() == 1) cells.assign(cloud.dim(), cells[0]);
  return fdr::make_grid(cloud, cells, levels, domain_padding, value_padding);
}

py::dict fit(const Array& x, const Array& y, std::vector<std::size_t> cells, double lam, double nu,
             std::size_t levels, double tol, int max_iter, double domain_padding,
             double value_padding) {
  const auto cloud = to_cloud(x, y);
  const auto grid = grid_for(cloud, std::move(cells), levels, domain_padding, value_padding);
  fdr::EstimatorSettings settings;
  settings.solver.lambda = lam;
  settings.solver.nu = nu;
  settings.solver.tol = tol;
  settings.solver.max_iter = max_iter;
  fdr::Fit f;
  {
    py::gil_scoped_release release;
    f = fdr::fit_cloud(cloud, grid, settings);
  }
  py::dict out;
  out["centers"] = centers(grid);
  out["cells"] = grid.n_cells;
  out["u_hat"] = to_array(f.estimate.u_hat);
  out["jump_mask"] = to_array(f.estimate.jump_mask);
  out["jump_size"] = to_array(f.estimate.jump_size);
  out["converged"] = f.report.converged;
  out["iterations"] = f.report.iterations;
  out["residual"] = f.report.residual;
  out["energy"] = f.report.energy;
  return out;
}

py::dict sure_search(const Array& x, const Array& y, std::vector<std::size_t> cells,
                     std::pair<double, double> lambda_range, std::pair<double, double> nu_range,
                     std::size_t n_lambda, std::size_t n_nu, std::optional<double> sigma,
                     std::size_t levels, double tol, int max_iter, std::uint64_t seed, int workers) {
  const auto cloud = to_cloud(x, y);
  const auto grid = grid_for(cloud, std::move(cells), levels, 0.0, 0.05);
  fdr::EstimatorSettings settings;
  settings.solver.tol = tol;
  settings.solver.max_iter = max_iter;
  fdr::SureConfig cfg;
  cfg.lambda_range = {lambda_range.first, lambda_range.second};
  cfg.nu_range = {nu_range.first, nu_range.second};
  cfg.n_lambda = n_lambda;
  cfg.n_nu = n_nu;
  cfg.sigma = sigma;
  cfg.seed = seed;
  fdr::SureResult res;
  {
    py::gil_scoped_release release;
    res = fdr::sure_search(cloud, grid, settings, cfg, workers);
  }
  std::vector<double> lam;
  std::vector<double> nus;
  std::vector<double> eta;
  for (const auto& row : res.table) {
    lam.push_back(row.lambda);
    nus.push_back(row.nu);
    eta.push_back(row.eta);
  }
  py::dict out;
  out["lambda"] = res.lambda;
  out["nu"] = res.nu;
  out["eta"] = res.eta;
  out["sigma"] = res.sigma;
  out["table_lambda"] = to_array(lam);
  out["table_nu"] = to_array(nus);
  out["table_eta"] = to_array(eta);
  return out;
}

py::tuple sample(const fdr::Scenario& sc) {
  const auto cloud = fdr::sample_cloud(sc);
  py::array_t<double> x({static_cast<py::ssize_t>(cloud.size()), static_cast<py::ssize_t>(cloud.dim())});
  std::copy(cloud.coords().begin(), cloud.coords().end(), x.mutable_data());
  return py::make_tuple(x, to_array(cloud.responses()));
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Free discontinuity regression";
  py::register_exception<fdr::Error>(m, "SolverError", PyExc_RuntimeError);
  // Tried before the generic mapping above: input problems become ValueError.
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const fdr::Error& e) {
      switch (e.code()) {
        case fdr::ErrorCode::InvalidConfig:
        case fdr::ErrorCode::GridMismatch:
        case fdr::ErrorCode::ShapeMismatch:
        case fdr::ErrorCode::NonFiniteInput:
        case fdr::ErrorCode::EmptyCloud:
          py::set_error(PyExc_ValueError, e.what());
          return;
        default:
          throw;
      }
    }
  });

  m.def("fit", &fit, py::arg("x"), py::arg("y"), py::arg("cells"), py::arg("lam") = 100.0,
        py::arg("nu") = 1e-3, py::arg("levels") = 32, py::arg("tol") = 5e-5,
        py::arg("max_iter") = 5000, py::arg("domain_padding") = 0.0,
        py::arg("value_padding") = 0.05,
        "Fit on points x (n, d) with responses y (n,). Per-cell outputs use axis 0 fastest.");
  m.def("sure_search", &sure_search, py::arg("x"), py::arg("y"), py::arg("cells"),
        py::arg("lambda_range") = std::pair{1.0, 500.0}, py::arg("nu_range") = std::pair{5e-4, 0.1},
        py::arg("n_lambda") = 5, py::arg("n_nu") = 5, py::arg("sigma") = py::none(),
        py::arg("levels") = 32, py::arg("tol") = 5e-5, py::arg("max_iter") = 5000,
        py::arg("seed") = 0, py::arg("workers") = 1);
  m.def(
      "circle_sample",
      [](double d, std::size_t n, std::uint64_t seed, double sigma) {
        auto sc = fdr::circle_scenario(d, n, seed);
        sc.sigma = sigma;
        return sample(sc);
      },
      py::arg("d"), py::arg("n"), py::arg("seed") = 0, py::arg("sigma") = 0.05);
  m.def(
      "fig1_sample",
      [](std::size_t n, std::uint64_t seed, double sigma) {
        auto sc = fdr::fig1_scenario(n, seed);
        sc.sigma = sigma;
        return sample(sc);
      },
      py::arg("n"), py::arg("seed") = 0, py::arg("sigma") = 0.05);
}
