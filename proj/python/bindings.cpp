#include <cstdint>
#include <string>
#include <vector>

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "cli.hpp"
#include "fxvol/baselines.hpp"
#include "fxvol/error.hpp"
#include "fxvol/forecast.hpp"
#include "fxvol/market_data.hpp"
#include "fxvol/mcmc.hpp"
#include "fxvol/mixture.hpp"
#include "fxvol/model.hpp"
#include "fxvol/portfolio.hpp"

namespace py = pybind11;
using namespace fxvol;

namespace {

py::array_t<double> to_array(const std::vector<double>& v) { return py::array_t<double>(v.size(), v.data()); }

std::vector<double> to_vector(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
  if (a.ndim() != 1) throw py::value_error("expected a one-dimensional array");
  return std::vector<double>(a.data(), a.data() + a.size());
}

/// Design from (row, col) pairs with labels "c<j>:1".
data::EventDesignMatrix make_design(std::size_t n_rows, std::size_t n_cols,
                                    const std::vector<std::pair<std::size_t, std::size_t>>& entries) {
  std::vector<data::ColumnLabel> labels;
  for (std::size_t j = 0; j < n_cols; ++j) labels.push_back({"c" + std::to_string(j), 1});
  std::vector<data::EventDesignMatrix::Entry> e;
  for (const auto& [r, c] : entries) e.push_back({r, c});
  return data::EventDesignMatrix(n_rows, std::move(labels), std::move(e));
}

py::dict fit_to_dict(const baselines::BaselineFit& fit) {
  py::dict params, se;
  for (std::size_t i = 0; i < fit.labels.size(); ++i) {
    params[py::str(fit.labels[i])] = fit.params[i];
    se[py::str(fit.labels[i])] = fit.std_errors[i];
  }
  py::dict d;
  d["model"] = baselines::to_string(fit.tag);
  d["params"] = params;
  d["std_errors"] = se;
  d["objective"] = fit.objective;
  d["converged"] = fit.converged;
  d["n_obs"] = fit.n_obs;
  return d;
}

}  // namespace

PYBIND11_MODULE(_fxvol, m) {
  m.doc() = "Bayesian intraday FX volatility engine";

  py::register_exception<Error>(m, "FxvolError", PyExc_RuntimeError);

  m.def("cli", &cli::run, py::arg("args"), "Run the fxvol command line; returns the exit code.");

  py::class_<model::ModelParams>(m, "ModelParams")
      .def(py::init<>())
      .def_readwrite("mu_h", &model::ModelParams::mu_h)
      .def_readwrite("phi", &model::ModelParams::phi)
      .def_readwrite("sigma_x2", &model::ModelParams::sigma_x2)
      .def_readwrite("beta", &model::ModelParams::beta)
      .def_readwrite("alpha", &model::ModelParams::alpha)
      .def_readwrite("pi", &model::ModelParams::pi)
      .def_readwrite("gamma", &model::ModelParams::gamma)
      .def_readwrite("sigma_alpha2", &model::ModelParams::sigma_alpha2)
      .def("resize_events", &model::ModelParams::resize_events)
      .def("validate", &model::ModelParams::validate);

  py::class_<model::PriorConfig>(m, "PriorConfig")
      .def(py::init<>())
      .def_readwrite("coef_mean", &model::PriorConfig::coef_mean)
      .def_readwrite("coef_var", &model::PriorConfig::coef_var)
      .def_readwrite("phi_mean", &model::PriorConfig::phi_mean)
      .def_readwrite("phi_var", &model::PriorConfig::phi_var)
      .def_readwrite("ig_x_shape", &model::PriorConfig::ig_x_shape)
      .def_readwrite("ig_x_scale", &model::PriorConfig::ig_x_scale)
      .def_readwrite("ig_a_shape", &model::PriorConfig::ig_a_shape)
      .def_readwrite("ig_a_scale", &model::PriorConfig::ig_a_scale)
      .def_readwrite("gamma_a", &model::PriorConfig::gamma_a)
      .def_readwrite("gamma_b", &model::PriorConfig::gamma_b);

  m.def("annualize", &model::annualize, py::arg("vol_5min"));
  m.def("sinusoidal_seasonal", &model::sinusoidal_seasonal, py::arg("amplitude"));

  m.def(
      "simulate",
      [](const model::ModelParams& params, std::size_t n, std::uint64_t seed, std::size_t n_cols,
         const std::vector<std::pair<std::size_t, std::size_t>>& events, const std::string& start) {
        const auto grid = data::make_grid(parse_timestamp(start), n);
        const auto design = make_design(n, n_cols, events);
        const auto sim = model::simulate(params, design, grid, seed);
        std::vector<std::string> ts;
        for (const auto& t : grid) ts.push_back(format_timestamp(t));
        py::dict d;
        d["timestamps"] = ts;
        d["returns"] = to_array(sim.returns.values);
        d["x"] = to_array(sim.x);
        d["bins"] = data::seasonal_indices(grid);
        return d;
      },
      py::arg("params"), py::arg("n"), py::arg("seed") = 1, py::arg("n_cols") = 0,
      py::arg("events") = std::vector<std::pair<std::size_t, std::size_t>>{},
      py::arg("start") = "2024-01-01T00:05:00Z",
      "Simulate n five-minute returns on a weekday grid; events are (row, column) pairs.");

  m.def(
      "run_chain",
      [](const py::array_t<double, py::array::c_style | py::array::forcecast>& y, const std::vector<int>& bins,
         const std::string& variant, std::size_t n_iter, std::size_t burn_in, std::size_t thin, std::uint64_t seed,
         std::size_t n_cols, const std::vector<std::pair<std::size_t, std::size_t>>& events,
         const model::PriorConfig& prior) {
        const auto values = to_vector(y);
        const auto design = make_design(values.size(), n_cols, events);
        mcmc::Schedule schedule{n_iter, burn_in, thin, seed};
        mcmc::PosteriorDraws draws;
        {
          py::gil_scoped_release release;
          draws = mcmc::run_chain(values, bins, design, prior, schedule, mcmc::parse_variant(variant));
        }
        const std::size_t k = draws.size();
        std::vector<double> mu, phi, sx, gamma, sa;
        py::array_t<double> beta({k, static_cast<std::size_t>(model::kSeasonalBins)});
        py::array_t<double> alpha({k, n_cols});
        py::array_t<double> pi({k, n_cols});
        auto b = beta.mutable_unchecked<2>();
        auto a = alpha.mutable_unchecked<2>();
        auto p = pi.mutable_unchecked<2>();
        for (std::size_t i = 0; i < k; ++i) {
          const auto& d = draws.params[i];
          mu.push_back(d.mu_h);
          phi.push_back(d.phi);
          sx.push_back(d.sigma_x2);
          gamma.push_back(d.gamma);
          sa.push_back(d.sigma_alpha2);
          for (int j = 0; j < model::kSeasonalBins; ++j) b(i, j) = d.beta[static_cast<std::size_t>(j)];
          for (std::size_t j = 0; j < n_cols; ++j) {
            a(i, j) = d.alpha[j];
            p(i, j) = d.pi[j];
          }
        }
        py::dict out;
        out["mu_h"] = to_array(mu);
        out["phi"] = to_array(phi);
        out["sigma_x2"] = to_array(sx);
        out["gamma"] = to_array(gamma);
        out["sigma_alpha2"] = to_array(sa);
        out["beta"] = beta;
        out["alpha"] = alpha;
        out["pi"] = pi;
        out["log_likelihood"] = to_array(draws.log_likelihood);
        out["x_mean"] = to_array(draws.x_mean);
        return out;
      },
      py::arg("y"), py::arg("bins"), py::arg("variant") = "FULL", py::arg("n_iter") = 2000,
      py::arg("burn_in") = 1000, py::arg("thin") = 1, py::arg("seed") = 1, py::arg("n_cols") = 0,
      py::arg("events") = std::vector<std::pair<std::size_t, std::size_t>>{},
      py::arg("prior") = model::PriorConfig{});

  m.def("log_chi2_mixture", [] {
    std::vector<std::tuple<double, double, double>> rows;
    for (const auto& c : mcmc::MixtureTable::log_chi2().components()) rows.emplace_back(c.weight, c.mean, c.variance);
    return rows;
  });

  m.def("fit_ar1_rv", [](const std::vector<double>& rv) { return fit_to_dict(baselines::fit_ar1_rv(rv)); });
  m.def("fit_har", [](const std::vector<double>& rv) { return fit_to_dict(baselines::fit_har(rv)); });
  m.def("fit_garch11", [](const std::vector<double>& y) { return fit_to_dict(baselines::fit_garch11(y)); });
  m.def("fit_gjr_garch", [](const std::vector<double>& y) { return fit_to_dict(baselines::fit_gjr_garch(y)); });

  m.def(
      "horse_race",
      [](const std::vector<double>& rv, const std::vector<double>& p, const std::vector<double>& c) {
        const auto r = forecast::horse_race(rv, p, c);
        py::dict d;
        d["b0"] = r.b0;
        d["b1"] = r.b1;
        d["b1_unclamped"] = r.b1_unclamped;
        d["se_b1"] = r.se_b1;
        d["t_stat"] = r.t_stat;
        d["clamped"] = r.clamped;
        d["n_obs"] = r.n_obs;
        return d;
      },
      py::arg("rv"), py::arg("proposal"), py::arg("competitor"));

  m.def(
      "diebold_mariano",
      [](const std::vector<double>& e_prop, const std::vector<double>& e_comp, std::size_t h) {
        const auto r = forecast::diebold_mariano(e_prop, e_comp, h);
        py::dict d;
        d["statistic"] = r.statistic;
        d["p_value"] = r.p_value;
        d["hac_lags"] = r.hac_lags;
        return d;
      },
      py::arg("e_prop"), py::arg("e_comp"), py::arg("horizon") = 1);

  m.def(
      "gmvp_weight",
      [](double v1, double v2, double cov) {
        const auto w = portfolio::gmvp_weight(v1, v2, cov);
        return py::make_tuple(w.w1, w.unclamped, w.clamped);
      },
      py::arg("vol1"), py::arg("vol2"), py::arg("cov12"), "Returns (w1, unclamped w1, clamped flag).");

  m.def(
      "annualized_stats",
      [](const std::vector<double>& r) {
        const auto s = portfolio::annualized_stats(r);
        py::dict d;
        d["ann_mean"] = s.ann_mean;
        d["ann_vol"] = s.ann_vol;
        d["ann_sharpe"] = s.ann_sharpe;
        d["sharpe_defined"] = s.sharpe_defined;
        return d;
      },
      py::arg("returns"));
}
