#include "fxvol/model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include <fmt/format.h>

#include "fxvol/error.hpp"
#include "fxvol/rng.hpp"

namespace fxvol::model {

void ModelParams::resize_events(std::size_t m) {
  alpha.assign(m, 0.0);
  pi.assign(m, 0);
}

void ModelParams::validate() const {
  if (!(std::abs(phi) < 1.0)) fail(ErrorKind::Config, fmt::format("|phi| must be < 1, got {}", phi));
  if (!(sigma_x2 > 0.0)) fail(ErrorKind::Config, fmt::format("sigma_x2 must be positive, got {}", sigma_x2));
  if (!(sigma_alpha2 > 0.0)) fail(ErrorKind::Config, fmt::format("sigma_alpha2 must be positive, got {}", sigma_alpha2));
  if (!(gamma > 0.0 && gamma < 1.0)) fail(ErrorKind::Config, fmt::format("gamma must lie in (0,1), got {}", gamma));
  if (beta.size() != static_cast<std::size_t>(kSeasonalBins)) {
    fail(ErrorKind::Config, fmt::format("beta needs {} entries, got {}", kSeasonalBins, beta.size()));
  }
  const double sum = std::accumulate(beta.begin(), beta.end(), 0.0);
  if (std::abs(sum) > 1e-10) fail(ErrorKind::Config, fmt::format("seasonal coefficients sum to {}, not 0", sum));
  if (alpha.size() != pi.size()) fail(ErrorKind::Config, "alpha and pi differ in length");
  for (std::size_t j = 0; j < alpha.size(); ++j) {
    if (pi[j] > 1) fail(ErrorKind::Config, fmt::format("pi[{}] is not 0/1", j));
    if (pi[j] == 0 && alpha[j] != 0.0) fail(ErrorKind::Config, fmt::format("alpha[{}] nonzero while pi[{}] = 0", j, j));
  }
  if (!std::isfinite(mu_h)) fail(ErrorKind::Config, "mu_h is not finite");
}

void PriorConfig::validate() const {
  if (!(coef_var > 0.0)) fail(ErrorKind::Config, "prior.coef_var must be positive");
  if (!(phi_var > 0.0)) fail(ErrorKind::Config, "prior.phi_var must be positive");
  if (!(ig_x_shape > 0.0 && ig_x_scale > 0.0)) fail(ErrorKind::Config, "prior.ig_x_* must be positive");
  if (!(ig_a_shape > 0.0 && ig_a_scale > 0.0)) fail(ErrorKind::Config, "prior.ig_a_* must be positive");
  if (!(gamma_a > 0.0 && gamma_b > 0.0)) fail(ErrorKind::Config, "prior.gamma_a/gamma_b must be positive");
  if (!std::isfinite(coef_mean) || !std::isfinite(phi_mean)) fail(ErrorKind::Config, "prior means must be finite");
}

namespace {

double event_sum(const ModelParams& params, std::span<const std::size_t> event_cols) {
  double e = 0.0;
  for (const auto j : event_cols) e += params.alpha.at(j);
  return e;
}

}  // namespace

double log_variance(const ModelParams& params, double x_t, int bin, std::span<const std::size_t> event_cols) {
  return params.mu_h + x_t + params.beta.at(static_cast<std::size_t>(bin)) + event_sum(params, event_cols);
}

MultiplicativeComponents multiplicative_components(const ModelParams& params, double x_t, int bin,
                                                   std::span<const std::size_t> event_cols) {
  return {std::exp(params.mu_h / 2.0), std::exp(x_t / 2.0),
          std::exp(params.beta.at(static_cast<std::size_t>(bin)) / 2.0), std::exp(event_sum(params, event_cols) / 2.0)};
}

double annualize(double vol_5min) {
  if (!(vol_5min >= 0.0)) fail(ErrorKind::Domain, fmt::format("volatility must be non-negative, got {}", vol_5min));
  return vol_5min * std::sqrt(kPeriodsPerYear);
}

namespace {

std::vector<double> simulate_x(const ModelParams& params, std::size_t n, Rng& rng) {
  std::vector<double> x(n);
  if (n == 0) return x;
  const double sd = std::sqrt(params.sigma_x2);
  x[0] = rng.normal(0.0, std::sqrt(params.sigma_x2 / (1.0 - params.phi * params.phi)));
  for (std::size_t t = 1; t < n; ++t) x[t] = params.phi * x[t - 1] + sd * rng.normal();
  return x;
}

void check_simulation_inputs(const ModelParams& params, const data::EventDesignMatrix& design,
                             std::span<const Timestamp> grid) {
  if (!(std::abs(params.phi) < 1.0)) {
    fail(ErrorKind::Stationarity, fmt::format("|phi| = {} is not stationary", std::abs(params.phi)));
  }
  if (grid.empty()) fail(ErrorKind::Config, "simulation length must be at least 1");
  if (design.n_rows() != grid.size()) {
    fail(ErrorKind::Config, fmt::format("design has {} rows for {} periods", design.n_rows(), grid.size()));
  }
  if (design.n_cols() != params.alpha.size()) {
    fail(ErrorKind::Config, fmt::format("design has {} columns, params have {} event effects", design.n_cols(),
                                        params.alpha.size()));
  }
  if (!(params.sigma_x2 >= 0.0)) fail(ErrorKind::Config, "sigma_x2 must be non-negative");
}

}  // namespace

Simulation simulate(const ModelParams& params, const data::EventDesignMatrix& design, std::span<const Timestamp> grid,
                    std::uint64_t seed) {
  check_simulation_inputs(params, design, grid);
  Rng rng(seed, 0);
  Rng state_rng = rng.split(1);
  Rng obs_rng = rng.split(2);
  Simulation sim;
  sim.x = simulate_x(params, grid.size(), state_rng);
  sim.returns.grid_step_minutes = 5;
  sim.returns.timestamps.assign(grid.begin(), grid.end());
  sim.returns.values.resize(grid.size());
  for (std::size_t t = 0; t < grid.size(); ++t) {
    const double h = log_variance(params, sim.x[t], data::seasonal_index(grid[t]), design.row(t));
    sim.returns.values[t] = std::exp(h / 2.0) * obs_rng.normal();
  }
  return sim;
}

IntradaySimulation simulate_intraday(const ModelParams& params, const data::EventDesignMatrix& design,
                                     std::span<const Timestamp> grid, std::uint64_t seed) {
  check_simulation_inputs(params, design, grid);
  Rng rng(seed, 0);
  Rng state_rng = rng.split(1);
  Rng obs_rng = rng.split(3);
  IntradaySimulation sim;
  sim.five_min.x = simulate_x(params, grid.size(), state_rng);
  auto& five = sim.five_min.returns;
  five.grid_step_minutes = 5;
  five.timestamps.assign(grid.begin(), grid.end());
  five.values.resize(grid.size());
  sim.one_min.grid_step_minutes = 1;
  sim.one_min.timestamps.reserve(grid.size() * 5);
  sim.one_min.values.reserve(grid.size() * 5);
  for (std::size_t t = 0; t < grid.size(); ++t) {
    const double h = log_variance(params, sim.five_min.x[t], data::seasonal_index(grid[t]), design.row(t));
    const double sd = std::exp(h / 2.0) / std::sqrt(5.0);
    double total = 0.0;
    for (int k = 4; k >= 0; --k) {
      const double r = sd * obs_rng.normal();
      sim.one_min.timestamps.push_back(grid[t] - std::chrono::minutes{k});
      sim.one_min.values.push_back(r);
      total += r;
    }
    five.values[t] = total;
  }
  return sim;
}

std::vector<data::PriceBar> prices_from_returns(const data::ReturnSeries& returns, double initial) {
  if (returns.size() == 0) fail(ErrorKind::Length, "no returns to integrate");
  std::vector<data::PriceBar> bars;
  bars.reserve(returns.size() + 1);
  double log_price = std::log(initial);
  bars.push_back({returns.timestamps.front() - std::chrono::minutes{returns.grid_step_minutes}, initial});
  for (std::size_t t = 0; t < returns.size(); ++t) {
    log_price += returns.values[t] / 100.0;
    bars.push_back({returns.timestamps[t], std::exp(log_price)});
  }
  return bars;
}

std::vector<double> sinusoidal_seasonal(double amplitude) {
  std::vector<double> beta(kSeasonalBins);
  for (int k = 0; k < kSeasonalBins; ++k) {
    beta[static_cast<std::size_t>(k)] = amplitude * std::sin(2.0 * std::numbers::pi * k / kSeasonalBins);
  }
  const double mean = std::accumulate(beta.begin(), beta.end(), 0.0) / kSeasonalBins;
  for (auto& b : beta) b -= mean;
  return beta;
}

data::EventCalendar synthetic_calendar(std::span<const Timestamp> grid, std::size_t n_events, std::size_t releases,
                                       std::uint64_t seed) {
  if (releases > grid.size()) {
    fail(ErrorKind::Config, fmt::format("{} releases do not fit on a grid of {} points", releases, grid.size()));
  }
  Rng rng(seed, 0);
  data::EventCalendar calendar;
  std::vector<std::size_t> idx(grid.size());
  for (std::size_t e = 0; e < n_events; ++e) {
    Rng event_rng = rng.split(e + 1);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    // Partial Fisher-Yates: the first `releases` slots are a uniform sample.
    for (std::size_t i = 0; i < releases; ++i) {
      const auto span = static_cast<double>(idx.size() - i);
      const auto j = i + std::min(static_cast<std::size_t>(event_rng.uniform() * span), idx.size() - i - 1);
      std::swap(idx[i], idx[j]);
    }
    std::vector<std::size_t> picked(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(releases));
    std::sort(picked.begin(), picked.end());
    const auto id = fmt::format("EV{:03d}", e + 1);
    for (const auto i : picked) calendar.entries.push_back({id, fmt::format("Synthetic event {}", e + 1), "XX", grid[i]});
  }
  return calendar;
}

}  // namespace fxvol::model
