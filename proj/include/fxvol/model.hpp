#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "fxvol/market_data.hpp"

namespace fxvol::model {

inline constexpr int kSeasonalBins = data::kBinsPerDay;
/// 252 trading days of 288 five-minute windows.
inline constexpr double kPeriodsPerYear = 252.0 * 288.0;

/// Parameters of the log-variance decomposition
///   h_t = mu_h + x_t + beta[bin(t)] + sum_{j active at t} alpha_j,
///   x_t = phi x_{t-1} + sigma_x eta_t,
/// with spike-and-slab event effects (alpha_j = 0 unless pi_j = 1).
struct ModelParams {
  double mu_h = 0.0;
  double phi = 0.95;
  double sigma_x2 = 0.02;
  std::vector<double> beta = std::vector<double>(kSeasonalBins, 0.0);
  std::vector<double> alpha;
  std::vector<std::uint8_t> pi;
  double gamma = 0.05;
  double sigma_alpha2 = 1.0;

  /// Resizes alpha/pi to m columns, all inactive.
  void resize_events(std::size_t m);

  /// Throws a config error naming the first violated invariant.
  void validate() const;
};

/// Hyperparameters. Coefficients (mu_h and the seasonal bins) get
/// N(coef_mean, coef_var); phi gets N(phi_mean, phi_var) truncated to
/// (-1, 1); sigma_x2 and sigma_alpha2 get inverse-gamma priors; gamma gets
/// Beta(gamma_a, gamma_b).
struct PriorConfig {
  double coef_mean = 0.0;
  double coef_var = 100.0;
  double phi_mean = 0.95;
  double phi_var = 0.25;
  double ig_x_shape = 2.5;
  double ig_x_scale = 0.025;
  double ig_a_shape = 2.5;
  double ig_a_scale = 2.5;
  double gamma_a = 1.0;
  double gamma_b = 19.0;

  void validate() const;
};

double log_variance(const ModelParams& params, double x_t, int bin, std::span<const std::size_t> event_cols);

struct MultiplicativeComponents {
  double sigma = 1.0;  // level
  double X = 1.0;      // stochastic volatility
  double S = 1.0;      // seasonal
  double E = 1.0;      // announcements

  double volatility() const { return sigma * X * S * E; }
};

/// v_t = sigma * X_t * S_t * E_t, each factor exp(component / 2).
MultiplicativeComponents multiplicative_components(const ModelParams& params, double x_t, int bin,
                                                   std::span<const std::size_t> event_cols);

/// Scales a five-minute volatility (percent) to an annual one.
double annualize(double vol_5min);

struct Simulation {
  data::ReturnSeries returns;
  std::vector<double> x;
};

/// Draws returns from the model on `grid`. x_1 comes from the stationary
/// distribution. Deterministic in `seed`.
Simulation simulate(const ModelParams& params, const data::EventDesignMatrix& design,
                    std::span<const Timestamp> grid, std::uint64_t seed);

struct IntradaySimulation {
  Simulation five_min;
  data::ReturnSeries one_min;  // five sub-returns per window summing to the five-minute return
};

/// Same model, but each five-minute return is built from five one-minute
/// returns with variance v_t^2 / 5, so realized volatility is available.
IntradaySimulation simulate_intraday(const ModelParams& params, const data::EventDesignMatrix& design,
                                     std::span<const Timestamp> grid, std::uint64_t seed);

/// beta_k = amplitude * sin(2 pi k / 288), demeaned.
std::vector<double> sinusoidal_seasonal(double amplitude);

/// Synthetic calendar: events "EV001", "EV002", ..., each released at
/// `releases` distinct grid points drawn without replacement.
data::EventCalendar synthetic_calendar(std::span<const Timestamp> grid, std::size_t n_events, std::size_t releases,
                                       std::uint64_t seed);

/// Rebuilds a price path starting at `initial` from percent log returns,
/// with one leading bar one grid step before the first return.
std::vector<data::PriceBar> prices_from_returns(const data::ReturnSeries& returns, double initial = 1.0);

}  // namespace fxvol::model
