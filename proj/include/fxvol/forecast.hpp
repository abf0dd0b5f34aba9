#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "fxvol/market_data.hpp"
#include "fxvol/mcmc.hpp"

namespace fxvol::forecast {

/// Predicted five-minute volatility (percent) stamped at the target window.
struct ForecastSeries {
  std::string model;
  std::vector<Timestamp> timestamps;
  std::vector<double> values;

  std::size_t size() const { return values.size(); }
};

void write_forecasts(std::ostream& out, const ForecastSeries& series);
ForecastSeries load_forecasts(const std::filesystem::path& path);

// --- proposal ----------------------------------------------------------------

struct ProposalOptions {
  /// Multiply by exp(P/8), the mean of exp(x/2) under the predictive
  /// N(x_hat, P). Off gives the plain plug-in exp(h_hat/2).
  bool lognormal_correction = true;
  double linearization_offset = mcmc::kLinearizationOffset;
};

struct FilterStep {
  double x_pred;  // E[x_t | y_1..y_{t-1}]
  double p_pred;
  double x_filt;  // E[x_t | y_1..y_t]
  double p_filt;
};

/// Kalman filter on log(y^2 + c) with the observation noise replaced, at each
/// step, by the moment-matched collapse of the posterior over the seven
/// mixture components. x_1 starts from the stationary law.
std::vector<FilterStep> mixture_filter(std::span<const double> y, std::span<const double> offset_h, double phi,
                                       double sigma_x2, const mcmc::MixtureTable& table,
                                       double linearization_offset = mcmc::kLinearizationOffset);

/// Deterministic part mu_h + beta[bin] + sum of active alpha for every row.
std::vector<double> deterministic_log_variance(const mcmc::PosteriorMean& mean, std::span<const int> bins,
                                               const data::EventDesignMatrix& design);

/// One-step forecasts at the posterior mean. out[t] uses y[0..t-1] and the
/// (scheduled) design row t. The design must cover every row of y.
std::vector<double> forecast_proposal(const mcmc::PosteriorMean& mean, std::span<const double> y,
                                      std::span<const int> bins, const data::EventDesignMatrix& design,
                                      const ProposalOptions& options = {});

/// Single-period version for a given predictive state.
double proposal_volatility(double deterministic_h, double x_pred, double p_pred, bool lognormal_correction = true);

// --- evaluation --------------------------------------------------------------

/// Bartlett-weighted long-run variance of a series (mean removed), i.e.
/// gamma_0 + 2 sum_{l=1..L} (1 - l/(L+1)) gamma_l.
double hac_long_run_variance(std::span<const double> u, std::size_t lags);

struct HorseRaceResult {
  double b0 = 0.0;
  double b1 = 0.0;            // clamped to [0, 1]
  double b1_unclamped = 0.0;
  double se_b1 = 0.0;          // HAC
  double t_stat = 0.0;         // of the unclamped estimate
  bool clamped = false;
  std::size_t n_obs = 0;
  std::size_t hac_lags = 0;
};

/// RV_t - C_t = b0 + b1 (P_t - C_t) + e_t. Rows where any input is not finite
/// are dropped; at least 30 must remain.
HorseRaceResult horse_race(std::span<const double> rv, std::span<const double> proposal,
                           std::span<const double> competitor);

struct DMResult {
  double statistic = 0.0;
  double p_value = 1.0;  // one-sided, H1: competitor less accurate
  double mean_differential = 0.0;
  std::string loss = "squared_error";
  std::size_t hac_lags = 0;
};

/// DM test on a loss differential d_t = L_comp - L_prop. The long-run variance
/// uses h - 1 Bartlett lags, widened to 5 when the first-order
/// autocorrelation of d exceeds 2 / sqrt(n) in magnitude.
DMResult diebold_mariano_differential(std::span<const double> d, std::size_t horizon = 1);

/// Forecast errors in, squared-error loss.
DMResult diebold_mariano(std::span<const double> e_prop, std::span<const double> e_comp, std::size_t horizon = 1);

struct CompetitorResult {
  std::string model;
  HorseRaceResult horse_race;
  DMResult dm;
};

/// Rows b1, t-stat, DM p-value; one column per competitor.
void write_table1(std::ostream& out, std::span<const CompetitorResult> results);

}  // namespace fxvol::forecast
