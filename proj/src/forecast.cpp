#include "fxvol/forecast.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <ostream>

#include <fmt/format.h>

#include "fxvol/baselines.hpp"
#include "fxvol/csv.hpp"
#include "fxvol/error.hpp"

namespace fxvol::forecast {

void write_forecasts(std::ostream& out, const ForecastSeries& series) {
  out << "timestamp,forecast\n";
  for (std::size_t i = 0; i < series.size(); ++i) {
    out << format_timestamp(series.timestamps[i]) << ',' << csv::format_double(series.values[i]) << '\n';
  }
}

ForecastSeries load_forecasts(const std::filesystem::path& path) {
  const auto table = csv::read_file(path);
  const auto ts_col = table.column("timestamp");
  const auto v_col = table.column("forecast");
  ForecastSeries out;
  out.model = path.stem().string();
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    out.timestamps.push_back(parse_timestamp(table.rows[r][ts_col]));
    out.values.push_back(csv::parse_double(table.rows[r][v_col], table, r));
  }
  return out;
}

std::vector<FilterStep> mixture_filter(std::span<const double> y, std::span<const double> offset_h, double phi,
                                       double sigma_x2, const mcmc::MixtureTable& table,
                                       double linearization_offset) {
  if (offset_h.size() != y.size()) fail(ErrorKind::Alignment, "deterministic component does not match returns");
  if (!(std::abs(phi) < 1.0)) fail(ErrorKind::Stationarity, fmt::format("phi = {} is not stationary", phi));
  const std::size_t k = table.size();
  std::vector<double> w(k), m(k), v(k);
  std::vector<FilterStep> out(y.size());
  double x_pred = 0.0;
  double p_pred = sigma_x2 / (1.0 - phi * phi);
  for (std::size_t t = 0; t < y.size(); ++t) {
    out[t].x_pred = x_pred;
    out[t].p_pred = p_pred;
    const double z = std::log(y[t] * y[t] + linearization_offset) - offset_h[t];
    double max_log = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < k; ++j) {
      const auto& c = table[j];
      const double s = p_pred + c.variance;
      const double e = z - c.mean - x_pred;
      w[j] = std::log(c.weight) - 0.5 * std::log(s) - 0.5 * e * e / s;
      max_log = std::max(max_log, w[j]);
      const double gain = p_pred / s;
      m[j] = x_pred + gain * e;
      v[j] = p_pred * (1.0 - gain);
    }
    double total = 0.0;
    for (std::size_t j = 0; j < k; ++j) total += (w[j] = std::exp(w[j] - max_log));
    double mean = 0.0;
    for (std::size_t j = 0; j < k; ++j) mean += w[j] / total * m[j];
    double var = 0.0;
    for (std::size_t j = 0; j < k; ++j) var += w[j] / total * (v[j] + (m[j] - mean) * (m[j] - mean));
    out[t].x_filt = mean;
    out[t].p_filt = var;
    x_pred = phi * mean;
    p_pred = phi * phi * var + sigma_x2;
  }
  return out;
}

std::vector<double> deterministic_log_variance(const mcmc::PosteriorMean& mean, std::span<const int> bins,
                                               const data::EventDesignMatrix& design) {
  const std::size_t n = bins.size();
  if (design.n_rows() < n) {
    fail(ErrorKind::Alignment, fmt::format("design has {} rows, forecasts need {}", design.n_rows(), n));
  }
  if (design.n_cols() != mean.alpha.size()) {
    fail(ErrorKind::Alignment,
         fmt::format("design has {} columns, posterior has {} event effects", design.n_cols(), mean.alpha.size()));
  }
  std::vector<double> out(n, mean.mu_h);
  for (std::size_t t = 0; t < n; ++t) {
    if (!mean.beta.empty()) {
      const int b = bins[t];
      if (b < 0 || static_cast<std::size_t>(b) >= mean.beta.size()) {
        fail(ErrorKind::Grid, fmt::format("bin {} out of range at row {}", b, t));
      }
      out[t] += mean.beta[static_cast<std::size_t>(b)];
    }
    for (const auto j : design.row(t)) out[t] += mean.alpha[j];
  }
  return out;
}

double proposal_volatility(double deterministic_h, double x_pred, double p_pred, bool lognormal_correction) {
  const double plug_in = std::exp(0.5 * (deterministic_h + x_pred));
  return lognormal_correction ? plug_in * std::exp(p_pred / 8.0) : plug_in;
}

std::vector<double> forecast_proposal(const mcmc::PosteriorMean& mean, std::span<const double> y,
                                      std::span<const int> bins, const data::EventDesignMatrix& design,
                                      const ProposalOptions& options) {
  if (bins.size() != y.size()) fail(ErrorKind::Alignment, "bins and returns differ in length");
  const auto h0 = deterministic_log_variance(mean, bins, design);
  const auto steps = mixture_filter(y, h0, mean.phi, mean.sigma_x2, mcmc::MixtureTable::log_chi2(),
                                    options.linearization_offset);
  std::vector<double> out(y.size());
  for (std::size_t t = 0; t < y.size(); ++t) {
    out[t] = proposal_volatility(h0[t], steps[t].x_pred, steps[t].p_pred, options.lognormal_correction);
  }
  return out;
}

// --- evaluation --------------------------------------------------------------

double hac_long_run_variance(std::span<const double> u, std::size_t lags) {
  const std::size_t n = u.size();
  if (n == 0) fail(ErrorKind::Length, "empty series");
  const double mean = std::accumulate(u.begin(), u.end(), 0.0) / static_cast<double>(n);
  auto autocov = [&](std::size_t l) {
    double s = 0.0;
    for (std::size_t t = l; t < n; ++t) s += (u[t] - mean) * (u[t - l] - mean);
    return s / static_cast<double>(n);
  };
  double lrv = autocov(0);
  for (std::size_t l = 1; l <= lags && l < n; ++l) {
    lrv += 2.0 * (1.0 - static_cast<double>(l) / static_cast<double>(lags + 1)) * autocov(l);
  }
  return lrv;
}

HorseRaceResult horse_race(std::span<const double> rv, std::span<const double> proposal,
                           std::span<const double> competitor) {
  if (rv.size() != proposal.size() || rv.size() != competitor.size()) {
    fail(ErrorKind::Alignment, fmt::format("horse race inputs differ in length ({}, {}, {})", rv.size(),
                                           proposal.size(), competitor.size()));
  }
  std::vector<double> target, regressor;
  for (std::size_t t = 0; t < rv.size(); ++t) {
    if (std::isfinite(rv[t]) && std::isfinite(proposal[t]) && std::isfinite(competitor[t])) {
      target.push_back(rv[t] - competitor[t]);
      regressor.push_back(proposal[t] - competitor[t]);
    }
  }
  const std::size_t n = target.size();
  if (n < 30) fail(ErrorKind::Length, fmt::format("horse race needs 30 aligned observations, got {}", n));

  const double xbar = std::accumulate(regressor.begin(), regressor.end(), 0.0) / static_cast<double>(n);
  double sxx = 0.0;
  for (const auto x : regressor) sxx += (x - xbar) * (x - xbar);
  if (!(sxx > 1e-12 * static_cast<double>(n) * std::max(1.0, xbar * xbar))) {
    fail(ErrorKind::Degenerate, "proposal and competitor forecasts do not differ (degenerate regressor)");
  }

  Eigen::MatrixXd X(static_cast<Eigen::Index>(n), 2);
  Eigen::VectorXd Y(static_cast<Eigen::Index>(n));
  for (std::size_t t = 0; t < n; ++t) {
    X(static_cast<Eigen::Index>(t), 0) = 1.0;
    X(static_cast<Eigen::Index>(t), 1) = regressor[t];
    Y(static_cast<Eigen::Index>(t)) = target[t];
  }
  const auto fit = baselines::ols(X, Y);

  // Newey-West sandwich (X'X)^-1 S (X'X)^-1 with Bartlett weights.
  const std::size_t lags = static_cast<std::size_t>(std::floor(std::cbrt(static_cast<double>(n))));
  Eigen::MatrixXd S = Eigen::MatrixXd::Zero(2, 2);
  Eigen::MatrixXd G(static_cast<Eigen::Index>(n), 2);
  for (Eigen::Index t = 0; t < X.rows(); ++t) G.row(t) = X.row(t) * fit.residuals(t);
  S += G.transpose() * G;
  for (std::size_t l = 1; l <= lags && l < n; ++l) {
    const double w = 1.0 - static_cast<double>(l) / static_cast<double>(lags + 1);
    const auto m = static_cast<Eigen::Index>(n - l);
    const Eigen::MatrixXd gamma = G.bottomRows(m).transpose() * G.topRows(m);
    S += w * (gamma + gamma.transpose());
  }
  const Eigen::MatrixXd bread = (X.transpose() * X).inverse();
  const Eigen::MatrixXd cov = bread * S * bread;

  HorseRaceResult r;
  r.b0 = fit.coef(0);
  r.b1_unclamped = fit.coef(1);
  r.b1 = std::clamp(r.b1_unclamped, 0.0, 1.0);
  r.clamped = r.b1 != r.b1_unclamped;
  r.se_b1 = std::sqrt(std::max(cov(1, 1), 0.0));
  r.t_stat = r.se_b1 > 0.0 ? r.b1_unclamped / r.se_b1
                           : std::copysign(std::numeric_limits<double>::infinity(), r.b1_unclamped);
  r.n_obs = n;
  r.hac_lags = lags;
  return r;
}

namespace {

double lag1_autocorrelation(std::span<const double> d) {
  const std::size_t n = d.size();
  const double mean = std::accumulate(d.begin(), d.end(), 0.0) / static_cast<double>(n);
  double c0 = 0.0, c1 = 0.0;
  for (std::size_t t = 0; t < n; ++t) c0 += (d[t] - mean) * (d[t] - mean);
  for (std::size_t t = 1; t < n; ++t) c1 += (d[t] - mean) * (d[t - 1] - mean);
  return c0 > 0.0 ? c1 / c0 : 0.0;
}

}  // namespace

DMResult diebold_mariano_differential(std::span<const double> d, std::size_t horizon) {
  const std::size_t n = d.size();
  if (n < 30) fail(ErrorKind::Length, fmt::format("DM test needs 30 observations, got {}", n));
  if (horizon == 0) fail(ErrorKind::Config, "forecast horizon must be at least 1");
  for (const auto v : d) {
    if (!std::isfinite(v)) fail(ErrorKind::Numeric, "non-finite loss differential");
  }
  std::size_t lags = horizon - 1;
  const double rho1 = lag1_autocorrelation(d);
  if (std::abs(rho1) > 2.0 / std::sqrt(static_cast<double>(n))) lags = std::max<std::size_t>(lags, 5);
  const double lrv = hac_long_run_variance(d, lags);
  const double scale = std::inner_product(d.begin(), d.end(), d.begin(), 0.0) / static_cast<double>(n);
  if (!(lrv > 1e-14 * std::max(scale, 1e-300))) {
    fail(ErrorKind::Degenerate, "loss differential has zero variance; DM statistic undefined");
  }
  DMResult r;
  r.mean_differential = std::accumulate(d.begin(), d.end(), 0.0) / static_cast<double>(n);
  r.statistic = r.mean_differential / std::sqrt(lrv / static_cast<double>(n));
  r.p_value = 0.5 * std::erfc(r.statistic / std::numbers::sqrt2);
  r.hac_lags = lags;
  return r;
}

DMResult diebold_mariano(std::span<const double> e_prop, std::span<const double> e_comp, std::size_t horizon) {
  if (e_prop.size() != e_comp.size()) fail(ErrorKind::Alignment, "forecast error series differ in length");
  std::vector<double> d;
  d.reserve(e_prop.size());
  for (std::size_t t = 0; t < e_prop.size(); ++t) {
    if (std::isfinite(e_prop[t]) && std::isfinite(e_comp[t])) d.push_back(e_comp[t] * e_comp[t] - e_prop[t] * e_prop[t]);
  }
  return diebold_mariano_differential(d, horizon);
}

void write_table1(std::ostream& out, std::span<const CompetitorResult> results) {
  std::vector<std::string> row{""};
  for (const auto& r : results) row.push_back(r.model);
  csv::write_row(out, row);
  row = {"b1"};
  for (const auto& r : results) row.push_back(fmt::format("{:.2f}", r.horse_race.b1));
  csv::write_row(out, row);
  row = {"t-stat"};
  for (const auto& r : results) row.push_back(fmt::format("{:.2f}", r.horse_race.t_stat));
  csv::write_row(out, row);
  row = {"DM p-value"};
  for (const auto& r : results) row.push_back(fmt::format("{:.3f}", r.dm.p_value));
  csv::write_row(out, row);
}

}  // namespace fxvol::forecast
