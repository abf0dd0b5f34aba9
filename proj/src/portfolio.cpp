#include "fxvol/portfolio.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <ostream>

#include <fmt/format.h>

#include "fxvol/csv.hpp"
#include "fxvol/error.hpp"
#include "fxvol/model.hpp"

namespace fxvol::portfolio {

const char* to_string(CoMoment mode) { return mode == CoMoment::Covariance ? "covariance" : "correlation"; }

CoMoment parse_co_moment(std::string_view text) {
  std::string lower(text);
  std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
  if (lower == "covariance" || lower == "cov") return CoMoment::Covariance;
  if (lower == "correlation" || lower == "corr" || lower == "literal") return CoMoment::Correlation;
  fail(ErrorKind::Config, fmt::format("unknown co-moment mode '{}'", text));
}

Weight gmvp_weight(double vol1, double vol2, double co_moment) {
  if (!(vol1 > 0.0) || !(vol2 > 0.0)) {
    fail(ErrorKind::Domain, fmt::format("volatilities must be positive (got {}, {})", vol1, vol2));
  }
  const double v1 = vol1 * vol1;
  const double v2 = vol2 * vol2;
  const double denom = v1 + v2 - 2.0 * co_moment;
  if (std::abs(denom) < 1e-12) {
    fail(ErrorKind::Singularity, fmt::format("GMVP denominator {} is singular", denom));
  }
  Weight w;
  w.unclamped = (v2 - co_moment) / denom;
  w.w1 = std::clamp(w.unclamped, kMinWeight, kMaxWeight);
  w.clamped = w.w1 != w.unclamped;
  return w;
}

PortfolioStats annualized_stats(std::span<const double> returns) {
  const std::size_t n = returns.size();
  if (n < 2) fail(ErrorKind::Length, "need at least two portfolio returns");
  double mean = 0.0;
  for (const auto r : returns) mean += r;
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (const auto r : returns) ss += (r - mean) * (r - mean);
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));
  PortfolioStats s;
  s.n_obs = n;
  s.ann_mean = mean * model::kPeriodsPerYear;
  s.ann_vol = sd * std::sqrt(model::kPeriodsPerYear);
  s.sharpe_defined = s.ann_vol > 0.0;
  s.ann_sharpe = s.sharpe_defined ? s.ann_mean / s.ann_vol : 0.0;
  return s;
}

Backtest backtest(const data::ReturnSeries& r1, const data::ReturnSeries& r2, const forecast::ForecastSeries& f1,
                  const forecast::ForecastSeries& f2, std::span<const double> corr, CoMoment mode) {
  const std::size_t n = r1.size();
  if (r2.size() != n || f1.size() != n || f2.size() != n || corr.size() != n) {
    fail(ErrorKind::Alignment, fmt::format("backtest inputs differ in length (returns {}, {}; forecasts {}, {}; "
                                           "correlation {})",
                                           n, r2.size(), f1.size(), f2.size(), corr.size()));
  }
  for (std::size_t t = 0; t < n; ++t) {
    if (r2.timestamps[t] != r1.timestamps[t] || f1.timestamps[t] != r1.timestamps[t] ||
        f2.timestamps[t] != r1.timestamps[t]) {
      fail(ErrorKind::Alignment, fmt::format("backtest inputs misaligned at row {} ({})", t,
                                             format_timestamp(r1.timestamps[t])));
    }
  }
  Backtest out;
  out.steps.reserve(n);
  std::vector<double> returns;
  returns.reserve(n);
  for (std::size_t t = 0; t < n; ++t) {
    AllocationStep s;
    s.timestamp = r1.timestamps[t];
    s.vol1 = f1.values[t];
    s.vol2 = f2.values[t];
    s.cov12 = mode == CoMoment::Covariance ? corr[t] * s.vol1 * s.vol2 : corr[t];
    const auto w = gmvp_weight(s.vol1, s.vol2, s.cov12);
    s.w1 = w.w1;
    s.w1_unclamped = w.unclamped;
    s.portfolio_return = s.w1 * r1.values[t] + (1.0 - s.w1) * r2.values[t];
    returns.push_back(s.portfolio_return);
    out.steps.push_back(s);
  }
  out.stats = annualized_stats(returns);
  return out;
}

void write_table2(std::ostream& out, std::span<const std::string> models, std::span<const PortfolioStats> stats) {
  if (models.size() != stats.size()) fail(ErrorKind::Config, "model names and statistics differ in length");
  std::vector<std::string> row{""};
  row.insert(row.end(), models.begin(), models.end());
  csv::write_row(out, row);
  row = {"Ann. Mean"};
  for (const auto& s : stats) row.push_back(fmt::format("{:.2f}", s.ann_mean));
  csv::write_row(out, row);
  row = {"Ann. Volatility"};
  for (const auto& s : stats) row.push_back(fmt::format("{:.2f}", s.ann_vol));
  csv::write_row(out, row);
  row = {"Ann. Sharpe Ratio"};
  for (const auto& s : stats) row.push_back(fmt::format("{:.2f}", s.ann_sharpe));
  csv::write_row(out, row);
}

void write_allocations(std::ostream& out, std::span<const AllocationStep> steps) {
  out << "timestamp,vol1,vol2,cov12,w1,w1_unclamped,portfolio_return\n";
  for (const auto& s : steps) {
    out << format_timestamp(s.timestamp) << ',' << csv::format_double(s.vol1) << ',' << csv::format_double(s.vol2)
        << ',' << csv::format_double(s.cov12) << ',' << csv::format_double(s.w1) << ','
        << csv::format_double(s.w1_unclamped) << ',' << csv::format_double(s.portfolio_return) << '\n';
  }
}

}  // namespace fxvol::portfolio
