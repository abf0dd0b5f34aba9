#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "fxvol/forecast.hpp"
#include "fxvol/market_data.hpp"

namespace fxvol::portfolio {

inline constexpr double kMinWeight = -1.0;
inline constexpr double kMaxWeight = 2.0;

/// How the co-moment term of the weight formula is built from the trailing
/// correlation: rho * vol1 * vol2 (the exact minimizer), or rho itself.
enum class CoMoment { Covariance, Correlation };

const char* to_string(CoMoment mode);
CoMoment parse_co_moment(std::string_view text);

struct Weight {
  double w1;
  double unclamped;
  bool clamped;
};

/// w1 = (vol2^2 - c) / (vol1^2 + vol2^2 - 2c), clamped to [-1, 2].
Weight gmvp_weight(double vol1, double vol2, double co_moment);

struct AllocationStep {
  Timestamp timestamp;
  double vol1, vol2;
  double cov12;  // the co-moment actually used
  double w1;
  double w1_unclamped;
  double portfolio_return;
};

struct PortfolioStats {
  double ann_mean = 0.0;
  double ann_vol = 0.0;
  double ann_sharpe = 0.0;
  /// False when the volatility is zero; the Sharpe ratio is then reported as 0.
  bool sharpe_defined = true;
  std::size_t n_obs = 0;
};

/// Mean times 252*288, sample standard deviation times sqrt(252*288).
PortfolioStats annualized_stats(std::span<const double> returns);

struct Backtest {
  std::vector<AllocationStep> steps;
  PortfolioStats stats;
};

/// At each t the weight comes from the forecasts for t and corr[t] (the
/// realized correlation known before t) and is applied to the returns at t.
Backtest backtest(const data::ReturnSeries& r1, const data::ReturnSeries& r2, const forecast::ForecastSeries& f1,
                  const forecast::ForecastSeries& f2, std::span<const double> corr,
                  CoMoment mode = CoMoment::Covariance);

/// Rows Ann. Mean, Ann. Volatility, Ann. Sharpe Ratio; one column per model.
void write_table2(std::ostream& out, std::span<const std::string> models, std::span<const PortfolioStats> stats);

void write_allocations(std::ostream& out, std::span<const AllocationStep> steps);

}  // namespace fxvol::portfolio
