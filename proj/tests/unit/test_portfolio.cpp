#include <cmath>
#include <sstream>

#include <fmt/format.h>
#include <gtest/gtest.h>

#include "fxvol/portfolio.hpp"
#include "fxvol/rng.hpp"
#include "test_support.hpp"

using namespace fxvol;
using namespace fxvol::portfolio;
using fxvol::testing::ts;

namespace {

/// Minimizes w^2 s1 + (1-w)^2 s2 + 2 w (1-w) c on a 1e-6 grid around a coarse
/// minimum.
double grid_minimizer(double v1, double v2, double c) {
  const auto var = [&](double w) { return w * w * v1 * v1 + (1 - w) * (1 - w) * v2 * v2 + 2 * w * (1 - w) * c; };
  double best = -10.0;
  for (double w = -10.0; w <= 10.0; w += 1e-3) {
    if (var(w) < var(best)) best = w;
  }
  double fine = best;
  for (double w = best - 1e-3; w <= best + 1e-3; w += 1e-6) {
    if (var(w) < var(fine)) fine = w;
  }
  return fine;
}

data::ReturnSeries series(const std::vector<double>& v) {
  data::ReturnSeries s;
  auto t = ts("2024-01-02T00:05:00Z");
  for (const double x : v) {
    s.timestamps.push_back(t);
    s.values.push_back(x);
    t += std::chrono::minutes{5};
  }
  return s;
}

forecast::ForecastSeries forecasts(const data::ReturnSeries& like, double value) {
  forecast::ForecastSeries f;
  f.timestamps = like.timestamps;
  f.values.assign(like.size(), value);
  return f;
}

}  // namespace

TEST(Gmvp, ClosedFormExamples) {
  EXPECT_EQ(gmvp_weight(1.0, 1.0, 0.0).w1, 0.5);
  for (const double v : {0.01, 0.3, 1.0, 7.5}) EXPECT_EQ(gmvp_weight(v, v, 0.0).w1, 0.5);
  EXPECT_NEAR(gmvp_weight(1.0, 2.0, 0.0).w1, 0.8, 1e-15);
  const auto big = gmvp_weight(1.0, 1.2, 0.99 * 1.2);
  EXPECT_GT(big.unclamped, 2.0);
  EXPECT_EQ(big.w1, 2.0);
  EXPECT_TRUE(big.clamped);
  const auto low = gmvp_weight(1.2, 1.0, 0.99 * 1.2);
  EXPECT_LT(low.unclamped, -1.0);
  EXPECT_EQ(low.w1, -1.0);
}

TEST(Gmvp, ClampsExactValue) {
  // v1 = 1, v2 = 2, c = 95/44: unclamped (4 - c) / (5 - 2c) = 2.7.
  const auto w = gmvp_weight(1.0, 2.0, 95.0 / 44.0);
  EXPECT_NEAR(w.unclamped, 2.7, 1e-9);
  EXPECT_EQ(w.w1, 2.0);
}

TEST(Gmvp, MatchesGridMinimizer) {
  Rng rng(3);
  for (int i = 0; i < 200; ++i) {
    const double v1 = 0.02 + rng.uniform();
    const double v2 = 0.02 + rng.uniform();
    const double rho = -0.9 + 1.8 * rng.uniform();
    const double c = rho * v1 * v2;
    const auto w = gmvp_weight(v1, v2, c);
    EXPECT_NEAR(w.unclamped, grid_minimizer(v1, v2, c), 1e-5) << v1 << " " << v2 << " " << c;
  }
}

TEST(Gmvp, Errors) {
  EXPECT_FXVOL_ERROR(gmvp_weight(1.0, 1.0, 1.0), ErrorKind::Singularity);
  EXPECT_FXVOL_ERROR(gmvp_weight(0.0, 1.0, 0.0), ErrorKind::Domain);
  EXPECT_FXVOL_ERROR(gmvp_weight(1.0, -1.0, 0.0), ErrorKind::Domain);
}

TEST(Stats, SharpeIdentity) {
  EXPECT_EQ(fmt::format("{:.2f}", 8.47 / 10.50), "0.81");
  Rng rng(4);
  std::vector<double> r(5000);
  for (auto& v : r) v = 0.0001 + 0.03 * rng.normal();
  const auto s = annualized_stats(r);
  EXPECT_NEAR(s.ann_sharpe, s.ann_mean / s.ann_vol, 1e-10);
  EXPECT_NEAR(s.ann_mean, fxvol::testing::mean_of(r) * 72576.0, 1e-9);
  EXPECT_NEAR(s.ann_vol, std::sqrt(fxvol::testing::variance_of(r) * 72576.0), 1e-9);
}

TEST(Stats, ZeroVolatilityFlag) {
  const std::vector<double> r(100, 0.0);
  const auto s = annualized_stats(r);
  EXPECT_EQ(s.ann_mean, 0.0);
  EXPECT_EQ(s.ann_vol, 0.0);
  EXPECT_EQ(s.ann_sharpe, 0.0);
  EXPECT_FALSE(s.sharpe_defined);
}

TEST(Backtest, ConstantHalfWeights) {
  Rng rng(5);
  const std::size_t n = 100000;
  const double s1 = 0.04, s2 = 0.03;
  std::vector<double> a(n), b(n);
  for (std::size_t t = 0; t < n; ++t) {
    a[t] = s1 * rng.normal();
    b[t] = s2 * rng.normal();
  }
  const auto r1 = series(a), r2 = series(b);
  const std::vector<double> corr(n, 0.0);
  const auto bt = backtest(r1, r2, forecasts(r1, 0.05), forecasts(r2, 0.05), corr);
  for (const auto& s : bt.steps) ASSERT_EQ(s.w1, 0.5);
  const double target = std::sqrt((s1 * s1 + s2 * s2) / 4.0) * std::sqrt(72576.0);
  // The sample sd has relative s.e. about 1/sqrt(2n).
  EXPECT_NEAR(bt.stats.ann_vol, target, 3.0 * target / std::sqrt(2.0 * n));
}

TEST(Backtest, FlatReturnsLeaveSharpeUndefined) {
  const std::vector<double> zeros(50, 0.0);
  const auto r1 = series(zeros), r2 = series(zeros);
  const auto bt = backtest(r1, r2, forecasts(r1, 1.0), forecasts(r2, 1.0), std::vector<double>(50, 0.0));
  EXPECT_EQ(bt.stats.ann_mean, 0.0);
  EXPECT_EQ(bt.stats.ann_vol, 0.0);
  EXPECT_FALSE(bt.stats.sharpe_defined);
}

TEST(Backtest, ModesAndAlignment) {
  const auto r1 = series({0.1, -0.2, 0.05});
  const auto r2 = series({0.0, 0.1, -0.1});
  const std::vector<double> corr{0.5, 0.5, 0.5};
  const auto cov = backtest(r1, r2, forecasts(r1, 1.0), forecasts(r2, 2.0), corr, CoMoment::Covariance);
  EXPECT_NEAR(cov.steps[0].cov12, 1.0, 1e-15);
  EXPECT_NEAR(cov.steps[0].w1, (4.0 - 1.0) / (5.0 - 2.0), 1e-15);
  const auto lit = backtest(r1, r2, forecasts(r1, 1.0), forecasts(r2, 2.0), corr, CoMoment::Correlation);
  EXPECT_NEAR(lit.steps[0].cov12, 0.5, 1e-15);
  EXPECT_NEAR(lit.steps[0].w1, 3.5 / 4.0, 1e-15);
  EXPECT_NEAR(lit.steps[1].portfolio_return, 3.5 / 4.0 * -0.2 + 0.5 / 4.0 * 0.1, 1e-15);

  auto shifted = forecasts(r1, 1.0);
  shifted.timestamps[1] += std::chrono::minutes{5};
  EXPECT_FXVOL_ERROR(backtest(r1, r2, shifted, forecasts(r2, 2.0), corr), ErrorKind::Alignment);
  EXPECT_FXVOL_ERROR(backtest(r1, r2, forecasts(r1, 1.0), forecasts(r2, 2.0), std::vector<double>{0.5}),
                     ErrorKind::Alignment);
  EXPECT_EQ(parse_co_moment("literal"), CoMoment::Correlation);
}

TEST(Table2, Layout) {
  const std::vector<std::string> models{"PROPOSAL", "GARCH"};
  std::vector<PortfolioStats> stats(2);
  stats[0] = {8.47, 10.50, 8.47 / 10.50, true, 10};
  stats[1] = {-1.234, 11.0, -1.234 / 11.0, true, 10};
  std::ostringstream out;
  write_table2(out, models, stats);
  EXPECT_EQ(out.str(), ",PROPOSAL,GARCH\nAnn. Mean,8.47,-1.23\nAnn. Volatility,10.50,11.00\nAnn. Sharpe Ratio,0.81,-0.11\n");
}
