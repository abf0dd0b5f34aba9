#include <cmath>
#include <numbers>
#include <sstream>

#include <fmt/format.h>
#include <gtest/gtest.h>

#include "fxvol/forecast.hpp"
#include "fxvol/model.hpp"
#include "test_support.hpp"

using namespace fxvol;
using namespace fxvol::forecast;
using fxvol::testing::ts;

namespace {

mcmc::PosteriorMean zero_mean(std::size_t m) {
  mcmc::PosteriorMean p;
  p.mu_h = 0.0;
  p.phi = 0.9;
  p.sigma_x2 = 0.05;
  p.beta.assign(288, 0.0);
  p.alpha.assign(m, 0.0);
  p.pi.assign(m, 0.0);
  return p;
}

/// Newey-West variance of the OLS slope written through the demeaned regressor.
double slope_hac_variance(const std::vector<double>& y, const std::vector<double>& x, std::size_t lags) {
  const std::size_t n = x.size();
  const double xbar = fxvol::testing::mean_of(x), ybar = fxvol::testing::mean_of(y);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    sxx += (x[t] - xbar) * (x[t] - xbar);
    sxy += (x[t] - xbar) * (y[t] - ybar);
  }
  const double b = sxy / sxx, a = ybar - b * xbar;
  std::vector<double> g(n);
  for (std::size_t t = 0; t < n; ++t) g[t] = (x[t] - xbar) * (y[t] - a - b * x[t]);
  double s = 0.0;
  for (std::size_t t = 0; t < n; ++t) s += g[t] * g[t];
  for (std::size_t l = 1; l <= lags; ++l) {
    double c = 0.0;
    for (std::size_t t = l; t < n; ++t) c += g[t] * g[t - l];
    s += 2.0 * (1.0 - static_cast<double>(l) / static_cast<double>(lags + 1)) * c;
  }
  return s / (sxx * sxx);
}

}  // namespace

TEST(Proposal, ZeroComponentsGiveCorrectionOnly) {
  const auto mean = zero_mean(0);
  const std::vector<double> y{0.1, -0.2, 0.05};
  const std::vector<int> bins{0, 1, 2};
  const data::EventDesignMatrix design(3, {}, {});
  const auto f = forecast_proposal(mean, y, bins, design);
  const double p0 = mean.sigma_x2 / (1 - mean.phi * mean.phi);
  EXPECT_NEAR(f[0], std::exp(p0 / 8.0), 1e-15);
  const auto plain = forecast_proposal(mean, y, bins, design, {.lognormal_correction = false});
  EXPECT_NEAR(plain[0], 1.0, 1e-15);
}

TEST(Proposal, EventMultipliesByExpHalfAlpha) {
  auto mean = zero_mean(1);
  mean.mu_h = -6;
  mean.alpha[0] = 2.0;
  mean.pi[0] = 1.0;
  Rng rng(2);
  std::vector<double> y(50);
  for (auto& v : y) v = 0.05 * rng.normal();
  std::vector<int> bins(50);
  for (std::size_t t = 0; t < 50; ++t) bins[t] = static_cast<int>(t);
  const data::EventDesignMatrix with(50, {{"E", 1}}, {{20, 0}});
  const data::EventDesignMatrix without(50, {{"E", 1}}, {});
  const auto a = forecast_proposal(mean, y, bins, with);
  const auto b = forecast_proposal(mean, y, bins, without);
  EXPECT_NEAR(a[20] / b[20], std::numbers::e, 1e-12);
  for (std::size_t t = 0; t < 20; ++t) EXPECT_EQ(a[t], b[t]);
  EXPECT_FXVOL_ERROR(forecast_proposal(mean, y, bins, data::EventDesignMatrix(40, {{"E", 1}}, {})),
                     ErrorKind::Alignment);
}

TEST(Proposal, SingleComponentFilterIsKalman) {
  // With a one-component table the collapse is exact.
  const mcmc::MixtureTable gaussian({{1.0, -1.27, 4.9}});
  Rng rng(3);
  std::vector<double> y(100), off(100, -6.0);
  for (auto& v : y) v = 0.05 * rng.normal();
  const double phi = 0.95, q = 0.04;
  const auto steps = mixture_filter(y, off, phi, q, gaussian);
  double m = 0.0, p = q / (1 - phi * phi);
  for (std::size_t t = 0; t < y.size(); ++t) {
    EXPECT_NEAR(steps[t].x_pred, m, 1e-12);
    EXPECT_NEAR(steps[t].p_pred, p, 1e-12);
    const double z = std::log(y[t] * y[t] + mcmc::kLinearizationOffset) + 6.0 + 1.27;
    const double k = p / (p + 4.9);
    const double mf = m + k * (z - m), pf = p * (1 - k);
    EXPECT_NEAR(steps[t].x_filt, mf, 1e-12);
    EXPECT_NEAR(steps[t].p_filt, pf, 1e-12);
    m = phi * mf;
    p = phi * phi * pf + q;
  }
}

TEST(Proposal, BeatsUnconditionalForecast) {
  model::ModelParams truth;
  truth.mu_h = -6.0;
  truth.phi = 0.98;
  truth.sigma_x2 = 0.0225;
  truth.beta = model::sinusoidal_seasonal(0.5);
  const std::size_t n = 20000;
  const auto grid = data::make_grid(ts("2024-01-02T00:05:00Z"), n);
  const data::EventDesignMatrix design(n, {}, {});
  const auto sim = model::simulate_intraday(truth, design, grid, 4);
  const auto rv = data::compute_realized_volatility(sim.one_min);
  ASSERT_EQ(rv.size(), n);

  mcmc::PosteriorMean mean;
  mean.mu_h = truth.mu_h;
  mean.phi = truth.phi;
  mean.sigma_x2 = truth.sigma_x2;
  mean.beta = truth.beta;
  const auto bins = data::seasonal_indices(grid);
  const auto f = forecast_proposal(mean, sim.five_min.returns.values, bins, design);
  double ss = 0.0;
  for (const double v : sim.five_min.returns.values) ss += v * v;
  const double flat = std::sqrt(ss / n);
  double mse_f = 0.0, mse_flat = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    mse_f += (rv.values[t] - f[t]) * (rv.values[t] - f[t]);
    mse_flat += (rv.values[t] - flat) * (rv.values[t] - flat);
  }
  EXPECT_LT(mse_f, mse_flat);
}

TEST(Hac, MatchesDirectSums) {
  const std::vector<double> u{1.0, -0.5, 0.3, 2.0, -1.2, 0.7, 0.1};
  const double mean = fxvol::testing::mean_of(u);
  double g0 = 0, g1 = 0, g2 = 0;
  for (std::size_t t = 0; t < u.size(); ++t) g0 += (u[t] - mean) * (u[t] - mean);
  for (std::size_t t = 1; t < u.size(); ++t) g1 += (u[t] - mean) * (u[t - 1] - mean);
  for (std::size_t t = 2; t < u.size(); ++t) g2 += (u[t] - mean) * (u[t - 2] - mean);
  const double n = static_cast<double>(u.size());
  EXPECT_NEAR(hac_long_run_variance(u, 0), g0 / n, 1e-15);
  EXPECT_NEAR(hac_long_run_variance(u, 2), (g0 + 2 * (2.0 / 3.0) * g1 + 2 * (1.0 / 3.0) * g2) / n, 1e-15);
}

TEST(HorseRace, ExactFitGivesOne) {
  Rng rng(5);
  std::vector<double> p(200), c(200), rv(200);
  for (std::size_t t = 0; t < 200; ++t) {
    p[t] = 0.05 + 0.01 * rng.uniform();
    c[t] = 0.05 + 0.01 * rng.uniform();
    rv[t] = 0.1 + 1.0 * p[t];
  }
  // RV - C = 0.1 + (P - C): b0 = 0.1, b1 = 1.
  const auto r = horse_race(rv, p, c);
  EXPECT_NEAR(r.b1, 1.0, 1e-10);
  EXPECT_EQ(fmt::format("{:.2f}", r.b1), "1.00");
  EXPECT_NEAR(r.b0, 0.1, 1e-10);
}

TEST(HorseRace, CompetitorOnlyGivesZero) {
  Rng rng(6);
  std::vector<double> p(500), c(500), rv(500);
  for (std::size_t t = 0; t < 500; ++t) {
    p[t] = 0.05 + 0.01 * rng.normal();
    c[t] = 0.05 + 0.01 * rng.normal();
    rv[t] = c[t];
  }
  const auto r = horse_race(rv, p, c);
  EXPECT_NEAR(r.b1, 0.0, 1e-10);
}

TEST(HorseRace, MixtureRecoversWeightWithinTwoSe) {
  Rng rng(7);
  const std::size_t n = 5000;
  std::vector<double> p(n), c(n), rv(n);
  for (std::size_t t = 0; t < n; ++t) {
    p[t] = 0.05 + 0.01 * rng.normal();
    c[t] = 0.05 + 0.01 * rng.normal();
    rv[t] = 0.3 * p[t] + 0.7 * c[t] + 0.005 * rng.normal();
  }
  const auto r = horse_race(rv, p, c);
  EXPECT_LT(std::abs(r.b1 - 0.3), 2.0 * r.se_b1);
  EXPECT_FALSE(r.clamped);
  EXPECT_EQ(r.hac_lags, 17u);

  std::vector<double> target(n), reg(n);
  for (std::size_t t = 0; t < n; ++t) {
    target[t] = rv[t] - c[t];
    reg[t] = p[t] - c[t];
  }
  EXPECT_NEAR(r.se_b1, std::sqrt(slope_hac_variance(target, reg, 17)), 1e-10);
  EXPECT_NEAR(r.t_stat, r.b1_unclamped / r.se_b1, 1e-10);
}

TEST(HorseRace, ClampsAndFlags) {
  Rng rng(8);
  std::vector<double> p(300), c(300), rv(300);
  for (std::size_t t = 0; t < 300; ++t) {
    p[t] = 0.05 + 0.01 * rng.normal();
    c[t] = 0.05 + 0.01 * rng.normal();
    rv[t] = 1.5 * p[t] - 0.5 * c[t] + 0.001 * rng.normal();
  }
  const auto r = horse_race(rv, p, c);
  EXPECT_EQ(r.b1, 1.0);
  EXPECT_TRUE(r.clamped);
  EXPECT_GT(r.b1_unclamped, 1.0);
}

TEST(HorseRace, DropsNonFiniteRowsAndChecksInputs) {
  Rng rng(9);
  std::vector<double> p(100), c(100), rv(100);
  for (std::size_t t = 0; t < 100; ++t) {
    p[t] = 0.05 + 0.01 * rng.normal();
    c[t] = 0.05 + 0.01 * rng.normal();
    rv[t] = 0.5 * (p[t] + c[t]) + 0.001 * rng.normal();
  }
  c[0] = std::nan("");
  EXPECT_EQ(horse_race(rv, p, c).n_obs, 99u);
  EXPECT_FXVOL_ERROR(horse_race(rv, c, c), ErrorKind::Degenerate);
  EXPECT_FXVOL_ERROR(horse_race(std::vector<double>(rv.begin(), rv.begin() + 20), std::vector<double>(p.begin(), p.begin() + 20),
                                std::vector<double>(c.begin() + 1, c.begin() + 21)),
                     ErrorKind::Length);
}

TEST(DieboldMariano, IdenticalForecastsAreDegenerate) {
  std::vector<double> e(100, 0.3);
  EXPECT_FXVOL_ERROR(diebold_mariano(e, e), ErrorKind::Degenerate);
}

TEST(DieboldMariano, StatisticAndOneSidedPValue) {
  Rng rng(10);
  std::vector<double> d(400);
  for (auto& v : d) v = 0.1 + rng.normal();
  const auto r = diebold_mariano_differential(d);
  const double lrv = hac_long_run_variance(d, r.hac_lags);
  EXPECT_NEAR(r.statistic, fxvol::testing::mean_of(d) / std::sqrt(lrv / 400.0), 1e-12);
  EXPECT_NEAR(r.p_value, 1.0 - 0.5 * std::erfc(-r.statistic / std::numbers::sqrt2), 1e-12);
  EXPECT_EQ(r.loss, "squared_error");
}

TEST(DieboldMariano, PowerGrowsWithSampleSize) {
  Rng rng(11);
  double last = 1.0;
  for (const std::size_t n : {100u, 1000u, 10000u}) {
    std::vector<double> ep(n), ec(n);
    for (std::size_t t = 0; t < n; ++t) {
      ep[t] = rng.normal();
      ec[t] = ep[t] + 0.3 + 0.1 * rng.uniform();
    }
    const auto r = diebold_mariano(ep, ec);
    EXPECT_LE(r.p_value, last);
    last = r.p_value;
  }
  EXPECT_LT(last, 1e-6);
}

TEST(DieboldMariano, AutocorrelatedDifferentialWidensLags) {
  Rng rng(12);
  std::vector<double> d(1000);
  double prev = 0.0;
  for (auto& v : d) v = prev = 0.7 * prev + rng.normal();
  EXPECT_EQ(diebold_mariano_differential(d).hac_lags, 5u);
  for (auto& v : d) v = rng.normal();
  EXPECT_GE(diebold_mariano_differential(d, 3).hac_lags, 2u);
}

TEST(Table1, Layout) {
  std::vector<CompetitorResult> rows(2);
  rows[0].model = "SV";
  rows[0].horse_race.b1 = 0.95;
  rows[0].horse_race.t_stat = 179.44;
  rows[0].dm.p_value = 0.0;
  rows[1].model = "GARCH";
  rows[1].horse_race.b1 = 1.0;
  rows[1].horse_race.t_stat = 12.346;
  rows[1].dm.p_value = 0.0421;
  std::ostringstream out;
  write_table1(out, rows);
  EXPECT_EQ(out.str(), ",SV,GARCH\nb1,0.95,1.00\nt-stat,179.44,12.35\nDM p-value,0.000,0.042\n");
}
