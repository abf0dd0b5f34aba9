#include <cmath>
#include <iostream>
#include <numeric>

#include <gtest/gtest.h>

#include "fxvol/mcmc.hpp"
#include "fxvol/model.hpp"
#include "test_support.hpp"

using namespace fxvol;
using namespace fxvol::mcmc;
using fxvol::testing::ts;

namespace {

struct Dataset {
  std::vector<Timestamp> grid;
  data::EventDesignMatrix design;
  model::ModelParams truth;
  model::Simulation sim;
};

/// Events with `releases` occurrences each, `lags` columns per event.
Dataset make_dataset(std::size_t n, std::size_t n_events, std::size_t releases, int lags,
                     const std::vector<std::pair<std::size_t, double>>& active, std::uint64_t seed) {
  Dataset d;
  d.grid = data::make_grid(ts("2024-01-02T00:05:00Z"), n);
  const auto cal = model::synthetic_calendar(d.grid, n_events, releases, seed + 100);
  d.design = data::align_events(cal, d.grid, lags);
  d.truth.mu_h = -6.0;
  d.truth.phi = 0.95;
  d.truth.sigma_x2 = 0.05;
  d.truth.beta = model::sinusoidal_seasonal(0.4);
  d.truth.resize_events(d.design.n_cols());
  for (const auto& [j, a] : active) {
    d.truth.alpha[j] = a;
    d.truth.pi[j] = 1;
  }
  d.sim = model::simulate(d.truth, d.design, d.grid, seed);
  return d;
}

}  // namespace

TEST(Schedule, RetainedCounts) {
  EXPECT_EQ((Schedule{20, 10, 2, 1}.n_retained()), 5u);
  EXPECT_EQ((Schedule{10, 5, 1, 1}.n_retained()), 5u);
  EXPECT_FXVOL_ERROR((Schedule{10, 10, 1, 1}.validate()), ErrorKind::Config);
  EXPECT_FXVOL_ERROR((Schedule{10, 5, 0, 1}.validate()), ErrorKind::Config);

  const auto d = make_dataset(600, 1, 5, 2, {}, 1);
  const auto draws = run_chain(d.sim.returns, d.design, PriorConfig{}, Schedule{20, 10, 2, 1}, Variant::Full);
  ASSERT_EQ(draws.size(), 5u);
  EXPECT_EQ(draws.iterations, (std::vector<std::size_t>{12, 14, 16, 18, 20}));
  EXPECT_EQ(draws.trace.size(), 20u);
}

TEST(Chain, InvariantsHoldAfterEverySweep) {
  const auto d = make_dataset(3000, 2, 20, 3, {{0, 2.0}}, 2);
  const auto draws = run_chain(d.sim.returns, d.design, PriorConfig{}, Schedule{200, 1, 1, 3}, Variant::Full);
  ASSERT_EQ(draws.size(), 199u);
  for (const auto& p : draws.params) {
    EXPECT_NEAR(std::accumulate(p.beta.begin(), p.beta.end(), 0.0), 0.0, 1e-10);
    for (std::size_t j = 0; j < p.alpha.size(); ++j) EXPECT_EQ(p.alpha[j] == 0.0, p.pi[j] == 0) << j;
    EXPECT_GT(p.sigma_x2, 0.0);
    EXPECT_GT(p.sigma_alpha2, 0.0);
    EXPECT_LT(std::abs(p.phi), 1.0);
    EXPECT_GT(p.gamma, 0.0);
    EXPECT_LT(p.gamma, 1.0);
  }
}

TEST(Chain, VariantsFixTheirComponents) {
  const auto d = make_dataset(2000, 2, 20, 2, {{0, 2.0}}, 4);
  const auto ssv = run_chain(d.sim.returns, d.design, PriorConfig{}, Schedule{40, 20, 1, 1}, Variant::Ssv);
  const auto sv = run_chain(d.sim.returns, d.design, PriorConfig{}, Schedule{40, 20, 1, 1}, Variant::Sv);
  for (const auto& p : ssv.params) {
    for (std::size_t j = 0; j < p.alpha.size(); ++j) {
      EXPECT_EQ(p.alpha[j], 0.0);
      EXPECT_EQ(p.pi[j], 0);
    }
  }
  bool seasonal_moves = false;
  for (const auto& p : ssv.params) seasonal_moves = seasonal_moves || p.beta[10] != 0.0;
  EXPECT_TRUE(seasonal_moves);
  for (const auto& p : sv.params) {
    for (const double b : p.beta) EXPECT_EQ(b, 0.0);
    for (const double a : p.alpha) EXPECT_EQ(a, 0.0);
  }
}

TEST(Chain, BitIdenticalUnderFixedSeed) {
  const auto d = make_dataset(1500, 2, 15, 2, {{1, 1.5}}, 5);
  const Schedule s{60, 30, 3, 42};
  const auto a = run_chain(d.sim.returns, d.design, PriorConfig{}, s, Variant::Full);
  const auto b = run_chain(d.sim.returns, d.design, PriorConfig{}, s, Variant::Full);
  const auto c = run_chain(d.sim.returns, d.design, PriorConfig{}, Schedule{60, 30, 3, 43}, Variant::Full);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a.params[i].mu_h, b.params[i].mu_h);
    EXPECT_EQ(a.params[i].phi, b.params[i].phi);
    EXPECT_EQ(a.params[i].beta, b.params[i].beta);
    EXPECT_EQ(a.params[i].alpha, b.params[i].alpha);
    EXPECT_EQ(a.params[i].pi, b.params[i].pi);
  }
  EXPECT_EQ(a.x_mean, b.x_mean);
  EXPECT_NE(a.params.back().mu_h, c.params.back().mu_h);
}

TEST(Chain, DimensionMismatchIsConfigError) {
  const auto d = make_dataset(600, 1, 5, 2, {}, 6);
  std::vector<double> y(d.sim.returns.values.begin(), d.sim.returns.values.end() - 1);
  const auto bins = data::seasonal_indices(d.grid);
  EXPECT_FXVOL_ERROR(run_chain(y, bins, d.design, PriorConfig{}, Schedule{10, 5, 1, 1}, Variant::Full),
                     ErrorKind::Config);
  auto short_bins = bins;
  short_bins.pop_back();
  EXPECT_FXVOL_ERROR(run_chain(d.sim.returns.values, short_bins, d.design, PriorConfig{}, Schedule{10, 5, 1, 1},
                               Variant::Full),
                     ErrorKind::Config);
}

TEST(Chain, UnobservedBinIsCoverageError) {
  const auto d = make_dataset(200, 1, 5, 1, {}, 7);
  EXPECT_FXVOL_ERROR(run_chain(d.sim.returns, d.design, PriorConfig{}, Schedule{10, 5, 1, 1}, Variant::Ssv),
                     ErrorKind::Coverage);
}

TEST(Chain, SvCoverageStudy) {
  // 20 replications of plain SV; count how often each truth lies inside the
  // 90% posterior interval. At T = 3000 the intervals for mu_h run narrow
  // (the realized mean of x is only weakly identified), so T is 12000.
  const std::size_t reps = 20, n = 12000;
  int hit_mu = 0, hit_phi = 0, hit_sx = 0;
  model::ModelParams truth;
  truth.mu_h = -6.0;
  truth.phi = 0.95;
  truth.sigma_x2 = 0.05;
  const auto grid = data::make_grid(ts("2024-01-02T00:05:00Z"), n);
  const data::EventDesignMatrix design(n, {}, {});
  for (std::size_t r = 0; r < reps; ++r) {
    const auto sim = model::simulate(truth, design, grid, 1000 + r);
    const auto draws = run_chain(sim.returns, design, PriorConfig{}, Schedule{5000, 1000, 1, 7 + r}, Variant::Sv);
    std::vector<double> mu, phi, sx;
    for (const auto& p : draws.params) {
      mu.push_back(p.mu_h);
      phi.push_back(p.phi);
      sx.push_back(std::sqrt(p.sigma_x2));
    }
    const auto inside = [](const std::vector<double>& v, double t) {
      return quantile(v, 0.05) <= t && t <= quantile(v, 0.95);
    };
    hit_mu += inside(mu, truth.mu_h);
    hit_phi += inside(phi, truth.phi);
    hit_sx += inside(sx, std::sqrt(truth.sigma_x2));
  }
  std::cout << "coverage over " << reps << ": mu_h " << hit_mu << ", phi " << hit_phi << ", sigma_x " << hit_sx
            << '\n';
  EXPECT_GE(hit_mu, 16);
  EXPECT_GE(hit_phi, 16);
  EXPECT_GE(hit_sx, 16);
}

TEST(Chain, FullRecoversActiveSplit) {
  const auto d = make_dataset(12000, 3, 60, 2, {{0, 2.5}, {3, 2.0}}, 8);
  const auto draws = run_chain(d.sim.returns, d.design, PriorConfig{}, Schedule{1500, 500, 1, 9}, Variant::Full);
  const auto inc = inclusion_summary(draws);
  ASSERT_EQ(inc.size(), 6u);
  for (std::size_t j = 0; j < inc.size(); ++j) {
    if (d.truth.pi[j]) {
      EXPECT_GT(inc[j].mean_pi, 0.5) << j;
    } else {
      EXPECT_LT(inc[j].mean_pi, 0.5) << j;
    }
  }
}

TEST(Chain, NeverActiveColumnFollowsGamma) {
  // Column 0 has releases only; column 1 is appended with no occurrences.
  const std::size_t n = 2000;
  const auto grid = data::make_grid(ts("2024-01-02T00:05:00Z"), n);
  std::vector<data::EventDesignMatrix::Entry> entries;
  for (std::size_t t = 10; t < n; t += 50) entries.push_back({t, 0});
  data::EventDesignMatrix design(n, {{"A", 1}, {"Z", 1}}, entries);
  model::ModelParams truth;
  truth.mu_h = -6;
  truth.resize_events(2);
  const auto sim = model::simulate(truth, design, grid, 3);
  PriorConfig prior;
  prior.gamma_a = 2;
  prior.gamma_b = 2;
  const auto draws = run_chain(sim.returns, design, prior, Schedule{6000, 500, 1, 4}, Variant::Full);
  double freq = 0.0, mean_gamma = 0.0, g1g = 0.0;
  for (const auto& p : draws.params) {
    freq += p.pi[1];
    mean_gamma += p.gamma;
    g1g += p.gamma * (1 - p.gamma);
  }
  const double k = static_cast<double>(draws.size());
  freq /= k;
  mean_gamma /= k;
  g1g /= k;
  // pi given gamma is an independent Bernoulli draw each sweep.
  EXPECT_NEAR(freq, mean_gamma, 3.0 * std::sqrt(g1g / k));
}

TEST(Summaries, TwoDrawToyChain) {
  PosteriorDraws draws;
  draws.labels = {{"A", 1}, {"B", 1}};
  model::ModelParams p1, p2;
  p1.resize_events(2);
  p2.resize_events(2);
  p1.alpha = {2.0, 0.0};
  p1.pi = {1, 0};
  p2.alpha = {1.0, 0.0};
  p2.pi = {1, 0};
  p1.mu_h = -6.2;
  p2.mu_h = -5.8;
  draws.params = {p1, p2};
  draws.iterations = {1, 2};
  draws.log_likelihood = {0, 0};
  const auto inc = inclusion_summary(draws);
  EXPECT_EQ(inc[0].mean_pi, 1.0);
  EXPECT_NEAR(inc[0].mean_effect, (std::exp(1.0) + std::exp(0.5)) / 2.0, 1e-15);
  EXPECT_EQ(inc[1].mean_pi, 0.0);
  EXPECT_EQ(inc[1].mean_effect, 1.0);
  const auto mean = posterior_mean(draws);
  EXPECT_NEAR(mean.mu_h, -6.0, 1e-15);
  EXPECT_NEAR(mean.alpha[0], 1.5, 1e-15);
  EXPECT_NEAR(quantile({1, 2, 3, 4, 5}, 0.5), 3.0, 1e-15);
  EXPECT_NEAR(quantile({1, 2}, 0.25), 1.25, 1e-15);
}
