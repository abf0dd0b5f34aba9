#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "fxvol/mixture.hpp"
#include "fxvol/rng.hpp"
#include "test_support.hpp"

using namespace fxvol;
using namespace fxvol::mcmc;

TEST(MixtureTable, LogChiSquareTableIsConsistent) {
  const auto& t = MixtureTable::log_chi2();
  ASSERT_EQ(t.size(), 7u);
  double total = 0.0;
  for (const auto& c : t.components()) {
    total += c.weight;
    EXPECT_GT(c.variance, 0.0);
  }
  EXPECT_NEAR(total, 1.0, 1e-10);
  EXPECT_NEAR(t.mean(), -1.2704, 1e-2);
  EXPECT_NEAR(t.variance(), std::numbers::pi * std::numbers::pi / 2.0, 1e-2);
}

TEST(MixtureTable, MatchesSimulatedLogChiSquare) {
  // Monte Carlo moments of log(eps^2) against the table.
  Rng rng(2);
  const std::size_t n = 400000;
  double s = 0.0, s2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double e = rng.normal();
    const double l = std::log(e * e);
    s += l;
    s2 += l * l;
  }
  const double mean = s / n;
  const double var = s2 / n - mean * mean;
  const auto& t = MixtureTable::log_chi2();
  EXPECT_NEAR(t.mean(), mean, 4.0 * std::sqrt(var / n) + 1e-3);
  EXPECT_NEAR(t.variance(), var, 0.03);
}

TEST(MixtureTable, RejectsInvalidTables) {
  EXPECT_FXVOL_ERROR(MixtureTable({{0.5, 0.0, 1.0}, {0.4, 0.0, 1.0}}), ErrorKind::Config);
  EXPECT_FXVOL_ERROR(MixtureTable({{0.5, 0.0, 1.0}, {0.5, 0.0, 0.0}}), ErrorKind::Config);
  EXPECT_FXVOL_ERROR(MixtureTable({}), ErrorKind::Config);
  MixtureTable gaussian({{1.0, 0.0, 1.0}});
  EXPECT_FXVOL_ERROR(gaussian.check_log_chi2_moments(), ErrorKind::Config);
}
