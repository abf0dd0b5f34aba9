#include <cmath>
#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "fxvol/market_data.hpp"
#include "fxvol/rng.hpp"
#include "test_support.hpp"

using namespace fxvol;
using namespace fxvol::data;
using fxvol::testing::ts;

namespace {

std::vector<PriceBar> parse_prices(const std::string& text) {
  std::istringstream in(text);
  return read_prices(in, "prices.csv");
}

ReturnSeries one_minute_series(const char* start, std::vector<double> values) {
  ReturnSeries s;
  s.grid_step_minutes = 1;
  auto t = ts(start);
  for (std::size_t i = 0; i < values.size(); ++i) {
    s.timestamps.push_back(t);
    t += std::chrono::minutes{1};
  }
  s.values = std::move(values);
  return s;
}

}  // namespace

TEST(Timestamps, ParsesUtcForms) {
  EXPECT_EQ(format_timestamp(ts("2024-03-05T14:30:00Z")), "2024-03-05T14:30:00Z");
  EXPECT_EQ(ts("2024-03-05 14:30"), ts("2024-03-05T14:30:00Z"));
  EXPECT_EQ(ts("2024-03-05T14:30:00+00:00"), ts("2024-03-05T14:30:00Z"));
  EXPECT_FXVOL_ERROR(ts("2024-03-05T14:30:00+02:00"), ErrorKind::Parse);
  EXPECT_FXVOL_ERROR(ts("yesterday"), ErrorKind::Parse);
}

TEST(LoadPrices, IdentityPrices) {
  const auto bars = parse_prices("timestamp,close\n2024-01-02T00:05:00Z,1.0\n2024-01-02T00:10:00Z,1.0\n"
                                 "2024-01-02T00:15:00Z,1.0\n");
  ASSERT_EQ(bars.size(), 3u);
  for (const auto& b : bars) EXPECT_EQ(b.close, 1.0);
}

TEST(LoadPrices, DuplicateTimestampIsOrderingError) {
  EXPECT_FXVOL_ERROR(parse_prices("timestamp,close\n2024-01-02T00:05:00Z,1.0\n2024-01-02T00:05:00Z,1.1\n"),
                     ErrorKind::Ordering);
  EXPECT_FXVOL_ERROR(parse_prices("timestamp,close\n2024-01-02T00:10:00Z,1.0\n2024-01-02T00:05:00Z,1.1\n"),
                     ErrorKind::Ordering);
}

TEST(LoadPrices, MalformedRowReportsLine) {
  try {
    parse_prices("timestamp,close\n2024-01-02T00:05:00Z,1.0\n2024-01-02T00:10:00Z,abc\n");
    FAIL() << "expected a parse error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Parse);
    EXPECT_NE(std::string(e.what()).find("prices.csv:3"), std::string::npos) << e.what();
  }
  EXPECT_FXVOL_ERROR(parse_prices("timestamp,close\n2024-01-02T00:05:00Z,-1.0\n"), ErrorKind::Domain);
  EXPECT_FXVOL_ERROR(parse_prices("time,close\n2024-01-02T00:05:00Z,1.0\n"), ErrorKind::Parse);
}

TEST(LogReturns, ClosedForms) {
  const auto t0 = ts("2024-01-02T00:05:00Z");
  const auto t1 = t0 + std::chrono::minutes{5};
  EXPECT_EQ(compute_log_returns(std::vector<PriceBar>{{t0, 1.0}, {t1, 1.0}}).values.at(0), 0.0);
  EXPECT_NEAR(compute_log_returns(std::vector<PriceBar>{{t0, 1.0}, {t1, std::exp(0.001)}}).values.at(0), 0.1, 1e-12);
  const auto r = compute_log_returns(std::vector<PriceBar>{{t0, 2.0}, {t1, 1.0}});
  EXPECT_NEAR(r.values.at(0), -69.31471805599453, 1e-10);
  EXPECT_EQ(r.timestamps.at(0), t1);
  EXPECT_EQ(r.grid_step_minutes, 5);
  EXPECT_FXVOL_ERROR(compute_log_returns(std::vector<PriceBar>{{t0, 1.0}, {t1, 0.0}}), ErrorKind::Domain);
  EXPECT_FXVOL_ERROR(compute_log_returns(std::vector<PriceBar>{{t0, 1.0}}), ErrorKind::Length);
  EXPECT_FXVOL_ERROR(compute_log_returns(std::vector<PriceBar>{{t0, 1.0}, {t0 + std::chrono::minutes{3}, 1.0}}),
                     ErrorKind::Grid);
}

TEST(LogReturns, RoundTripThroughPrices) {
  Rng rng(5);
  std::vector<PriceBar> bars;
  auto t = ts("2024-01-02T00:00:00Z");
  std::vector<double> returns;
  double logp = 0.0;
  bars.push_back({t, 1.0});
  for (int i = 0; i < 1000; ++i) {
    const double r = 0.05 * rng.normal();
    returns.push_back(r);
    logp += r / 100.0;
    t += std::chrono::minutes{5};
    bars.push_back({t, std::exp(logp)});
  }
  const auto back = compute_log_returns(bars);
  ASSERT_EQ(back.size(), returns.size());
  for (std::size_t i = 0; i < returns.size(); ++i) {
    // Differences of log prices near 1 lose about 1e-14 absolute.
    EXPECT_NEAR(back.values[i], returns[i], 1e-12 * std::max(1.0, std::abs(returns[i])) + 1e-11);
  }
}

TEST(RealizedVolatility, DirectSums) {
  auto rv = compute_realized_volatility(one_minute_series("2024-01-02T00:01:00Z", {0, 0, 0, 0, 0}));
  ASSERT_EQ(rv.size(), 1u);
  EXPECT_EQ(rv.values[0], 0.0);
  EXPECT_EQ(rv.timestamps[0], ts("2024-01-02T00:05:00Z"));

  rv = compute_realized_volatility(one_minute_series("2024-01-02T00:01:00Z", {0.1, 0.1, 0.1, 0.1, 0.1}));
  EXPECT_NEAR(rv.values.at(0), std::sqrt(5 * 0.01), 1e-15);

  rv = compute_realized_volatility(
      one_minute_series("2024-01-02T00:01:00Z", {0.3, 0, 0, 0, 0, 0.1, 0.2, 0, 0, 0.2}));
  ASSERT_EQ(rv.size(), 2u);
  EXPECT_NEAR(rv.values[0], 0.3, 1e-15);
  EXPECT_NEAR(rv.values[1], 0.3, 1e-15);
  EXPECT_EQ(rv.timestamps[1], ts("2024-01-02T00:10:00Z"));
}

TEST(RealizedVolatility, GapInsideWindowNamesIt) {
  auto s = one_minute_series("2024-01-02T00:01:00Z", {0.1, 0.1, 0.1, 0.1, 0.1, 0.1, 0.1, 0.1, 0.1, 0.1});
  s.timestamps.erase(s.timestamps.begin() + 7);
  s.values.erase(s.values.begin() + 7);
  try {
    compute_realized_volatility(s);
    FAIL() << "expected gap error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Gap);
    EXPECT_NE(std::string(e.what()).find("00:10:00"), std::string::npos) << e.what();
  }
  s.grid_step_minutes = 5;
  EXPECT_FXVOL_ERROR(compute_realized_volatility(s), ErrorKind::Grid);
}

TEST(RealizedVolatility, NonNegativeAndZeroOnlyForZeroWindows) {
  Rng rng(9);
  std::vector<double> v(500);
  for (auto& x : v) x = rng.uniform() < 0.3 ? 0.0 : rng.normal();
  for (std::size_t w = 0; w < 20; ++w) std::fill_n(v.begin() + 5 * static_cast<long>(w) * 4, 5, 0.0);
  const auto s = one_minute_series("2024-01-02T00:01:00Z", v);
  const auto rv = compute_realized_volatility(s);
  ASSERT_EQ(rv.size(), 100u);
  for (std::size_t k = 0; k < rv.size(); ++k) {
    bool all_zero = true;
    for (std::size_t j = 0; j < 5; ++j) all_zero = all_zero && v[5 * k + j] == 0.0;
    EXPECT_GE(rv.values[k], 0.0);
    EXPECT_EQ(rv.values[k] == 0.0, all_zero);
  }
}

TEST(SeasonalIndex, Examples) {
  EXPECT_EQ(seasonal_index(ts("2024-01-02T00:00:00Z")), 0);
  EXPECT_EQ(seasonal_index(ts("2024-01-02T23:55:00Z")), 287);
  EXPECT_EQ(seasonal_index(ts("2024-01-02T14:30:00Z")), 174);
  EXPECT_FXVOL_ERROR(seasonal_index(ts("2024-01-02T14:31:00Z")), ErrorKind::Grid);
}

TEST(SeasonalIndex, BijectionOverADay) {
  std::set<int> seen;
  auto t = ts("2024-01-02T00:00:00Z");
  for (int i = 0; i < 288; ++i, t += std::chrono::minutes{5}) seen.insert(seasonal_index(t));
  EXPECT_EQ(seen.size(), 288u);
  EXPECT_EQ(*seen.begin(), 0);
  EXPECT_EQ(*seen.rbegin(), 287);
}

TEST(Calendar, ReadsAndChecksIdentity) {
  std::istringstream good("event_id,name,country,release\nCPI,\"CPI, YoY\",US,2024-01-02T13:30:00Z\n"
                          "CPI,\"CPI, YoY\",US,2024-02-02T13:30:00Z\n");
  const auto cal = read_calendar(good, "cal.csv");
  ASSERT_EQ(cal.entries.size(), 2u);
  EXPECT_EQ(cal.entries[0].name, "CPI, YoY");
  std::istringstream clash("event_id,name,country,release\nX,CPI,US,2024-01-02T13:30:00Z\n"
                           "X,CPI,AU,2024-02-02T13:30:00Z\n");
  EXPECT_FXVOL_ERROR(read_calendar(clash, "cal.csv"), ErrorKind::Parse);
}

TEST(AlignEvents, ColumnCountAndLags) {
  const auto grid = make_grid(ts("2024-01-02T00:00:00Z"), 2000);
  EventCalendar cal;
  for (int e = 0; e < 117; ++e) {
    cal.entries.push_back({"E" + std::to_string(e), "event " + std::to_string(e), "US",
                           grid[10 + static_cast<std::size_t>(e)]});
  }
  AlignmentReport rep;
  const auto d = align_events(cal, grid, 6, 5, &rep);
  EXPECT_EQ(d.n_cols(), 702u);
  EXPECT_EQ(d.nnz(), 702u);
  EXPECT_EQ(rep.releases, 117u);
  EXPECT_EQ(rep.off_sample, 0u);
  for (std::size_t j = 0; j < d.n_cols(); ++j) EXPECT_EQ(d.column(j).size(), 1u);
  EXPECT_EQ(d.labels()[7].to_string(), "E1:2");
}

TEST(AlignEvents, RoundUpRuleAndTies) {
  const auto grid = make_grid(ts("2024-01-02T12:00:00Z"), 100);
  EventCalendar cal;
  cal.entries.push_back({"A", "a", "US", ts("2024-01-02T12:31:00Z")});
  cal.entries.push_back({"B", "b", "US", ts("2024-01-02T12:30:00Z")});
  const auto d = align_events(cal, grid, 1);
  ASSERT_EQ(d.nnz(), 2u);
  EXPECT_EQ(grid[d.column(0)[0]], ts("2024-01-02T12:35:00Z"));
  EXPECT_EQ(grid[d.column(1)[0]], ts("2024-01-02T12:30:00Z"));
  EXPECT_FXVOL_ERROR(align_events(cal, grid, 0), ErrorKind::Config);
  const auto empty = align_events(EventCalendar{}, grid, 6);
  EXPECT_EQ(empty.n_cols(), 0u);
  EXPECT_EQ(empty.nnz(), 0u);
}

TEST(AlignEvents, OffSampleAndSessionTruncation) {
  // Friday close then Monday open: lags must not cross the weekend.
  const auto grid = make_grid(ts("2024-01-05T23:40:00Z"), 20);
  ASSERT_EQ(grid[4], ts("2024-01-08T00:00:00Z"));
  EventCalendar cal;
  cal.entries.push_back({"F", "friday", "US", ts("2024-01-05T23:50:00Z")});
  cal.entries.push_back({"OLD", "old", "US", ts("2023-12-01T00:00:00Z")});
  cal.entries.push_back({"NEW", "new", "US", ts("2024-02-01T00:00:00Z")});
  cal.entries.push_back({"END", "end", "US", grid.back()});
  AlignmentReport rep;
  const auto d = align_events(cal, grid, 6, 5, &rep);
  EXPECT_EQ(rep.off_sample, 2u);
  EXPECT_EQ(d.column(0).size(), 1u);
  EXPECT_EQ(d.column(1).size(), 1u);  // 23:55
  EXPECT_EQ(d.column(2).size(), 0u);  // would fall on Monday
  EXPECT_EQ(d.column(18).size(), 1u);  // END:1 at the last row
  EXPECT_EQ(rep.truncated_lags, 4u + 5u);
}

TEST(DesignMatrix, MergesDuplicatesAndIndexesBothWays) {
  std::vector<ColumnLabel> labels{{"a", 1}, {"b", 1}, {"c", 1}};
  EventDesignMatrix d(4, labels, {{2, 1}, {0, 0}, {2, 1}, {2, 0}, {3, 2}});
  EXPECT_EQ(d.nnz(), 4u);
  ASSERT_EQ(d.row(2).size(), 2u);
  EXPECT_EQ(d.row(2)[0], 0u);
  EXPECT_EQ(d.row(2)[1], 1u);
  ASSERT_EQ(d.column(0).size(), 2u);
  EXPECT_EQ(d.column(0)[0], 0u);
  EXPECT_EQ(d.column(0)[1], 2u);
  EXPECT_EQ(d.row(1).size(), 0u);
  EXPECT_FXVOL_ERROR(EventDesignMatrix(4, labels, {{4, 0}}), ErrorKind::Config);
  std::ostringstream out;
  write_design_triplets(out, d);
  EXPECT_EQ(out.str(), "row,col,label\n0,0,a:1\n2,0,a:1\n2,1,b:1\n3,2,c:1\n");
}

TEST(RealizedCorrelation, Conventions) {
  const auto a = one_minute_series("2024-01-02T00:01:00Z", {0.1, -0.2, 0.3, 0.05, -0.1});
  auto neg = a;
  for (auto& v : neg.values) v = -v;
  const auto flat = one_minute_series("2024-01-02T00:01:00Z", {0.1, 0.1, 0.1, 0.1, 0.1});
  const auto end = ts("2024-01-02T00:05:00Z");
  EXPECT_NEAR(realized_correlation(a, a, end), 1.0, 1e-12);
  EXPECT_NEAR(realized_correlation(a, neg, end), -1.0, 1e-12);
  EXPECT_EQ(realized_correlation(flat, a, end), 0.0);
  auto shifted = one_minute_series("2024-01-02T00:02:00Z", {0.1, -0.2, 0.3, 0.05, -0.1});
  EXPECT_FXVOL_ERROR(realized_correlation(a, shifted, end), ErrorKind::Alignment);
}

TEST(RealizedCorrelation, TrailingWindowMatchesPearsonOracle) {
  Rng rng(3);
  std::vector<double> va(60), vb(60);
  for (std::size_t i = 0; i < 60; ++i) {
    va[i] = rng.normal();
    vb[i] = 0.5 * va[i] + rng.normal();
  }
  const auto a = one_minute_series("2024-01-02T00:01:00Z", va);
  const auto b = one_minute_series("2024-01-02T00:01:00Z", vb);
  const auto grid = make_grid(ts("2024-01-02T00:05:00Z"), 12);
  const auto corr = trailing_realized_correlation(a, b, grid);
  EXPECT_EQ(corr[0], 0.0);  // the window before the first point is empty
  for (std::size_t t = 1; t < grid.size(); ++t) {
    const std::size_t lo = 5 * (t - 1);
    std::vector<double> x(va.begin() + static_cast<long>(lo), va.begin() + static_cast<long>(lo + 5));
    std::vector<double> y(vb.begin() + static_cast<long>(lo), vb.begin() + static_cast<long>(lo + 5));
    EXPECT_NEAR(corr[t], fxvol::testing::correlation_of(x, y), 1e-12) << t;
  }
}

TEST(Grid, SkipsWeekends) {
  const auto grid = make_grid(ts("2024-01-05T23:55:00Z"), 2);
  EXPECT_EQ(grid[1], ts("2024-01-08T00:00:00Z"));
  EXPECT_FXVOL_ERROR(make_grid(ts("2024-01-05T23:51:00Z"), 2), ErrorKind::Grid);
}
