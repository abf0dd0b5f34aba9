#include "fxvol/market_data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <ostream>
#include <unordered_map>

#include <fmt/format.h>

#include "fxvol/csv.hpp"
#include "fxvol/error.hpp"

namespace fxvol::data {
namespace {

constexpr long kSessionBreakSeconds = 3600;

long secs(Timestamp ts) { return static_cast<long>(ts.time_since_epoch().count()); }

int infer_grid_step(std::span<const Timestamp> ts, int fallback) {
  if (ts.size() < 2) return fallback;
  long min_diff = secs(ts[1]) - secs(ts[0]);
  for (std::size_t i = 2; i < ts.size(); ++i) min_diff = std::min(min_diff, secs(ts[i]) - secs(ts[i - 1]));
  if (min_diff != 60 && min_diff != 300) {
    fail(ErrorKind::Grid, fmt::format("smallest timestamp spacing is {}s; expected a 1- or 5-minute grid", min_diff));
  }
  for (const auto t : ts) {
    if (secs(t) % min_diff != 0) {
      fail(ErrorKind::Grid, fmt::format("timestamp {} is off the {}-minute grid", format_timestamp(t), min_diff / 60));
    }
  }
  return static_cast<int>(min_diff / 60);
}

void check_increasing(std::span<const Timestamp> ts, const std::string& source) {
  for (std::size_t i = 1; i < ts.size(); ++i) {
    if (ts[i] <= ts[i - 1]) {
      fail(ErrorKind::Ordering, fmt::format("{}: timestamp {} does not follow {} (row {})", source,
                                            format_timestamp(ts[i]), format_timestamp(ts[i - 1]), i + 1));
    }
  }
}

}  // namespace

std::string ColumnLabel::to_string() const { return fmt::format("{}:{}", event_id, lag); }

EventDesignMatrix::EventDesignMatrix(std::size_t n_rows, std::vector<ColumnLabel> labels, std::vector<Entry> entries)
    : n_rows_(n_rows), labels_(std::move(labels)), entries_(std::move(entries)) {
  const std::size_t n_cols = labels_.size();
  for (const auto& e : entries_) {
    if (e.row >= n_rows_ || e.col >= n_cols) {
      fail(ErrorKind::Config, fmt::format("design entry ({}, {}) outside {}x{}", e.row, e.col, n_rows_, n_cols));
    }
  }
  std::sort(entries_.begin(), entries_.end(),
            [](const Entry& a, const Entry& b) { return a.row != b.row ? a.row < b.row : a.col < b.col; });
  entries_.erase(std::unique(entries_.begin(), entries_.end(),
                             [](const Entry& a, const Entry& b) { return a.row == b.row && a.col == b.col; }),
                 entries_.end());

  row_ptr_.assign(n_rows_ + 1, 0);
  col_ptr_.assign(n_cols + 1, 0);
  for (const auto& e : entries_) {
    ++row_ptr_[e.row + 1];
    ++col_ptr_[e.col + 1];
  }
  for (std::size_t i = 0; i < n_rows_; ++i) row_ptr_[i + 1] += row_ptr_[i];
  for (std::size_t j = 0; j < n_cols; ++j) col_ptr_[j + 1] += col_ptr_[j];
  row_cols_.resize(entries_.size());
  col_rows_.resize(entries_.size());
  std::vector<std::size_t> col_fill(col_ptr_.begin(), col_ptr_.end() - 1);
  for (std::size_t k = 0; k < entries_.size(); ++k) {
    row_cols_[k] = entries_[k].col;  // entries are row-major sorted
    col_rows_[col_fill[entries_[k].col]++] = entries_[k].row;
  }
}

std::span<const std::size_t> EventDesignMatrix::column(std::size_t j) const {
  return {col_rows_.data() + col_ptr_[j], col_ptr_[j + 1] - col_ptr_[j]};
}

std::span<const std::size_t> EventDesignMatrix::row(std::size_t t) const {
  return {row_cols_.data() + row_ptr_[t], row_ptr_[t + 1] - row_ptr_[t]};
}

std::vector<PriceBar> read_prices(std::istream& in, const std::string& source, const PriceColumns& columns) {
  const auto table = csv::read(in, source);
  const auto ts_col = table.column(columns.timestamp);
  const auto close_col = table.column(columns.close);
  std::vector<PriceBar> bars;
  bars.reserve(table.rows.size());
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    PriceBar bar;
    try {
      bar.timestamp = parse_timestamp(table.rows[r][ts_col]);
    } catch (const Error& e) {
      fail(ErrorKind::Parse, fmt::format("{}:{}: {}", source, table.line_numbers[r], e.what()));
    }
    bar.close = csv::parse_double(table.rows[r][close_col], table, r);
    if (!(bar.close > 0.0) || !std::isfinite(bar.close)) {
      fail(ErrorKind::Domain, fmt::format("{}:{}: non-positive close {}", source, table.line_numbers[r], bar.close));
    }
    if (!bars.empty() && bar.timestamp <= bars.back().timestamp) {
      fail(ErrorKind::Ordering,
           fmt::format("{}:{}: timestamp {} {} previous row", source, table.line_numbers[r],
                       format_timestamp(bar.timestamp), bar.timestamp == bars.back().timestamp ? "duplicates" : "precedes"));
    }
    bars.push_back(bar);
  }
  return bars;
}

std::vector<PriceBar> load_prices(const std::filesystem::path& path, const PriceColumns& columns) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, fmt::format("cannot open '{}'", path.string()));
  return read_prices(in, path.string(), columns);
}

void write_prices(std::ostream& out, std::span<const PriceBar> bars) {
  out << "timestamp,close\n";
  for (const auto& b : bars) out << format_timestamp(b.timestamp) << ',' << csv::format_double(b.close) << '\n';
}

ReturnSeries compute_log_returns(std::span<const PriceBar> prices) {
  if (prices.size() < 2) fail(ErrorKind::Length, "need at least two price bars");
  std::vector<Timestamp> stamps;
  stamps.reserve(prices.size());
  for (const auto& p : prices) {
    if (!(p.close > 0.0)) {
      fail(ErrorKind::Domain, fmt::format("non-positive price {} at {}", p.close, format_timestamp(p.timestamp)));
    }
    stamps.push_back(p.timestamp);
  }
  check_increasing(stamps, "prices");
  ReturnSeries out;
  out.grid_step_minutes = infer_grid_step(stamps, 5);
  out.timestamps.assign(stamps.begin() + 1, stamps.end());
  out.values.resize(prices.size() - 1);
  for (std::size_t i = 1; i < prices.size(); ++i) {
    out.values[i - 1] = 100.0 * (std::log(prices[i].close) - std::log(prices[i - 1].close));
  }
  return out;
}

ReturnSeries load_returns(const std::filesystem::path& path, const std::string& value_column) {
  const auto table = csv::read_file(path);
  const auto ts_col = table.column("timestamp");
  const auto v_col = table.column(value_column);
  ReturnSeries out;
  out.timestamps.reserve(table.rows.size());
  out.values.reserve(table.rows.size());
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    try {
      out.timestamps.push_back(parse_timestamp(table.rows[r][ts_col]));
    } catch (const Error& e) {
      fail(ErrorKind::Parse, fmt::format("{}:{}: {}", table.source, table.line_numbers[r], e.what()));
    }
    out.values.push_back(csv::parse_double(table.rows[r][v_col], table, r));
  }
  check_increasing(out.timestamps, table.source);
  out.grid_step_minutes = infer_grid_step(out.timestamps, 5);
  return out;
}

void write_returns(std::ostream& out, const ReturnSeries& series, const std::string& value_column) {
  out << "timestamp," << value_column << '\n';
  for (std::size_t i = 0; i < series.size(); ++i) {
    out << format_timestamp(series.timestamps[i]) << ',' << csv::format_double(series.values[i]) << '\n';
  }
}

RVSeries compute_realized_volatility(const ReturnSeries& one_min) {
  if (one_min.grid_step_minutes != 1) {
    fail(ErrorKind::Grid, fmt::format("realized volatility needs one-minute returns, got {}-minute grid",
                                      one_min.grid_step_minutes));
  }
  const auto& ts = one_min.timestamps;
  const auto& r = one_min.values;
  const std::size_t n = ts.size();
  RVSeries out;
  std::size_t i = 0;
  while (i < n) {
    const long t0 = secs(ts[i]);
    const long window_end = ((t0 + 299) / 300) * 300;
    std::size_t j = i;
    double ss = 0.0;
    while (j < n && secs(ts[j]) <= window_end) {
      if (j > i && secs(ts[j]) - secs(ts[j - 1]) != 60) {
        fail(ErrorKind::Gap, fmt::format("missing minutes inside window ending {}",
                                         format_timestamp(Timestamp{std::chrono::seconds{window_end}})));
      }
      ss += r[j] * r[j];
      ++j;
    }
    const auto window_label = Timestamp{std::chrono::seconds{window_end}};
    bool keep = true;
    if (secs(ts[i]) > window_end - 240) {
      if (i == 0) {
        keep = false;
      } else if (secs(ts[i]) - secs(ts[i - 1]) <= kSessionBreakSeconds) {
        fail(ErrorKind::Gap, fmt::format("missing minutes inside window ending {}", format_timestamp(window_label)));
      }
    }
    if (secs(ts[j - 1]) < window_end) {
      if (j == n || secs(ts[j]) - secs(ts[j - 1]) > kSessionBreakSeconds) {
        keep = false;
      } else {
        fail(ErrorKind::Gap, fmt::format("missing minutes inside window ending {}", format_timestamp(window_label)));
      }
    }
    if (keep) {
      out.timestamps.push_back(window_label);
      out.values.push_back(std::sqrt(ss));
    }
    i = j;
  }
  return out;
}

int seasonal_index(Timestamp ts) {
  const int sod = seconds_of_day(ts);
  if (sod % 300 != 0) fail(ErrorKind::Grid, fmt::format("{} is not on the 5-minute grid", format_timestamp(ts)));
  return sod / 300;
}

std::vector<int> seasonal_indices(std::span<const Timestamp> grid) {
  std::vector<int> bins(grid.size());
  for (std::size_t t = 0; t < grid.size(); ++t) bins[t] = seasonal_index(grid[t]);
  return bins;
}

EventCalendar read_calendar(std::istream& in, const std::string& source) {
  const auto table = csv::read(in, source);
  const auto id_col = table.column("event_id");
  const auto name_col = table.column("name");
  const auto country_col = table.column("country");
  const auto rel_col = table.column("release");
  EventCalendar cal;
  std::unordered_map<std::string, std::pair<std::string, std::string>> identity;
  std::map<std::pair<std::string, std::string>, std::string> by_name;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    CalendarEntry e{row[id_col], row[name_col], row[country_col], {}};
    if (e.event_id.empty()) fail(ErrorKind::Parse, fmt::format("{}:{}: empty event_id", source, table.line_numbers[r]));
    try {
      e.release = parse_timestamp(row[rel_col]);
    } catch (const Error& err) {
      fail(ErrorKind::Parse, fmt::format("{}:{}: {}", source, table.line_numbers[r], err.what()));
    }
    const auto key = std::make_pair(e.name, e.country);
    auto [it, inserted] = identity.emplace(e.event_id, key);
    auto [jt, inserted_name] = by_name.emplace(key, e.event_id);
    if ((!inserted && it->second != key) || (!inserted_name && jt->second != e.event_id)) {
      fail(ErrorKind::Parse, fmt::format("{}:{}: event_id '{}' is not unique per (name, country)", source,
                                         table.line_numbers[r], e.event_id));
    }
    cal.entries.push_back(std::move(e));
  }
  return cal;
}

EventCalendar load_calendar(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, fmt::format("cannot open '{}'", path.string()));
  return read_calendar(in, path.string());
}

void write_calendar(std::ostream& out, const EventCalendar& calendar) {
  out << "event_id,name,country,release\n";
  for (const auto& e : calendar.entries) {
    csv::write_row(out, {e.event_id, e.name, e.country, format_timestamp(e.release)});
  }
}

EventDesignMatrix align_events(const EventCalendar& calendar, std::span<const Timestamp> grid, int n_lags,
                               int grid_step_minutes, AlignmentReport* report) {
  if (n_lags <= 0) fail(ErrorKind::Config, fmt::format("n_lags must be positive, got {}", n_lags));
  if (grid.empty()) fail(ErrorKind::Config, "empty grid");
  const long step = 60L * grid_step_minutes;

  std::vector<std::string> ids;
  std::unordered_map<std::string, std::size_t> id_index;
  for (const auto& e : calendar.entries) {
    if (id_index.emplace(e.event_id, ids.size()).second) ids.push_back(e.event_id);
  }
  std::vector<ColumnLabel> labels;
  labels.reserve(ids.size() * static_cast<std::size_t>(n_lags));
  for (const auto& id : ids) {
    for (int lag = 1; lag <= n_lags; ++lag) labels.push_back({id, lag});
  }

  AlignmentReport rep;
  std::vector<EventDesignMatrix::Entry> entries;
  const long first = secs(grid.front());
  for (const auto& e : calendar.entries) {
    ++rep.releases;
    const long rel = secs(e.release);
    // A grid point t stamps the return over (t - step, t]; earlier releases
    // would belong to a window that is not in the sample.
    if (rel <= first - step || e.release > grid.back()) {
      ++rep.off_sample;
      continue;
    }
    const auto it = std::lower_bound(grid.begin(), grid.end(), e.release);
    const auto start = static_cast<std::size_t>(it - grid.begin());
    const std::size_t base_col = id_index.at(e.event_id) * static_cast<std::size_t>(n_lags);
    for (int lag = 1; lag <= n_lags; ++lag) {
      const std::size_t t = start + static_cast<std::size_t>(lag - 1);
      if (t >= grid.size() || secs(grid[t]) != secs(grid[start]) + (lag - 1) * step) {
        rep.truncated_lags += static_cast<std::size_t>(n_lags - lag + 1);
        break;
      }
      entries.push_back({t, base_col + static_cast<std::size_t>(lag - 1)});
    }
  }
  if (report) *report = rep;
  return EventDesignMatrix(grid.size(), std::move(labels), std::move(entries));
}

void write_design_triplets(std::ostream& out, const EventDesignMatrix& design) {
  out << "row,col,label\n";
  for (const auto& e : design.entries()) {
    csv::write_row(out, {std::to_string(e.row), std::to_string(e.col), design.labels()[e.col].to_string()});
  }
}

namespace {

double pearson(std::span<const double> a, std::span<const double> b) {
  const std::size_t n = a.size();
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= static_cast<double>(n);
  mb /= static_cast<double>(n);
  double saa = 0.0, sbb = 0.0, sab = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
    sab += (a[i] - ma) * (b[i] - mb);
  }
  if (saa <= 0.0 || sbb <= 0.0) return 0.0;
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

std::pair<std::size_t, std::size_t> window_range(const ReturnSeries& s, Timestamp end, int window_minutes) {
  const Timestamp begin = end - std::chrono::minutes{window_minutes};
  const auto lo = std::upper_bound(s.timestamps.begin(), s.timestamps.end(), begin);
  const auto hi = std::upper_bound(s.timestamps.begin(), s.timestamps.end(), end);
  return {static_cast<std::size_t>(lo - s.timestamps.begin()), static_cast<std::size_t>(hi - s.timestamps.begin())};
}

}  // namespace

double realized_correlation(const ReturnSeries& a, const ReturnSeries& b, Timestamp end, int window_minutes) {
  if (window_minutes < 2) fail(ErrorKind::Config, "correlation window needs at least two minutes");
  const auto [alo, ahi] = window_range(a, end, window_minutes);
  const auto [blo, bhi] = window_range(b, end, window_minutes);
  const auto need = static_cast<std::size_t>(window_minutes);
  if (ahi - alo != need || bhi - blo != need) {
    fail(ErrorKind::Alignment, fmt::format("window ending {} is not covered by both one-minute series",
                                           format_timestamp(end)));
  }
  for (std::size_t k = 0; k < need; ++k) {
    if (a.timestamps[alo + k] != b.timestamps[blo + k]) {
      fail(ErrorKind::Alignment, fmt::format("mismatched timestamps in window ending {}", format_timestamp(end)));
    }
  }
  return pearson(std::span(a.values).subspan(alo, need), std::span(b.values).subspan(blo, need));
}

std::vector<double> trailing_realized_correlation(const ReturnSeries& a, const ReturnSeries& b,
                                                  std::span<const Timestamp> grid, int window_minutes,
                                                  int grid_step_minutes) {
  std::vector<double> out(grid.size(), 0.0);
  for (std::size_t t = 0; t < grid.size(); ++t) {
    const Timestamp end = grid[t] - std::chrono::minutes{grid_step_minutes};
    const auto [alo, ahi] = window_range(a, end, window_minutes);
    const auto [blo, bhi] = window_range(b, end, window_minutes);
    if (ahi - alo != bhi - blo) {
      fail(ErrorKind::Alignment, fmt::format("one-minute series disagree in window ending {}", format_timestamp(end)));
    }
    const std::size_t n = ahi - alo;
    for (std::size_t k = 0; k < n; ++k) {
      if (a.timestamps[alo + k] != b.timestamps[blo + k]) {
        fail(ErrorKind::Alignment, fmt::format("mismatched timestamps in window ending {}", format_timestamp(end)));
      }
    }
    if (n >= 2) out[t] = pearson(std::span(a.values).subspan(alo, n), std::span(b.values).subspan(blo, n));
  }
  return out;
}

std::vector<Timestamp> make_grid(Timestamp start, std::size_t n, int step_minutes, bool skip_weekends) {
  if (secs(start) % (60L * step_minutes) != 0) {
    fail(ErrorKind::Grid, fmt::format("grid start {} is not a multiple of {} minutes", format_timestamp(start), step_minutes));
  }
  std::vector<Timestamp> grid;
  grid.reserve(n);
  Timestamp t = start;
  while (grid.size() < n) {
    if (!(skip_weekends && is_weekend(t))) grid.push_back(t);
    t += std::chrono::minutes{step_minutes};
  }
  return grid;
}

}  // namespace fxvol::data
