#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "fxvol/timeutil.hpp"

namespace fxvol::data {

inline constexpr int kBinsPerDay = 288;
inline constexpr int kDefaultLags = 6;

struct PriceBar {
  Timestamp timestamp;
  double close = 0.0;
};

/// Log returns in percent on a fixed grid. Consecutive timestamps differ by
/// `grid_step_minutes` inside a session; larger jumps are session breaks.
struct ReturnSeries {
  std::vector<Timestamp> timestamps;
  std::vector<double> values;
  int grid_step_minutes = 5;

  std::size_t size() const { return values.size(); }
};

struct CalendarEntry {
  std::string event_id;
  std::string name;
  std::string country;
  Timestamp release;
};

struct EventCalendar {
  std::vector<CalendarEntry> entries;
};

struct ColumnLabel {
  std::string event_id;
  int lag = 1;  // 1-based

  /// `<event_id>:<lag>`
  std::string to_string() const;
};

struct RVSeries {
  std::vector<Timestamp> timestamps;
  std::vector<double> values;

  std::size_t size() const { return values.size(); }
};

/// Sparse 0/1 matrix of announcement lags with row and column indexes.
class EventDesignMatrix {
 public:
  struct Entry {
    std::size_t row;
    std::size_t col;
  };

  EventDesignMatrix() = default;
  /// Duplicate (row, col) pairs are merged; out-of-range entries throw.
  EventDesignMatrix(std::size_t n_rows, std::vector<ColumnLabel> labels, std::vector<Entry> entries);

  std::size_t n_rows() const { return n_rows_; }
  std::size_t n_cols() const { return labels_.size(); }
  std::size_t nnz() const { return entries_.size(); }

  const std::vector<ColumnLabel>& labels() const { return labels_; }
  /// Sorted by (row, col).
  const std::vector<Entry>& entries() const { return entries_; }

  /// Active rows of column j, ascending.
  std::span<const std::size_t> column(std::size_t j) const;
  /// Active columns of row t, ascending.
  std::span<const std::size_t> row(std::size_t t) const;

 private:
  std::size_t n_rows_ = 0;
  std::vector<ColumnLabel> labels_;
  std::vector<Entry> entries_;
  std::vector<std::size_t> row_ptr_, row_cols_;
  std::vector<std::size_t> col_ptr_, col_rows_;
};

struct AlignmentReport {
  std::size_t releases = 0;
  std::size_t off_sample = 0;     // releases outside the grid, dropped
  std::size_t truncated_lags = 0;  // lags dropped at session breaks or sample end
};

struct PriceColumns {
  std::string timestamp = "timestamp";
  std::string close = "close";
};

std::vector<PriceBar> read_prices(std::istream& in, const std::string& source, const PriceColumns& columns = {});
std::vector<PriceBar> load_prices(const std::filesystem::path& path, const PriceColumns& columns = {});
void write_prices(std::ostream& out, std::span<const PriceBar> bars);

/// values[t] = 100 * (ln close[t+1] - ln close[t]), stamped at the later bar.
ReturnSeries compute_log_returns(std::span<const PriceBar> prices);

/// Reads `timestamp,<value column>`; infers the grid step from the timestamps.
ReturnSeries load_returns(const std::filesystem::path& path, const std::string& value_column = "ret");
void write_returns(std::ostream& out, const ReturnSeries& series, const std::string& value_column = "ret");

/// Five-minute realized volatility from one-minute returns. A window
/// (t-5min, t] needs all five minutes, except the first window of a session,
/// whose opening return already spans the break.
RVSeries compute_realized_volatility(const ReturnSeries& one_min);

/// (hour*60 + minute) / 5 for a timestamp on the five-minute grid.
int seasonal_index(Timestamp ts);
std::vector<int> seasonal_indices(std::span<const Timestamp> grid);

EventCalendar read_calendar(std::istream& in, const std::string& source);
EventCalendar load_calendar(const std::filesystem::path& path);
void write_calendar(std::ostream& out, const EventCalendar& calendar);

/// Maps each release to the first grid point at or after it and sets lags
/// 1..n_lags on consecutive grid points. Columns are ordered by first
/// appearance of each event id, lag-minor.
EventDesignMatrix align_events(const EventCalendar& calendar, std::span<const Timestamp> grid,
                               int n_lags = kDefaultLags, int grid_step_minutes = 5,
                               AlignmentReport* report = nullptr);

/// `row,col,label` triplets.
void write_design_triplets(std::ostream& out, const EventDesignMatrix& design);

/// Sample correlation of the one-minute returns stamped in (end - window, end].
/// Both series must contain exactly those minutes. Zero variance gives 0.
double realized_correlation(const ReturnSeries& a, const ReturnSeries& b, Timestamp end,
                            int window_minutes = 5);

/// For each grid point t, the realized correlation over the window that
/// closes one grid step earlier (information available before t). Windows
/// with fewer than two aligned pairs give 0.
std::vector<double> trailing_realized_correlation(const ReturnSeries& a, const ReturnSeries& b,
                                                  std::span<const Timestamp> grid,
                                                  int window_minutes = 5, int grid_step_minutes = 5);

/// Consecutive five-minute grid of length n starting at `start`, optionally
/// skipping Saturdays and Sundays.
std::vector<Timestamp> make_grid(Timestamp start, std::size_t n, int step_minutes = 5, bool skip_weekends = true);

}  // namespace fxvol::data
