#include "fxvol/timeutil.hpp"

#include <charconv>

#include <fmt/format.h>

#include "fxvol/error.hpp"

namespace fxvol {
namespace {

int read_int(std::string_view text, std::size_t pos, std::size_t len, std::string_view whole) {
  int value = 0;
  if (pos + len > text.size()) fail(ErrorKind::Parse, fmt::format("truncated timestamp '{}'", whole));
  const char* first = text.data() + pos;
  auto [ptr, ec] = std::from_chars(first, first + len, value);
  if (ec != std::errc{} || ptr != first + len) {
    fail(ErrorKind::Parse, fmt::format("malformed timestamp '{}'", whole));
  }
  return value;
}

void expect(std::string_view text, std::size_t pos, std::string_view allowed, std::string_view whole) {
  if (pos >= text.size() || allowed.find(text[pos]) == std::string_view::npos) {
    fail(ErrorKind::Parse, fmt::format("malformed timestamp '{}'", whole));
  }
}

}  // namespace

Timestamp parse_timestamp(std::string_view text) {
  using namespace std::chrono;
  const std::string_view whole = text;
  while (!text.empty() && text.front() == ' ') text.remove_prefix(1);
  while (!text.empty() && (text.back() == ' ' || text.back() == '\r')) text.remove_suffix(1);

  if (text.ends_with("Z")) {
    text.remove_suffix(1);
  } else if (text.ends_with("+00:00")) {
    text.remove_suffix(6);
  } else if (text.size() > 19 && (text[text.size() - 6] == '+' || text[text.size() - 6] == '-')) {
    fail(ErrorKind::Parse, fmt::format("timestamp '{}' is not UTC", whole));
  }

  const int y = read_int(text, 0, 4, whole);
  expect(text, 4, "-", whole);
  const int mo = read_int(text, 5, 2, whole);
  expect(text, 7, "-", whole);
  const int d = read_int(text, 8, 2, whole);
  expect(text, 10, "T ", whole);
  const int hh = read_int(text, 11, 2, whole);
  expect(text, 13, ":", whole);
  const int mm = read_int(text, 14, 2, whole);
  int ss = 0;
  if (text.size() > 16) {
    expect(text, 16, ":", whole);
    ss = read_int(text, 17, 2, whole);
    if (text.size() != 19) fail(ErrorKind::Parse, fmt::format("malformed timestamp '{}'", whole));
  } else if (text.size() != 16) {
    fail(ErrorKind::Parse, fmt::format("malformed timestamp '{}'", whole));
  }

  const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
  if (!ymd.ok() || hh > 23 || mm > 59 || ss > 59) {
    fail(ErrorKind::Parse, fmt::format("out-of-range timestamp '{}'", whole));
  }
  return sys_days{ymd} + hours{hh} + minutes{mm} + seconds{ss};
}

std::string format_timestamp(Timestamp ts) {
  using namespace std::chrono;
  const auto day_point = floor<days>(ts);
  const year_month_day ymd{day_point};
  const hh_mm_ss hms{ts - day_point};
  return fmt::format("{:04d}-{:02d}-{:02d}T{:02d}:{:02d}:{:02d}Z", static_cast<int>(ymd.year()),
                     static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                     hms.hours().count(), hms.minutes().count(), hms.seconds().count());
}

int seconds_of_day(Timestamp ts) {
  using namespace std::chrono;
  return static_cast<int>((ts - floor<days>(ts)).count());
}

bool is_weekend(Timestamp ts) {
  using namespace std::chrono;
  const weekday wd{floor<days>(ts)};
  return wd == Saturday || wd == Sunday;
}

}  // namespace fxvol
