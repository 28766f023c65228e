#include "sociolex/timebucket.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <chrono>

#include "sociolex/error.hpp"

namespace sociolex {

namespace {

using days = std::chrono::days;
using sys_days = std::chrono::sys_days;

std::chrono::year_month_day civil_from_ts(std::int64_t ts) {
  // floor toward -inf so pre-1970 timestamps bucket correctly
  std::int64_t d = ts / 86400;
  if (ts % 86400 < 0) --d;
  return std::chrono::year_month_day{sys_days{days{d}}};
}

std::int64_t ts_from_civil(int y, unsigned m) {
  const sys_days sd{std::chrono::year{y} / std::chrono::month{m} / std::chrono::day{1}};
  return static_cast<std::int64_t>(sd.time_since_epoch().count()) * 86400;
}

}  // namespace

Granularity granularity_from_string(const std::string& s) {
  if (s == "month") return Granularity::month;
  if (s == "quarter") return Granularity::quarter;
  if (s == "year") return Granularity::year;
  throw ValidationError("unknown granularity '" + s + "' (expected month|quarter|year)");
}

const char* to_string(Granularity g) {
  switch (g) {
    case Granularity::month: return "month";
    case Granularity::quarter: return "quarter";
    default: return "year";
  }
}

TimeBucket time_bucket(std::int64_t ts_utc, Granularity g) {
  const auto ymd = civil_from_ts(ts_utc);
  const int y = static_cast<int>(ymd.year());
  const int m = static_cast<int>(static_cast<unsigned>(ymd.month()));  // 1..12
  std::int32_t idx = 0;
  switch (g) {
    case Granularity::month: idx = (y - 1970) * 12 + (m - 1); break;
    case Granularity::quarter: idx = (y - 1970) * 4 + (m - 1) / 3; break;
    case Granularity::year: idx = y - 1970; break;
  }
  return TimeBucket{g, idx};
}

std::int32_t month_index(std::int64_t ts_utc) {
  return time_bucket(ts_utc, Granularity::month).index;
}

std::int64_t TimeBucket::start() const {
  switch (granularity) {
    case Granularity::month: {
      const int y = 1970 + index / 12 - (index % 12 < 0 ? 1 : 0);
      const int m = ((index % 12) + 12) % 12 + 1;
      return ts_from_civil(y, static_cast<unsigned>(m));
    }
    case Granularity::quarter: {
      const int y = 1970 + index / 4 - (index % 4 < 0 ? 1 : 0);
      const int q = ((index % 4) + 4) % 4;
      return ts_from_civil(y, static_cast<unsigned>(q * 3 + 1));
    }
    default:
      return ts_from_civil(1970 + index, 1);
  }
}

std::int64_t TimeBucket::end() const {
  TimeBucket next{granularity, index + 1};
  return next.start();
}

std::string TimeBucket::label() const {
  char buf[16];
  switch (granularity) {
    case Granularity::month: {
      const int y = 1970 + index / 12 - (index % 12 < 0 ? 1 : 0);
      const int m = ((index % 12) + 12) % 12 + 1;
      std::snprintf(buf, sizeof buf, "%04d-%02d", y, m);
      return buf;
    }
    case Granularity::quarter: {
      const int y = 1970 + index / 4 - (index % 4 < 0 ? 1 : 0);
      const int q = ((index % 4) + 4) % 4 + 1;
      std::snprintf(buf, sizeof buf, "%04d-Q%d", y, q);
      return buf;
    }
    default:
      std::snprintf(buf, sizeof buf, "%04d", 1970 + index);
      return buf;
  }
}

std::int32_t parse_year_month(const std::string& s) {
  if (s.size() != 7 || s[4] != '-') {
    throw ValidationError("bad year-month '" + s + "' (expected YYYY-MM)");
  }
  int y = 0, m = 0;
  auto r1 = std::from_chars(s.data(), s.data() + 4, y);
  auto r2 = std::from_chars(s.data() + 5, s.data() + 7, m);
  if (r1.ec != std::errc{} || r2.ec != std::errc{} || m < 1 || m > 12) {
    throw ValidationError("bad year-month '" + s + "' (expected YYYY-MM)");
  }
  return (y - 1970) * 12 + (m - 1);
}

std::string month_label(std::int32_t month_idx) {
  return TimeBucket{Granularity::month, month_idx}.label();
}

TimeBucket parse_bucket_label(const std::string& s) {
  auto digits = [](const std::string& str) {
    return std::all_of(str.begin(), str.end(),
                       [](unsigned char c) { return std::isdigit(c); });
  };
  if (s.size() == 4 && digits(s)) {
    return TimeBucket{Granularity::year, static_cast<std::int32_t>(std::stoi(s) - 1970)};
  }
  if (s.size() == 7 && s[4] == '-' && s[5] == 'Q') {
    const std::string y = s.substr(0, 4);
    if (digits(y) && s[6] >= '1' && s[6] <= '4') {
      return TimeBucket{Granularity::quarter,
                        static_cast<std::int32_t>((std::stoi(y) - 1970) * 4 + (s[6] - '1'))};
    }
  }
  if (s.size() == 7 && s[4] == '-') {
    return TimeBucket{Granularity::month, parse_year_month(s)};
  }
  throw ValidationError("bad bucket label '" + s + "'");
}

}  // namespace sociolex
