#pragma once

#include <cstdint>
#include <string>

namespace sociolex {

enum class Granularity { month, quarter, year };

Granularity granularity_from_string(const std::string& s);
const char* to_string(Granularity g);

// Calendar bucket in UTC. The index counts buckets since 1970-01 (months,
// quarters, or years), so indices are comparable within one granularity.
// Intervals are half-open: start() <= ts < end().
struct TimeBucket {
  Granularity granularity = Granularity::month;
  std::int32_t index = 0;

  std::int64_t start() const;
  std::int64_t end() const;
  // "2015-03", "2015-Q1", or "2015".
  std::string label() const;

  friend auto operator<=>(const TimeBucket&, const TimeBucket&) = default;
};

// Requires ts > 0 (validated at ingestion).
TimeBucket time_bucket(std::int64_t ts_utc, Granularity g);

// Month index (months since 1970-01) for a given UTC timestamp.
std::int32_t month_index(std::int64_t ts_utc);

// Parses "YYYY-MM" into a month index. Throws ValidationError on bad input.
std::int32_t parse_year_month(const std::string& s);
std::string month_label(std::int32_t month_idx);

// Inverse of TimeBucket::label(): accepts YYYY, YYYY-Qn, and YYYY-MM.
TimeBucket parse_bucket_label(const std::string& s);

}  // namespace sociolex
