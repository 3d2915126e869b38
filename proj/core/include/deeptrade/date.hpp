#pragma once

#include <chrono>
#include <compare>
#include <optional>
#include <string>
#include <string_view>

namespace deeptrade {

/// Calendar date at day granularity. Text form is ISO-8601 "YYYY-MM-DD".
class Date {
public:
  Date() = default;
  Date(int year, unsigned month, unsigned day);

  /// Throws DataError on anything that is not a valid "YYYY-MM-DD" date.
  static Date parse(std::string_view text);
  static std::optional<Date> try_parse(std::string_view text);

  int year() const { return static_cast<int>(ymd_.year()); }
  unsigned month() const { return static_cast<unsigned>(ymd_.month()); }
  unsigned day() const { return static_cast<unsigned>(ymd_.day()); }

  std::string to_string() const;
  Date plus_days(long n) const;
  bool is_weekend() const;

  auto operator<=>(const Date&) const = default;

  /// Signed day count, `to - from`.
  friend long days_between(Date from, Date to);

private:
  std::chrono::year_month_day ymd_{};
};

/// Inclusive date interval.
struct DateRange {
  Date start;
  Date end;

  DateRange(Date s, Date e);  // throws DataError when start > end

  bool contains(Date d) const { return start <= d && d <= end; }
  /// Number of calendar days covered, endpoints included.
  long span_days() const { return days_between(start, end) + 1; }
};

}  // namespace deeptrade
