#include "deeptrade/date.hpp"

#include <cstdio>

#include "deeptrade/errors.hpp"

namespace deeptrade {

namespace {

bool all_digits(std::string_view s) {
  if (s.empty()) return false;
  for (char c : s)
    if (c < '0' || c > '9') return false;
  return true;
}

}  // namespace

Date::Date(int year, unsigned month, unsigned day)
    : ymd_(std::chrono::year{year}, std::chrono::month{month}, std::chrono::day{day}) {
  if (!ymd_.ok()) throw DataError("invalid calendar date: " + to_string());
}

std::optional<Date> Date::try_parse(std::string_view text) {
  if (text.size() != 10 || text[4] != '-' || text[7] != '-') return std::nullopt;
  auto y = text.substr(0, 4), m = text.substr(5, 2), d = text.substr(8, 2);
  if (!all_digits(y) || !all_digits(m) || !all_digits(d)) return std::nullopt;
  auto num = [](std::string_view s) {
    int v = 0;
    for (char c : s) v = v * 10 + (c - '0');
    return v;
  };
  std::chrono::year_month_day ymd{std::chrono::year{num(y)},
                                  std::chrono::month{static_cast<unsigned>(num(m))},
                                  std::chrono::day{static_cast<unsigned>(num(d))}};
  if (!ymd.ok()) return std::nullopt;
  Date out;
  out.ymd_ = ymd;
  return out;
}

Date Date::parse(std::string_view text) {
  auto d = try_parse(text);
  if (!d) throw DataError("invalid date '" + std::string(text) + "', expected YYYY-MM-DD");
  return *d;
}

std::string Date::to_string() const {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", year(), month(), day());
  return buf;
}

Date Date::plus_days(long n) const {
  std::chrono::sys_days s{ymd_};
  s += std::chrono::days{n};
  Date out;
  out.ymd_ = std::chrono::year_month_day{s};
  return out;
}

bool Date::is_weekend() const {
  std::chrono::weekday wd{std::chrono::sys_days{ymd_}};
  return wd == std::chrono::Saturday || wd == std::chrono::Sunday;
}

long days_between(Date from, Date to) {
  return (std::chrono::sys_days{to.ymd_} - std::chrono::sys_days{from.ymd_}).count();
}

DateRange::DateRange(Date s, Date e) : start(s), end(e) {
  if (end < start)
    throw DataError("invalid date range: " + start.to_string() + " > " + end.to_string());
}

}  // namespace deeptrade
