#include "deeptrade/market_data.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace deeptrade {

namespace {

constexpr const char* kHeader = "Date,Open,High,Low,Close,Adj Close,Volume";

std::string strip_cr(std::string line) {
  while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.pop_back();
  return line;
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

[[noreturn]] void row_error(const std::filesystem::path& path, int line_no,
                            const std::string& why) {
  throw DataError(path.string() + ":" + std::to_string(line_no) + ": " + why);
}

double parse_price(const std::filesystem::path& path, int line_no, const std::string& field,
                   const char* name) {
  double v = 0.0;
  try {
    std::size_t pos = 0;
    v = std::stod(field, &pos);
    if (pos != field.size()) throw std::invalid_argument(field);
  } catch (const std::exception&) {
    row_error(path, line_no, std::string("malformed ") + name + " value '" + field + "'");
  }
  if (!(v > 0.0)) row_error(path, line_no, std::string("non-positive ") + name + " price " + field);
  return v;
}

void check_bar(const std::filesystem::path& path, int line_no, const Bar& b) {
  if (b.low > b.high) row_error(path, line_no, "low above high");
  if (b.open < b.low || b.open > b.high) row_error(path, line_no, "open outside [low, high]");
  if (b.close < b.low || b.close > b.high) row_error(path, line_no, "close outside [low, high]");
  if (b.volume < 0) row_error(path, line_no, "negative volume");
}

}  // namespace

std::vector<double> PriceSeries::closes() const {
  std::vector<double> out;
  out.reserve(bars.size());
  for (const Bar& b : bars) out.push_back(b.close);
  return out;
}

PriceSeries load_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open data file: " + path.string());

  std::string line;
  if (!std::getline(in, line) || strip_cr(line) != kHeader)
    throw DataError(path.string() + ": expected header '" + kHeader + "'");

  PriceSeries series;
  series.ticker = path.stem().string();

  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    line = strip_cr(line);
    if (line.empty()) continue;
    auto fields = split_fields(line);
    if (fields.size() != 7)
      row_error(path, line_no, "expected 7 fields, got " + std::to_string(fields.size()));

    Bar bar;
    auto date = Date::try_parse(fields[0]);
    if (!date) row_error(path, line_no, "malformed date '" + fields[0] + "'");
    bar.date = *date;
    bar.open = parse_price(path, line_no, fields[1], "open");
    bar.high = parse_price(path, line_no, fields[2], "high");
    bar.low = parse_price(path, line_no, fields[3], "low");
    bar.close = parse_price(path, line_no, fields[4], "close");
    bar.adj_close = parse_price(path, line_no, fields[5], "adj close");
    try {
      std::size_t pos = 0;
      bar.volume = std::stoll(fields[6], &pos);
      if (pos != fields[6].size()) throw std::invalid_argument(fields[6]);
    } catch (const std::exception&) {
      row_error(path, line_no, "malformed volume '" + fields[6] + "'");
    }
    check_bar(path, line_no, bar);
    series.bars.push_back(bar);
  }

  std::stable_sort(series.bars.begin(), series.bars.end(),
                   [](const Bar& a, const Bar& b) { return a.date < b.date; });
  for (std::size_t i = 1; i < series.bars.size(); ++i) {
    if (series.bars[i].date == series.bars[i - 1].date)
      throw DataError(path.string() + ": duplicate date " + series.bars[i].date.to_string());
  }
  return series;
}

void save_csv(const PriceSeries& series, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write data file: " + path.string());
  out << kHeader << '\n';
  char buf[512];
  for (const Bar& b : series.bars) {
    std::snprintf(buf, sizeof(buf), "%s,%.17g,%.17g,%.17g,%.17g,%.17g,%lld",
                  b.date.to_string().c_str(), b.open, b.high, b.low, b.close, b.adj_close,
                  b.volume);
    out << buf << '\n';
  }
  if (!out) throw DataError("failed writing data file: " + path.string());
}

PriceSeries slice(const PriceSeries& series, const DateRange& range) {
  auto lo = std::lower_bound(series.bars.begin(), series.bars.end(), range.start,
                             [](const Bar& b, const Date& d) { return b.date < d; });
  auto hi = std::upper_bound(series.bars.begin(), series.bars.end(), range.end,
                             [](const Date& d, const Bar& b) { return d < b.date; });
  if (lo >= hi)
    throw DataError("empty slice: " + series.ticker + " has no bars in " +
                    range.start.to_string() + ".." + range.end.to_string());
  PriceSeries out;
  out.ticker = series.ticker;
  out.bars.assign(lo, hi);
  return out;
}

PriceSeries with_adjusted_close(PriceSeries series) {
  for (Bar& b : series.bars) {
    const double ratio = b.adj_close / b.close;
    b.open *= ratio;
    b.high *= ratio;
    b.low *= ratio;
    b.close = b.adj_close;
  }
  return series;
}

}  // namespace deeptrade
