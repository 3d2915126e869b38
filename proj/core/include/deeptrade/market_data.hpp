#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "deeptrade/date.hpp"
#include "deeptrade/errors.hpp"

namespace deeptrade {

/// One daily OHLCV record. All prices strictly positive,
/// low <= open <= high and low <= close <= high.
struct Bar {
  Date date;
  double open = 0.0;
  double high = 0.0;
  double low = 0.0;
  double close = 0.0;
  double adj_close = 0.0;
  long long volume = 0;

  bool operator==(const Bar&) const = default;
};

/// Daily bars for a single ticker, strictly ascending by date.
/// Immutable by convention once built; safe to share across threads.
struct PriceSeries {
  std::string ticker;
  std::vector<Bar> bars;

  std::size_t size() const { return bars.size(); }
  bool empty() const { return bars.empty(); }
  const Bar& front() const { return bars.front(); }
  const Bar& back() const { return bars.back(); }

  std::vector<double> closes() const;
};

/// Loads a Yahoo-Finance-style export. Expects the exact header
/// `Date,Open,High,Low,Close,Adj Close,Volume` and ISO-8601 dates.
/// Rows are sorted by date if the input is unsorted. The ticker is taken
/// from the file name stem. Throws DataError for a missing file, a
/// malformed row (message carries the line number), a non-positive price,
/// or a duplicate date.
PriceSeries load_csv(const std::filesystem::path& path);

/// Writes the same column layout load_csv reads. Prices are emitted with
/// 17 significant digits so that load(save(s)) reproduces s bar for bar.
void save_csv(const PriceSeries& series, const std::filesystem::path& path);

/// Bars with range.start <= date <= range.end, order preserved.
/// Throws DataError when the range selects nothing.
PriceSeries slice(const PriceSeries& series, const DateRange& range);

/// Rescales every price column by adj_close/close so that close becomes the
/// adjusted close while OHLC ratios (and thus the bar invariants) survive.
PriceSeries with_adjusted_close(PriceSeries series);

}  // namespace deeptrade
