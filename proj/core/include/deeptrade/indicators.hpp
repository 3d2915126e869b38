#pragma once

#include <span>
#include <vector>

#include "deeptrade/market_data.hpp"

namespace deeptrade {

struct IndicatorConfig {
  int macd_fast = 12;
  int macd_slow = 26;
  int macd_signal = 9;  // kept for config compatibility; the feature is the MACD line
  int rsi_period = 14;
  int cci_period = 20;
  int adx_period = 14;

  void validate() const;  // throws DataError; periods >= 1, fast < slow
};

/// One day's worth of indicator features. rsi and adx lie in [0, 100].
struct IndicatorSet {
  double macd = 0.0;
  double rsi = 0.0;
  double cci = 0.0;
  double adx = 0.0;

  bool operator==(const IndicatorSet&) const = default;
};

/// Bars consumed before the first day on which all four indicators are
/// defined. The first usable index of a series is indicator_warmup(cfg) - 1.
int indicator_warmup(const IndicatorConfig& cfg);

// Full-history series. Entries before an indicator's own warm-up are NaN.
// Each is a single forward pass, so the value at index t depends only on
// inputs at indices <= t.
std::vector<double> macd_series(std::span<const double> closes, const IndicatorConfig& cfg);
std::vector<double> rsi_series(std::span<const double> closes, const IndicatorConfig& cfg);
std::vector<double> cci_series(std::span<const Bar> bars, const IndicatorConfig& cfg);
std::vector<double> adx_series(std::span<const Bar> bars, const IndicatorConfig& cfg);

// Value at the last index of the given history. Throw DataError when the
// history is shorter than the indicator's warm-up.
double macd(std::span<const double> closes, const IndicatorConfig& cfg);
double rsi(std::span<const double> closes, const IndicatorConfig& cfg);
double cci(std::span<const Bar> bars, const IndicatorConfig& cfg);
double adx(std::span<const Bar> bars, const IndicatorConfig& cfg);

/// All four features computed from bars[0..n-1], i.e. the row "at" the last
/// bar of the prefix handed in. Throws DataError on insufficient history.
IndicatorSet indicator_row(std::span<const Bar> bars, const IndicatorConfig& cfg);

/// Precomputed per-day rows for one series.
class IndicatorTable {
public:
  IndicatorTable(const PriceSeries& series, const IndicatorConfig& cfg);

  /// First index with all four indicators defined.
  int warmup_index() const { return warmup_; }
  int size() const { return static_cast<int>(macd_.size()); }

  /// Valid for t in [warmup_index(), size()).
  IndicatorSet row(int t) const;

private:
  int warmup_ = 0;
  std::vector<double> macd_, rsi_, cci_, adx_;
};

/// Audit dump, one `date,macd,rsi,cci,adx` row per post-warm-up day.
void write_indicator_csv(const PriceSeries& series, const IndicatorConfig& cfg,
                         const std::filesystem::path& path);

}  // namespace deeptrade
