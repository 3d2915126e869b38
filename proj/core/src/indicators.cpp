#include "deeptrade/indicators.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

namespace deeptrade {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void require_history(std::size_t have, std::size_t need, const char* what) {
  if (have < need)
    throw DataError(std::string("insufficient history for ") + what + ": have " +
                    std::to_string(have) + " bars, need " + std::to_string(need));
}

/// Seed with the simple average of the first `period` values, then the usual
/// recurrence with alpha = 2 / (period + 1).
std::vector<double> ema_series(std::span<const double> xs, int period) {
  const std::size_t n = xs.size();
  std::vector<double> out(n, kNaN);
  if (n < static_cast<std::size_t>(period)) return out;
  double sum = 0.0;
  for (int i = 0; i < period; ++i) sum += xs[static_cast<std::size_t>(i)];
  out[static_cast<std::size_t>(period - 1)] = sum / period;
  const double alpha = 2.0 / (period + 1);
  for (std::size_t i = static_cast<std::size_t>(period); i < n; ++i)
    out[i] = out[i - 1] + alpha * (xs[i] - out[i - 1]);
  return out;
}

double typical_price(const Bar& b) { return (b.high + b.low + b.close) / 3.0; }

double true_range(const Bar& cur, const Bar& prev) {
  return std::max({cur.high - cur.low, std::abs(cur.high - prev.close),
                   std::abs(cur.low - prev.close)});
}

}  // namespace

void IndicatorConfig::validate() const {
  auto positive = [](int v, const char* name) {
    if (v < 1) throw DataError(std::string("indicator period must be >= 1: ") + name);
  };
  positive(macd_fast, "macd_fast");
  positive(macd_slow, "macd_slow");
  positive(macd_signal, "macd_signal");
  positive(rsi_period, "rsi_period");
  positive(cci_period, "cci_period");
  positive(adx_period, "adx_period");
  if (macd_fast >= macd_slow)
    throw DataError("macd_fast must be smaller than macd_slow");
}

int indicator_warmup(const IndicatorConfig& cfg) {
  return std::max({cfg.macd_slow, cfg.rsi_period + 1, cfg.cci_period, 2 * cfg.adx_period});
}

std::vector<double> macd_series(std::span<const double> closes, const IndicatorConfig& cfg) {
  auto fast = ema_series(closes, cfg.macd_fast);
  auto slow = ema_series(closes, cfg.macd_slow);
  std::vector<double> out(closes.size(), kNaN);
  for (std::size_t i = static_cast<std::size_t>(cfg.macd_slow) - 1; i < closes.size(); ++i)
    out[i] = fast[i] - slow[i];
  return out;
}

std::vector<double> rsi_series(std::span<const double> closes, const IndicatorConfig& cfg) {
  const int p = cfg.rsi_period;
  const std::size_t n = closes.size();
  std::vector<double> out(n, kNaN);
  if (n < static_cast<std::size_t>(p) + 1) return out;

  auto rsi_of = [](double avg_gain, double avg_loss) {
    if (avg_gain == 0.0 && avg_loss == 0.0) return 50.0;  // flat window, neutral
    if (avg_loss == 0.0) return 100.0;
    const double rs = avg_gain / avg_loss;
    return 100.0 - 100.0 / (1.0 + rs);
  };

  double avg_gain = 0.0, avg_loss = 0.0;
  for (int i = 1; i <= p; ++i) {
    const double d = closes[static_cast<std::size_t>(i)] - closes[static_cast<std::size_t>(i - 1)];
    avg_gain += std::max(d, 0.0);
    avg_loss += std::max(-d, 0.0);
  }
  avg_gain /= p;
  avg_loss /= p;
  out[static_cast<std::size_t>(p)] = rsi_of(avg_gain, avg_loss);

  // Wilder smoothing from here on.
  for (std::size_t i = static_cast<std::size_t>(p) + 1; i < n; ++i) {
    const double d = closes[i] - closes[i - 1];
    avg_gain = (avg_gain * (p - 1) + std::max(d, 0.0)) / p;
    avg_loss = (avg_loss * (p - 1) + std::max(-d, 0.0)) / p;
    out[i] = rsi_of(avg_gain, avg_loss);
  }
  return out;
}

std::vector<double> cci_series(std::span<const Bar> bars, const IndicatorConfig& cfg) {
  const int p = cfg.cci_period;
  const std::size_t n = bars.size();
  std::vector<double> out(n, kNaN);
  if (n < static_cast<std::size_t>(p)) return out;

  std::vector<double> tp(n);
  for (std::size_t i = 0; i < n; ++i) tp[i] = typical_price(bars[i]);

  for (std::size_t i = static_cast<std::size_t>(p) - 1; i < n; ++i) {
    double sum = 0.0;
    for (std::size_t j = i + 1 - static_cast<std::size_t>(p); j <= i; ++j) sum += tp[j];
    const double sma = sum / p;
    double mad = 0.0;
    for (std::size_t j = i + 1 - static_cast<std::size_t>(p); j <= i; ++j)
      mad += std::abs(tp[j] - sma);
    mad /= p;
    out[i] = mad == 0.0 ? 0.0 : (tp[i] - sma) / (0.015 * mad);
  }
  return out;
}

std::vector<double> adx_series(std::span<const Bar> bars, const IndicatorConfig& cfg) {
  const int p = cfg.adx_period;
  const std::size_t n = bars.size();
  std::vector<double> out(n, kNaN);
  if (n < 2 * static_cast<std::size_t>(p)) return out;

  // Directional movement and true range, defined from the second bar on.
  std::vector<double> plus_dm(n, 0.0), minus_dm(n, 0.0), tr(n, 0.0);
  for (std::size_t i = 1; i < n; ++i) {
    const double up = bars[i].high - bars[i - 1].high;
    const double down = bars[i - 1].low - bars[i].low;
    plus_dm[i] = (up > down && up > 0.0) ? up : 0.0;
    minus_dm[i] = (down > up && down > 0.0) ? down : 0.0;
    tr[i] = true_range(bars[i], bars[i - 1]);
  }

  auto dx_of = [](double sp, double sm, double st) {
    if (st == 0.0) return 0.0;
    const double di_plus = 100.0 * sp / st;
    const double di_minus = 100.0 * sm / st;
    const double denom = di_plus + di_minus;
    return denom == 0.0 ? 0.0 : 100.0 * std::abs(di_plus - di_minus) / denom;
  };

  // Wilder smoothing of the running sums; first value is a plain sum over
  // the first `p` movements, first ADX an average of the first `p` DX.
  double sp = 0.0, sm = 0.0, st = 0.0;
  for (int i = 1; i <= p; ++i) {
    sp += plus_dm[static_cast<std::size_t>(i)];
    sm += minus_dm[static_cast<std::size_t>(i)];
    st += tr[static_cast<std::size_t>(i)];
  }
  double dx_sum = dx_of(sp, sm, st);
  double adx = kNaN;
  if (p == 1) {  // first DX is already the first ADX
    adx = dx_sum;
    out[1] = adx;
  }
  for (std::size_t i = static_cast<std::size_t>(p) + 1; i < n; ++i) {
    sp = sp - sp / p + plus_dm[i];
    sm = sm - sm / p + minus_dm[i];
    st = st - st / p + tr[i];
    const double dx = dx_of(sp, sm, st);
    if (i < 2 * static_cast<std::size_t>(p) - 1) {
      dx_sum += dx;
    } else if (i == 2 * static_cast<std::size_t>(p) - 1) {
      dx_sum += dx;
      adx = dx_sum / p;
      out[i] = adx;
    } else {
      adx = (adx * (p - 1) + dx) / p;
      out[i] = adx;
    }
  }
  return out;
}

double macd(std::span<const double> closes, const IndicatorConfig& cfg) {
  require_history(closes.size(), static_cast<std::size_t>(cfg.macd_slow), "macd");
  return macd_series(closes, cfg).back();
}

double rsi(std::span<const double> closes, const IndicatorConfig& cfg) {
  require_history(closes.size(), static_cast<std::size_t>(cfg.rsi_period) + 1, "rsi");
  return rsi_series(closes, cfg).back();
}

double cci(std::span<const Bar> bars, const IndicatorConfig& cfg) {
  require_history(bars.size(), static_cast<std::size_t>(cfg.cci_period), "cci");
  return cci_series(bars, cfg).back();
}

double adx(std::span<const Bar> bars, const IndicatorConfig& cfg) {
  require_history(bars.size(), 2 * static_cast<std::size_t>(cfg.adx_period), "adx");
  return adx_series(bars, cfg).back();
}

IndicatorSet indicator_row(std::span<const Bar> bars, const IndicatorConfig& cfg) {
  require_history(bars.size(), static_cast<std::size_t>(indicator_warmup(cfg)),
                  "indicator row");
  std::vector<double> closes;
  closes.reserve(bars.size());
  for (const Bar& b : bars) closes.push_back(b.close);
  return IndicatorSet{macd(closes, cfg), rsi(closes, cfg), cci(bars, cfg), adx(bars, cfg)};
}

IndicatorTable::IndicatorTable(const PriceSeries& series, const IndicatorConfig& cfg) {
  cfg.validate();
  warmup_ = indicator_warmup(cfg) - 1;
  const auto closes = series.closes();
  macd_ = macd_series(closes, cfg);
  rsi_ = rsi_series(closes, cfg);
  cci_ = cci_series(series.bars, cfg);
  adx_ = adx_series(series.bars, cfg);
}

IndicatorSet IndicatorTable::row(int t) const {
  if (t < warmup_ || t >= size())
    throw DataError("indicator row " + std::to_string(t) + " outside [" +
                    std::to_string(warmup_) + ", " + std::to_string(size()) + ")");
  const auto i = static_cast<std::size_t>(t);
  return IndicatorSet{macd_[i], rsi_[i], cci_[i], adx_[i]};
}

void write_indicator_csv(const PriceSeries& series, const IndicatorConfig& cfg,
                         const std::filesystem::path& path) {
  IndicatorTable table(series, cfg);
  std::ofstream out(path);
  if (!out) throw DataError("cannot write indicator file: " + path.string());
  out << "date,macd,rsi,cci,adx\n";
  char buf[256];
  for (int t = table.warmup_index(); t < table.size(); ++t) {
    const IndicatorSet row = table.row(t);
    std::snprintf(buf, sizeof(buf), "%s,%.10g,%.10g,%.10g,%.10g",
                  series.bars[static_cast<std::size_t>(t)].date.to_string().c_str(), row.macd,
                  row.rsi, row.cci, row.adx);
    out << buf << '\n';
  }
  if (!out) throw DataError("failed writing indicator file: " + path.string());
}

}  // namespace deeptrade
