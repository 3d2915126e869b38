#pragma once

// Brute-force reference recurrences for the indicator tests. These are kept
// deliberately independent of the library implementations: values are
// recomputed from scratch at each index, smoothing is written in the
// (p-1)/p form, and windows are walked explicitly.

#include <cmath>
#include <cstddef>
#include <vector>

#include "deeptrade/market_data.hpp"

namespace oracle {

inline double ema_at(const std::vector<double>& xs, int period, std::size_t t) {
  double ema = 0.0;
  for (int i = 0; i < period; ++i) ema += xs[static_cast<std::size_t>(i)];
  ema /= period;
  for (std::size_t i = static_cast<std::size_t>(period); i <= t; ++i)
    ema = ema + 2.0 / (period + 1) * (xs[i] - ema);
  return ema;
}

inline double macd_at(const std::vector<double>& closes, int fast, int slow, std::size_t t) {
  return ema_at(closes, fast, t) - ema_at(closes, slow, t);
}

inline double rsi_at(const std::vector<double>& closes, int period, std::size_t t) {
  std::vector<double> gain, loss;
  for (std::size_t i = 1; i <= t; ++i) {
    const double d = closes[i] - closes[i - 1];
    gain.push_back(d > 0 ? d : 0.0);
    loss.push_back(d < 0 ? -d : 0.0);
  }
  double ag = 0.0, al = 0.0;
  for (int i = 0; i < period; ++i) {
    ag += gain[static_cast<std::size_t>(i)];
    al += loss[static_cast<std::size_t>(i)];
  }
  ag /= period;
  al /= period;
  for (std::size_t i = static_cast<std::size_t>(period); i < gain.size(); ++i) {
    ag = (ag * (period - 1) + gain[i]) / period;
    al = (al * (period - 1) + loss[i]) / period;
  }
  if (ag == 0.0 && al == 0.0) return 50.0;
  if (al == 0.0) return 100.0;
  return 100.0 - 100.0 / (1.0 + ag / al);
}

inline double cci_at(const std::vector<deeptrade::Bar>& bars, int period, std::size_t t) {
  std::vector<double> tp;
  for (std::size_t i = t + 1 - static_cast<std::size_t>(period); i <= t; ++i)
    tp.push_back((bars[i].high + bars[i].low + bars[i].close) / 3.0);
  double mean = 0.0;
  for (double v : tp) mean += v;
  mean /= period;
  double dev = 0.0;
  for (double v : tp) dev += std::fabs(v - mean);
  dev /= period;
  if (dev == 0.0) return 0.0;
  return (tp.back() - mean) / (0.015 * dev);
}

inline double adx_at(const std::vector<deeptrade::Bar>& bars, int period, std::size_t t) {
  std::vector<double> pdm, mdm, tr;
  for (std::size_t i = 1; i <= t; ++i) {
    const double up = bars[i].high - bars[i - 1].high;
    const double dn = bars[i - 1].low - bars[i].low;
    pdm.push_back(up > dn && up > 0 ? up : 0.0);
    mdm.push_back(dn > up && dn > 0 ? dn : 0.0);
    const double range1 = bars[i].high - bars[i].low;
    const double range2 = std::fabs(bars[i].high - bars[i - 1].close);
    const double range3 = std::fabs(bars[i].low - bars[i - 1].close);
    tr.push_back(std::fmax(range1, std::fmax(range2, range3)));
  }
  const auto p = static_cast<std::size_t>(period);
  double sp = 0.0, sm = 0.0, st = 0.0;
  for (std::size_t i = 0; i < p; ++i) {
    sp += pdm[i];
    sm += mdm[i];
    st += tr[i];
  }
  auto dx_of = [](double a, double b, double s) {
    if (s == 0.0) return 0.0;
    const double dip = 100.0 * a / s, dim = 100.0 * b / s;
    return dip + dim == 0.0 ? 0.0 : 100.0 * std::fabs(dip - dim) / (dip + dim);
  };
  std::vector<double> dx{dx_of(sp, sm, st)};
  for (std::size_t i = p; i < pdm.size(); ++i) {
    sp = sp * (period - 1.0) / period + pdm[i];
    sm = sm * (period - 1.0) / period + mdm[i];
    st = st * (period - 1.0) / period + tr[i];
    dx.push_back(dx_of(sp, sm, st));
  }
  double adx = 0.0;
  for (std::size_t i = 0; i < p; ++i) adx += dx[i];
  adx /= period;
  for (std::size_t i = p; i < dx.size(); ++i) adx = (adx * (period - 1.0) + dx[i]) / period;
  return adx;
}

}  // namespace oracle
