#pragma once

#include <cstdint>
#include <string>

#include "deeptrade/market_data.hpp"

namespace deeptrade {

/// Deterministic price-path generator for tests and offline experiments.
/// close_i = base * (1 + drift)^i * (1 + ripple_amplitude * sin(2 pi i / ripple_period)),
/// optionally perturbed by seeded multiplicative noise. Bars land on
/// consecutive weekdays starting at `start`.
struct SyntheticSpec {
  std::string ticker = "SYN";
  Date start{2013, 1, 1};
  int days = 500;
  double base_price = 100.0;
  double daily_drift = 0.0;
  double ripple_amplitude = 0.0;
  int ripple_period = 21;
  double noise_level = 0.0;  // multiplicative, uniform in +-noise_level
  std::uint64_t noise_seed = 0;
  double intraday_range = 0.01;  // high/low half-width as a fraction of close
  long long volume = 1'000'000;
};

PriceSeries make_synthetic_series(const SyntheticSpec& spec);

}  // namespace deeptrade
