#include "deeptrade/synthetic.hpp"

#include <cmath>

#include "deeptrade/random.hpp"

namespace deeptrade {

PriceSeries make_synthetic_series(const SyntheticSpec& spec) {
  PriceSeries series;
  series.ticker = spec.ticker;
  series.bars.reserve(static_cast<std::size_t>(spec.days));

  Rng rng(spec.noise_seed);
  Date date = spec.start;
  while (date.is_weekend()) date = date.plus_days(1);

  double prev_close = spec.base_price;
  for (int i = 0; i < spec.days; ++i) {
    double close = spec.base_price * std::pow(1.0 + spec.daily_drift, i);
    if (spec.ripple_amplitude != 0.0)
      close *= 1.0 + spec.ripple_amplitude *
                         std::sin(2.0 * 3.14159265358979323846 * i / spec.ripple_period);
    if (spec.noise_level != 0.0)
      close *= 1.0 + spec.noise_level * (2.0 * rng.uniform() - 1.0);

    Bar bar;
    bar.date = date;
    bar.close = close;
    bar.adj_close = close;
    bar.high = close * (1.0 + spec.intraday_range);
    bar.low = close * (1.0 - spec.intraday_range);
    bar.open = std::min(std::max(prev_close, bar.low), bar.high);
    bar.volume = spec.volume;
    series.bars.push_back(bar);

    prev_close = close;
    date = date.plus_days(1);
    while (date.is_weekend()) date = date.plus_days(1);
  }
  return series;
}

}  // namespace deeptrade
