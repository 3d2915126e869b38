#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <span>
#include <cmath>
#include <vector>

#include "deeptrade/indicators.hpp"
#include "deeptrade/random.hpp"
#include "deeptrade/synthetic.hpp"
#include "indicator_oracles.hpp"
#include "test_support.hpp"

using namespace deeptrade;

namespace {

std::vector<Bar> random_walk_bars(int n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Bar> bars;
  double close = 100.0;
  Date date{2019, 1, 1};
  for (int i = 0; i < n; ++i) {
    close *= 1.0 + 0.03 * (2.0 * rng.uniform() - 1.0);
    Bar b;
    b.date = date;
    b.close = close;
    b.adj_close = close;
    b.high = close * (1.0 + 0.02 * rng.uniform());
    b.low = close * (1.0 - 0.02 * rng.uniform());
    b.open = b.low + (b.high - b.low) * rng.uniform();
    b.volume = 1;
    bars.push_back(b);
    date = date.plus_days(1);
  }
  return bars;
}

std::vector<double> closes_of(const std::vector<Bar>& bars) {
  std::vector<double> out;
  for (const Bar& b : bars) out.push_back(b.close);
  return out;
}

}  // namespace

TEST_CASE("macd") {
  const IndicatorConfig cfg;

  SUBCASE("constant series gives exactly zero") {
    const std::vector<double> flat(40, 100.0);
    CHECK(macd(flat, cfg) == 0.0);
  }
  SUBCASE("rising series gives a positive value") {
    std::vector<double> up;
    for (int i = 0; i < 40; ++i) up.push_back(100.0 + 2.0 * i);
    CHECK(macd(up, cfg) > 0.0);
  }
  SUBCASE("ramp 1..40 matches the EMA oracle") {
    std::vector<double> ramp;
    for (int i = 1; i <= 40; ++i) ramp.push_back(i);
    const double got = macd(ramp, cfg);
    // frozen from the oracle recurrence: fast and slow EMAs settle to lags of
    // (p-1)/2 behind a unit ramp, so the difference is (26-12)/2 = 7
    CHECK(got == doctest::Approx(7.0).epsilon(1e-12));
    CHECK(got == doctest::Approx(oracle::macd_at(ramp, 12, 26, 39)).epsilon(1e-12));
  }
  SUBCASE("insufficient history throws") {
    const std::vector<double> flat(25, 100.0);
    CHECK_THROWS_AS(macd(flat, cfg), DataError);
  }
}

TEST_CASE("rsi") {
  const IndicatorConfig cfg;

  SUBCASE("monotone up is exactly 100") {
    std::vector<double> up;
    for (int i = 0; i < 30; ++i) up.push_back(100.0 + i);
    CHECK(rsi(up, cfg) == 100.0);
  }
  SUBCASE("monotone down is exactly 0") {
    std::vector<double> down;
    for (int i = 0; i < 30; ++i) down.push_back(100.0 - i);
    CHECK(rsi(down, cfg) == 0.0);
  }
  SUBCASE("alternating +1/-1 moves give 50") {
    // 15 closes, 14 alternating moves: seven gains and seven losses of equal
    // size, so the smoothed averages agree (confirmed by the oracle recurrence)
    std::vector<double> alt{100};
    for (int i = 0; i < 14; ++i) alt.push_back(alt.back() + (i % 2 == 0 ? 1.0 : -1.0));
    CHECK(rsi(alt, cfg) == doctest::Approx(50.0).epsilon(1e-12));
    CHECK(oracle::rsi_at(alt, 14, 14) == doctest::Approx(50.0).epsilon(1e-12));
  }
  SUBCASE("flat series reads neutral") {
    const std::vector<double> flat(20, 42.0);
    CHECK(rsi(flat, cfg) == 50.0);
  }
  SUBCASE("insufficient history throws") {
    const std::vector<double> flat(14, 42.0);
    CHECK_THROWS_AS(rsi(flat, cfg), DataError);
  }
}

TEST_CASE("cci") {
  const IndicatorConfig cfg;

  SUBCASE("constant bars give zero") {
    const auto series = testutil::series_from_closes(std::vector<double>(25, 50.0));
    // flatten high/low so the typical price is exactly constant
    auto bars = series.bars;
    for (Bar& b : bars) {
      b.high = b.close;
      b.low = b.close;
      b.open = b.close;
    }
    CHECK(cci(bars, cfg) == 0.0);
  }
  SUBCASE("last typical price above the window mean is positive") {
    auto bars = random_walk_bars(30, 5);
    Bar spike = bars.back();
    spike.date = spike.date.plus_days(1);
    spike.close = spike.high = spike.low = spike.open = 10.0 * spike.close;
    bars.push_back(spike);
    CHECK(cci(bars, cfg) > 0.0);
  }
  SUBCASE("synthetic 20-bar window matches the direct formula") {
    // closes 100..119 with high/low = close +- 1: typical price equals the
    // close, window mean 109.5, mean absolute deviation 5, so
    // (119 - 109.5) / (0.015 * 5) = 380/3
    std::vector<Bar> bars;
    Date date{2021, 3, 1};
    for (int i = 0; i < 20; ++i) {
      Bar b;
      b.date = date;
      b.close = 100.0 + i;
      b.high = b.close + 1.0;
      b.low = b.close - 1.0;
      b.open = b.close;
      b.adj_close = b.close;
      bars.push_back(b);
      date = date.plus_days(1);
    }
    CHECK(cci(bars, cfg) == doctest::Approx(380.0 / 3.0).epsilon(1e-12));
    CHECK(cci(bars, cfg) == doctest::Approx(oracle::cci_at(bars, 20, 19)).epsilon(1e-12));
  }
  SUBCASE("insufficient history throws") {
    CHECK_THROWS_AS(cci(random_walk_bars(19, 1), cfg), DataError);
  }
}

TEST_CASE("adx") {
  const IndicatorConfig cfg;

  SUBCASE("constant bars give exactly zero") {
    std::vector<Bar> bars = random_walk_bars(40, 2);
    for (Bar& b : bars) {
      b.open = b.high = b.low = b.close = 77.0;
    }
    CHECK(adx(bars, cfg) == 0.0);
  }
  SUBCASE("a strong ramp trends hard") {
    std::vector<Bar> bars;
    Date date{2021, 1, 1};
    for (int i = 0; i < 40; ++i) {
      Bar b;
      b.date = date;
      b.close = 100.0 + 2.0 * i;
      b.high = b.close + 1.0;
      b.low = b.close - 1.0;
      b.open = b.close;
      bars.push_back(b);
      date = date.plus_days(1);
    }
    const double got = adx(bars, cfg);
    CHECK(got > 25.0);
    CHECK(got == doctest::Approx(oracle::adx_at(bars, 14, 39)).epsilon(1e-12));
  }
  SUBCASE("bounded on random walks") {
    for (std::uint64_t seed = 0; seed < 8; ++seed) {
      const auto bars = random_walk_bars(60, seed);
      const auto series = adx_series(bars, cfg);
      for (std::size_t i = 27; i < series.size(); ++i) {
        CHECK(series[i] >= 0.0);
        CHECK(series[i] <= 100.0);
      }
    }
  }
  SUBCASE("insufficient history throws") {
    CHECK_THROWS_AS(adx(random_walk_bars(27, 1), cfg), DataError);
  }
}

TEST_CASE("indicator_row") {
  const IndicatorConfig cfg;
  const auto bars = random_walk_bars(80, 11);

  SUBCASE("first defined exactly at the warm-up boundary") {
    CHECK(indicator_warmup(cfg) == 28);
    CHECK_THROWS_AS(indicator_row(std::span(bars.data(), 27), cfg), DataError);
    const IndicatorSet row = indicator_row(std::span(bars.data(), 28), cfg);
    CHECK(std::isfinite(row.macd));
    CHECK(row.rsi >= 0.0);
    CHECK(row.rsi <= 100.0);
    CHECK(row.adx >= 0.0);
    CHECK(row.adx <= 100.0);
  }

  SUBCASE("causality: rows never depend on later bars") {
    for (std::size_t t : {std::size_t{28}, std::size_t{40}, std::size_t{61}}) {
      const IndicatorSet a = indicator_row(std::span(bars.data(), t + 1), cfg);
      const IndicatorSet b = indicator_row(std::span(bars.data(), bars.size()), cfg);
      (void)b;
      const IndicatorSet again = indicator_row(std::span(bars.data(), t + 1), cfg);
      CHECK(a.macd == again.macd);
      CHECK(a.rsi == again.rsi);
      CHECK(a.cci == again.cci);
      CHECK(a.adx == again.adx);

      // mutate everything after t; the row at t must not move
      auto mutated = bars;
      for (std::size_t i = t + 1; i < mutated.size(); ++i) {
        mutated[i].close *= 3.0;
        mutated[i].high *= 3.5;
        mutated[i].low *= 0.5;
      }
      const IndicatorSet c = indicator_row(std::span(mutated.data(), t + 1), cfg);
      CHECK(a.macd == c.macd);
      CHECK(a.rsi == c.rsi);
      CHECK(a.cci == c.cci);
      CHECK(a.adx == c.adx);
    }
  }

  SUBCASE("full table equals the oracle recurrences") {
    PriceSeries series;
    series.ticker = "RW";
    series.bars = bars;
    const IndicatorTable table(series, cfg);
    const auto closes = closes_of(bars);
    REQUIRE(table.warmup_index() == 27);
    for (int t = table.warmup_index(); t < table.size(); ++t) {
      const IndicatorSet row = table.row(t);
      const auto tu = static_cast<std::size_t>(t);
      CHECK(row.macd == doctest::Approx(oracle::macd_at(closes, 12, 26, tu)).epsilon(1e-9));
      CHECK(row.rsi == doctest::Approx(oracle::rsi_at(closes, 14, tu)).epsilon(1e-9));
      CHECK(row.cci == doctest::Approx(oracle::cci_at(bars, 20, tu)).epsilon(1e-9));
      CHECK(row.adx == doctest::Approx(oracle::adx_at(bars, 14, tu)).epsilon(1e-9));
    }
  }
}

TEST_CASE("indicator properties") {
  const IndicatorConfig cfg;

  SUBCASE("bounds and finiteness on random walks") {
    for (std::uint64_t seed = 20; seed < 26; ++seed) {
      const auto bars = random_walk_bars(60, seed);
      const auto closes = closes_of(bars);
      const IndicatorSet row = indicator_row(bars, cfg);
      CHECK(std::isfinite(row.macd));
      CHECK(std::isfinite(row.cci));
      CHECK(row.rsi >= 0.0);
      CHECK(row.rsi <= 100.0);
      CHECK(row.adx >= 0.0);
      CHECK(row.adx <= 100.0);
      (void)closes;
    }
  }

  SUBCASE("rsi is invariant to adding a constant") {
    const auto bars = random_walk_bars(50, 31);
    auto closes = closes_of(bars);
    const double base = rsi(closes, cfg);
    for (double& c : closes) c += 500.0;
    CHECK(rsi(closes, cfg) == doctest::Approx(base).epsilon(1e-9));
  }

  SUBCASE("macd scales linearly with the price scale") {
    const auto bars = random_walk_bars(50, 32);
    auto closes = closes_of(bars);
    const double base = macd(closes, cfg);
    for (double& c : closes) c *= 3.5;
    CHECK(macd(closes, cfg) == doctest::Approx(3.5 * base).epsilon(1e-9));
  }
}

TEST_CASE("indicator csv dump") {
  const IndicatorConfig cfg;
  SyntheticSpec spec;
  spec.days = 40;
  spec.daily_drift = 0.002;
  spec.noise_level = 0.01;
  spec.noise_seed = 9;
  const auto series = make_synthetic_series(spec);

  testutil::TempDir dir;
  write_indicator_csv(series, cfg, dir.file("ind.csv"));
  const std::string text = testutil::read_file(dir.file("ind.csv"));
  CHECK(text.rfind("date,macd,rsi,cci,adx\n", 0) == 0);
  // one row per post-warm-up day plus the header
  const auto rows = static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n'));
  CHECK(rows == series.size() - 27 + 1);

  write_indicator_csv(series, cfg, dir.file("ind2.csv"));
  CHECK(testutil::read_file(dir.file("ind2.csv")) == text);
}

TEST_CASE("config validation") {
  IndicatorConfig cfg;
  cfg.macd_fast = 26;
  cfg.macd_slow = 12;
  CHECK_THROWS_AS(cfg.validate(), DataError);
  cfg = IndicatorConfig{};
  cfg.rsi_period = 0;
  CHECK_THROWS_AS(cfg.validate(), DataError);
}
