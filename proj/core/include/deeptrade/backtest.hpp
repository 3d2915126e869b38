#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "deeptrade/agents.hpp"

namespace deeptrade {

enum class Scenario { before2021, after2021, custom };

std::string scenario_name(Scenario s);
Scenario parse_scenario(const std::string& name);  // throws DataError

/// Train/test ranges for the named scenarios.
std::pair<DateRange, DateRange> scenario_ranges(Scenario scenario);

/// Validates a custom split: train must precede test with no overlap.
std::pair<DateRange, DateRange> custom_ranges(DateRange train, DateRange test);

/// profit / initial * 100 / span_years, in percent per year.
double annual_rate(double profit, double initial_balance, double test_span_years);

/// Named scenarios evaluate over a fixed two-year test window; custom ranges
/// use the calendar length of the test slice (days / 365.25).
double test_span_years(Scenario scenario, const DateRange& test_range);

struct ExperimentSpec {
  std::vector<std::string> tickers;
  Scenario scenario = Scenario::before2021;
  DateRange train_range;  // used when scenario == custom
  DateRange test_range;
  AlgoKind algo = AlgoKind::qlearn;
  int repetitions = 20;
  std::uint64_t base_seed = 0;
  EnvConfig env;
  Hyperparams hp;
  IndicatorConfig indicators;
  bool use_adj_close = false;
  int jobs = 0;  // 0: one worker per hardware thread

  ExperimentSpec();
  void validate() const;
  std::pair<DateRange, DateRange> resolved_ranges() const;
};

struct TrialResult {
  std::string ticker;
  std::uint64_t seed = 0;
  double profit = 0.0;
  double annual_rate = 0.0;
  std::vector<CurveSample> curve;
  Trajectory test_trajectory;  // the greedy evaluation rollout
};

struct TickerSummary {
  std::string ticker;
  double mean_profit = 0.0;
  double mean_annual_rate = 0.0;
  double buy_hold_profit = 0.0;   // baseline, one greedy buy-and-hold rollout
  double always_hold_profit = 0.0;
};

struct PercentileRow {
  std::string ticker;
  double min = 0.0, p25 = 0.0, p50 = 0.0, p75 = 0.0, max = 0.0;
};

struct BacktestReport {
  ExperimentSpec spec;
  double span_years = 0.0;
  std::vector<TrialResult> trials;       // ticker-major, repetition order
  std::vector<TickerSummary> per_ticker;
  double total_profit = 0.0;
  double total_annual_rate = 0.0;
  std::vector<PercentileRow> percentiles;
};

/// Nearest-rank percentile of `values` (copied and sorted internally).
double percentile_nearest_rank(std::vector<double> values, double pct);

std::vector<PercentileRow> percentile_table(const std::vector<TrialResult>& trials,
                                            const std::vector<std::string>& tickers);

/// Scripted baselines.
Policy always_hold_policy();
/// Buys k shares (clamped to what the balance allows) on the env's first
/// tradable day, then holds to the end.
Policy buy_and_hold_policy(const TradingEnv& env);

/// Runs tickers x repetitions trials: fit the scaler on the train slice,
/// train on the train slice, evaluate one greedy rollout on the test slice.
/// Trial seeds are base_seed + trial index (ticker-major). Trials may run on
/// several worker threads; results are deterministic either way.
/// Expects `<data_dir>/<TICKER>.csv` for every ticker.
BacktestReport run_experiment(const ExperimentSpec& spec,
                              const std::filesystem::path& data_dir);

/// Aligned text table in the profit/annual-rate layout, plus baselines and
/// the per-ticker profit percentiles.
std::string format_report_text(const BacktestReport& report);

/// Writes report.txt, trials.csv, percentiles.csv and curves/<ticker>_seed<L>.csv
/// (plus trajectories/ when requested) under out_dir. Returns every path it
/// created, in creation order.
std::vector<std::filesystem::path> write_report_files(const BacktestReport& report,
                                                      const std::filesystem::path& out_dir,
                                                      bool dump_trajectories = false);

}  // namespace deeptrade
