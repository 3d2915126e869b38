#include "deeptrade/backtest.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

namespace deeptrade {

namespace {

std::string money(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "$%.2f", v);
  return buf;
}

std::string percent(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.3f%%", v);
  return buf;
}

}  // namespace

std::string scenario_name(Scenario s) {
  switch (s) {
    case Scenario::before2021: return "before2021";
    case Scenario::after2021: return "after2021";
    case Scenario::custom: return "custom";
  }
  return "?";
}

Scenario parse_scenario(const std::string& name) {
  if (name == "before2021") return Scenario::before2021;
  if (name == "after2021") return Scenario::after2021;
  if (name == "custom") return Scenario::custom;
  throw DataError("unknown scenario '" + name + "', expected before2021|after2021|custom");
}

std::pair<DateRange, DateRange> scenario_ranges(Scenario scenario) {
  switch (scenario) {
    case Scenario::before2021:
      return {DateRange{Date{2013, 1, 8}, Date{2019, 1, 2}},
              DateRange{Date{2019, 1, 3}, Date{2020, 12, 30}}};
    case Scenario::after2021:
      return {DateRange{Date{2013, 1, 8}, Date{2020, 12, 8}},
              DateRange{Date{2020, 12, 9}, Date{2022, 12, 1}}};
    case Scenario::custom:
      throw DataError("custom scenario needs explicit train/test ranges");
  }
  throw DataError("unknown scenario");
}

std::pair<DateRange, DateRange> custom_ranges(DateRange train, DateRange test) {
  if (!(train.end < test.start))
    throw DataError("train range must end before the test range starts (got train " +
                    train.start.to_string() + ".." + train.end.to_string() + ", test " +
                    test.start.to_string() + ".." + test.end.to_string() + ")");
  return {train, test};
}

double annual_rate(double profit, double initial_balance, double test_span_years) {
  return profit / initial_balance * 100.0 / test_span_years;
}

double test_span_years(Scenario scenario, const DateRange& test_range) {
  if (scenario != Scenario::custom) return 2.0;
  return static_cast<double>(test_range.span_days()) / 365.25;
}

ExperimentSpec::ExperimentSpec()
    : train_range(Date{2013, 1, 8}, Date{2019, 1, 2}),
      test_range(Date{2019, 1, 3}, Date{2020, 12, 30}) {}

std::pair<DateRange, DateRange> ExperimentSpec::resolved_ranges() const {
  if (scenario == Scenario::custom) return custom_ranges(train_range, test_range);
  return scenario_ranges(scenario);
}

void ExperimentSpec::validate() const {
  if (tickers.empty()) throw DataError("no tickers given");
  if (repetitions < 1) throw DataError("repetitions must be >= 1");
  env.validate();
  hp.validate();
  indicators.validate();
  resolved_ranges();
}

double percentile_nearest_rank(std::vector<double> values, double pct) {
  if (values.empty()) throw DataError("percentile of empty sample");
  std::sort(values.begin(), values.end());
  const auto n = static_cast<double>(values.size());
  if (pct <= 0.0) return values.front();
  const auto rank = static_cast<std::size_t>(std::ceil(pct / 100.0 * n));
  return values[std::min(rank, values.size()) - 1];
}

std::vector<PercentileRow> percentile_table(const std::vector<TrialResult>& trials,
                                            const std::vector<std::string>& tickers) {
  std::vector<PercentileRow> rows;
  for (const std::string& ticker : tickers) {
    std::vector<double> profits;
    for (const TrialResult& t : trials)
      if (t.ticker == ticker) profits.push_back(t.profit);
    if (profits.empty()) throw DataError("no trials for ticker " + ticker);
    PercentileRow row;
    row.ticker = ticker;
    row.min = percentile_nearest_rank(profits, 0.0);
    row.p25 = percentile_nearest_rank(profits, 25.0);
    row.p50 = percentile_nearest_rank(profits, 50.0);
    row.p75 = percentile_nearest_rank(profits, 75.0);
    row.max = percentile_nearest_rank(profits, 100.0);
    rows.push_back(std::move(row));
  }
  return rows;
}

Policy always_hold_policy() {
  return [](const EnvState&, Rng&) { return Action{0}; };
}

Policy buy_and_hold_policy(const TradingEnv& env) {
  const int first = env.start_index();
  const int k = env.config().max_trade_shares;
  return [first, k](const EnvState& s, Rng&) { return Action{s.t == first ? k : 0}; };
}

BacktestReport run_experiment(const ExperimentSpec& spec,
                              const std::filesystem::path& data_dir) {
  spec.validate();
  const auto [train_range, test_range] = spec.resolved_ranges();
  const double span = test_span_years(spec.scenario, test_range);

  struct TickerContext {
    TradingEnv train_env;
    TradingEnv test_env;
    FeatureScaler scaler;
  };

  std::vector<TickerContext> contexts;
  contexts.reserve(spec.tickers.size());
  for (const std::string& ticker : spec.tickers) {
    const auto path = data_dir / (ticker + ".csv");
    if (!std::filesystem::exists(path))
      throw DataError("missing data file for ticker " + ticker + ": " + path.string());
    PriceSeries full = load_csv(path);
    if (spec.use_adj_close) full = with_adjusted_close(std::move(full));
    TradingEnv train_env(slice(full, train_range), spec.indicators, spec.env);
    TradingEnv test_env(slice(full, test_range), spec.indicators, spec.env);
    FeatureScaler scaler = FeatureScaler::fit(train_env);
    contexts.push_back({std::move(train_env), std::move(test_env), scaler});
  }

  BacktestReport report;
  report.spec = spec;
  report.span_years = span;

  const std::size_t n_trials = spec.tickers.size() * static_cast<std::size_t>(spec.repetitions);
  report.trials.resize(n_trials);

  // Trials are independent: per-trial seeds, shared read-only contexts,
  // results stored by index so aggregation is order-independent.
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    try {
      for (std::size_t i; (i = next.fetch_add(1)) < n_trials;) {
        const std::size_t ticker_idx = i / static_cast<std::size_t>(spec.repetitions);
        const TickerContext& ctx = contexts[ticker_idx];
        const std::uint64_t seed = spec.base_seed + i;

        TrainResult trained = train_agent(spec.algo, ctx.train_env, ctx.test_env,
                                          ctx.scaler, spec.hp, seed);
        Rng unused(0);
        Trajectory rollout =
            ctx.test_env.run_episode(greedy_policy(trained.net, ctx.scaler), unused);

        TrialResult& out = report.trials[i];
        out.ticker = spec.tickers[ticker_idx];
        out.seed = seed;
        out.profit = rollout.profit();
        out.annual_rate = annual_rate(out.profit, spec.env.initial_balance, span);
        out.curve = std::move(trained.curve);
        out.test_trajectory = std::move(rollout);
      }
    } catch (...) {
      std::lock_guard lock(failure_mutex);
      if (!failure) failure = std::current_exception();
    }
  };

  unsigned hw = std::thread::hardware_concurrency();
  std::size_t n_workers = spec.jobs > 0 ? static_cast<std::size_t>(spec.jobs)
                                        : std::max(1u, hw);
  n_workers = std::min(n_workers, n_trials);
  if (n_workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> threads;
    for (std::size_t w = 0; w < n_workers; ++w) threads.emplace_back(worker);
    for (std::thread& t : threads) t.join();
  }
  if (failure) std::rethrow_exception(failure);

  for (std::size_t ti = 0; ti < spec.tickers.size(); ++ti) {
    TickerSummary s;
    s.ticker = spec.tickers[ti];
    for (int r = 0; r < spec.repetitions; ++r)
      s.mean_profit += report.trials[ti * static_cast<std::size_t>(spec.repetitions) +
                                     static_cast<std::size_t>(r)]
                           .profit;
    s.mean_profit /= spec.repetitions;
    s.mean_annual_rate = annual_rate(s.mean_profit, spec.env.initial_balance, span);

    Rng unused(0);
    s.buy_hold_profit =
        contexts[ti]
            .test_env.run_episode(buy_and_hold_policy(contexts[ti].test_env), unused)
            .profit();
    s.always_hold_profit =
        contexts[ti].test_env.run_episode(always_hold_policy(), unused).profit();
    report.per_ticker.push_back(std::move(s));
  }

  for (const TickerSummary& s : report.per_ticker) report.total_profit += s.mean_profit;
  report.total_annual_rate = annual_rate(
      report.total_profit,
      spec.env.initial_balance * static_cast<double>(spec.tickers.size()), span);
  report.percentiles = percentile_table(report.trials, spec.tickers);
  return report;
}

std::string format_report_text(const BacktestReport& report) {
  const ExperimentSpec& spec = report.spec;
  const auto [train_range, test_range] = spec.resolved_ranges();

  std::ostringstream out;
  out << "algo: " << algo_display_name(spec.algo) << "   scenario: "
      << scenario_name(spec.scenario) << "   reps: " << spec.repetitions
      << "   base seed: " << spec.base_seed << '\n';
  out << "train: " << train_range.start.to_string() << ".." << train_range.end.to_string()
      << "   test: " << test_range.start.to_string() << ".." << test_range.end.to_string()
      << "   span: " << report.span_years << "y\n\n";

  auto row = [&](const std::string& label, auto value_of, const std::string& total) {
    out << label;
    for (std::size_t i = 0; i < report.per_ticker.size(); ++i) {
      char cell[64];
      std::snprintf(cell, sizeof(cell), " %12s", value_of(report.per_ticker[i]).c_str());
      out << cell;
    }
    char cell[64];
    std::snprintf(cell, sizeof(cell), " %12s", total.c_str());
    out << cell << '\n';
  };

  out << "                        ";
  for (const TickerSummary& s : report.per_ticker) {
    char cell[64];
    std::snprintf(cell, sizeof(cell), " %12s", s.ticker.c_str());
    out << cell;
  }
  out << "        Total\n";

  row("mean profit             ",
      [&](const TickerSummary& s) { return money(s.mean_profit); },
      money(report.total_profit));
  row("annual rate             ",
      [&](const TickerSummary& s) { return percent(s.mean_annual_rate); },
      percent(report.total_annual_rate));
  row("buy-and-hold baseline   ",
      [&](const TickerSummary& s) { return money(s.buy_hold_profit); }, "");
  row("always-hold baseline    ",
      [&](const TickerSummary& s) { return money(s.always_hold_profit); }, "");

  out << "\nprofit percentiles over " << spec.repetitions << " repetitions\n";
  out << "ticker          min          p25          p50          p75          max\n";
  for (const PercentileRow& p : report.percentiles) {
    char line[256];
    std::snprintf(line, sizeof(line), "%-6s %12.2f %12.2f %12.2f %12.2f %12.2f",
                  p.ticker.c_str(), p.min, p.p25, p.p50, p.p75, p.max);
    out << line << '\n';
  }
  return out.str();
}

std::vector<std::filesystem::path> write_report_files(const BacktestReport& report,
                                                      const std::filesystem::path& out_dir,
                                                      bool dump_trajectories) {
  namespace fs = std::filesystem;
  std::vector<fs::path> written;
  fs::create_directories(out_dir);

  {
    const fs::path p = out_dir / "report.txt";
    std::ofstream out(p);
    if (!out) throw DataError("cannot write report: " + p.string());
    out << format_report_text(report);
    written.push_back(p);
  }
  {
    const fs::path p = out_dir / "trials.csv";
    std::ofstream out(p);
    if (!out) throw DataError("cannot write trials: " + p.string());
    out << "ticker,algo,seed,profit,annual_rate\n";
    char buf[256];
    for (const TrialResult& t : report.trials) {
      std::snprintf(buf, sizeof(buf), "%s,%s,%llu,%.10g,%.10g", t.ticker.c_str(),
                    algo_name(report.spec.algo).c_str(),
                    static_cast<unsigned long long>(t.seed), t.profit, t.annual_rate);
      out << buf << '\n';
    }
    written.push_back(p);
  }
  {
    const fs::path p = out_dir / "percentiles.csv";
    std::ofstream out(p);
    if (!out) throw DataError("cannot write percentiles: " + p.string());
    out << "ticker,min,p25,p50,p75,max\n";
    char buf[256];
    for (const PercentileRow& r : report.percentiles) {
      std::snprintf(buf, sizeof(buf), "%s,%.10g,%.10g,%.10g,%.10g,%.10g", r.ticker.c_str(),
                    r.min, r.p25, r.p50, r.p75, r.max);
      out << buf << '\n';
    }
    written.push_back(p);
  }

  const fs::path curve_dir = out_dir / "curves";
  fs::create_directories(curve_dir);
  for (const TrialResult& t : report.trials) {
    const fs::path p = curve_dir / (t.ticker + "_seed" + std::to_string(t.seed) + ".csv");
    write_curve_csv(t.curve, p);
    written.push_back(p);
  }

  if (dump_trajectories) {
    // Trajectory dumps need the env for dates; rebuilding it here would need
    // the data dir again, so dump from the stored transitions only.
    const fs::path traj_dir = out_dir / "trajectories";
    fs::create_directories(traj_dir);
    for (const TrialResult& t : report.trials) {
      const fs::path p = traj_dir / (t.ticker + "_seed" + std::to_string(t.seed) + ".csv");
      std::ofstream out(p);
      if (!out) throw DataError("cannot write trajectory: " + p.string());
      out << "t,price,action_requested,action_executed,fee,balance,shares,reward\n";
      char buf[256];
      for (const Transition& tr : t.test_trajectory.steps) {
        std::snprintf(buf, sizeof(buf), "%d,%.10g,%d,%d,%.10g,%.10g,%d,%.10g", tr.state.t,
                      tr.state.price, tr.requested.delta_shares, tr.executed.delta_shares,
                      tr.fee_paid, tr.next_state.balance, tr.next_state.shares, tr.reward);
        out << buf << '\n';
      }
      written.push_back(p);
    }
  }
  return written;
}

}  // namespace deeptrade
