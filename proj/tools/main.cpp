// deeptrade: train and backtest deep-RL trading agents on daily OHLCV data.
//
// Subcommands: ingest-check, indicators, train, backtest. Options are shared
// across subcommands and may come from a key=value config file (--config);
// command-line flags take precedence.
// Exit codes: 0 ok, 1 usage error, 2 data error, 3 runtime error.

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "deeptrade/backtest.hpp"

namespace fs = std::filesystem;
using namespace deeptrade;

namespace {

struct CliOptions {
  std::string data_dir = "data";
  std::string out_dir = "out";
  std::vector<std::string> tickers;
  std::string algo = "qlearn";
  std::string scenario = "before2021";
  std::string train_start, train_end, test_start, test_end;
  std::string start, end;  // indicators subcommand range
  int reps = 20;
  std::uint64_t seed = 0;
  int jobs = 0;
  bool dump_trajectories = false;
  bool use_adj_close = false;

  EnvConfig env;
  Hyperparams hp;
  IndicatorConfig ind;
  std::string decay_mode = "multiplicative";
};

void add_options(CLI::App& app, CliOptions& o) {
  app.add_option("--data-dir", o.data_dir, "directory with <TICKER>.csv files");
  app.add_option("--out", o.out_dir, "output directory");
  app.add_option("--ticker", o.tickers, "ticker symbol (repeatable)");
  app.add_option("--algo", o.algo, "qlearn|sarsa|pg");
  app.add_option("--scenario", o.scenario, "before2021|after2021|custom");
  app.add_option("--train-start", o.train_start, "custom train range start (YYYY-MM-DD)");
  app.add_option("--train-end", o.train_end, "custom train range end");
  app.add_option("--test-start", o.test_start, "custom test range start");
  app.add_option("--test-end", o.test_end, "custom test range end");
  app.add_option("--start", o.start, "indicators: first date to dump");
  app.add_option("--end", o.end, "indicators: last date to dump");
  app.add_option("--reps", o.reps, "repetitions per ticker");
  app.add_option("--seed", o.seed, "base PRNG seed; trial i uses seed base+i");
  app.add_option("--jobs", o.jobs, "backtest worker threads (0 = hardware)");
  app.add_flag("--dump-trajectories", o.dump_trajectories,
               "backtest: write each trial's greedy test trajectory");

  app.add_option("--k", o.env.max_trade_shares, "max shares per trade");
  app.add_option("--initial-balance", o.env.initial_balance, "starting balance per ticker");
  app.add_option("--balance-tolerance", o.env.balance_tolerance,
                 "lowest balance a buy may leave");
  app.add_option("--fee-rate", o.env.fee_rate, "fee fraction per traded notional");

  app.add_option("--episodes", o.hp.episodes, "training episodes");
  app.add_option("--gamma", o.hp.gamma, "discount factor");
  app.add_option("--alpha", o.hp.td_step, "temporal-difference step size");
  app.add_option("--epsilon-init", o.hp.epsilon_init, "initial exploration rate");
  app.add_option("--epsilon-min", o.hp.epsilon_min, "exploration floor");
  app.add_option("--epsilon-decay", o.hp.epsilon_decay_factor, "per-episode decay factor");
  app.add_option("--epsilon-decay-mode", o.decay_mode, "multiplicative|linear");
  app.add_option("--nn-epochs", o.hp.nn_epochs, "update sweeps per episode");
  app.add_option("--nn-lr", o.hp.nn_learning_rate, "network learning rate");
  app.add_option("--hidden1", o.hp.hidden1, "first hidden width");
  app.add_option("--hidden2", o.hp.hidden2, "second hidden width");

  app.add_option("--macd-fast", o.ind.macd_fast, "MACD fast period");
  app.add_option("--macd-slow", o.ind.macd_slow, "MACD slow period");
  app.add_option("--macd-signal", o.ind.macd_signal, "MACD signal period");
  app.add_option("--rsi-period", o.ind.rsi_period, "RSI period");
  app.add_option("--cci-period", o.ind.cci_period, "CCI period");
  app.add_option("--adx-period", o.ind.adx_period, "ADX period");
  app.add_flag("--use-adj-close", o.use_adj_close,
               "rescale prices to the adjusted close before use");

  app.set_config("--config", "", "key=value config file; flags take precedence");
}

std::optional<DateRange> range_from(const std::string& start, const std::string& end,
                                    const char* what) {
  if (start.empty() && end.empty()) return std::nullopt;
  if (start.empty() || end.empty())
    throw DataError(std::string(what) + " range needs both a start and an end date");
  return DateRange{Date::parse(start), Date::parse(end)};
}

ExperimentSpec build_spec(const CliOptions& o) {
  ExperimentSpec spec;
  spec.tickers = o.tickers;
  spec.algo = parse_algo(o.algo);
  spec.repetitions = o.reps;
  spec.base_seed = o.seed;
  spec.env = o.env;
  spec.hp = o.hp;
  spec.hp.epsilon_decay_mode = o.decay_mode == "linear" ? EpsilonDecayMode::linear
                                                        : EpsilonDecayMode::multiplicative;
  spec.indicators = o.ind;
  spec.use_adj_close = o.use_adj_close;
  spec.jobs = o.jobs;

  auto train = range_from(o.train_start, o.train_end, "train");
  auto test = range_from(o.test_start, o.test_end, "test");
  if (o.scenario == "custom" || train || test) {
    if (!train || !test)
      throw DataError("custom scenario needs --train-start/--train-end/--test-start/--test-end");
    spec.scenario = Scenario::custom;
    std::tie(spec.train_range, spec.test_range) = custom_ranges(*train, *test);
  } else {
    spec.scenario = parse_scenario(o.scenario);
  }
  return spec;
}

PriceSeries load_ticker(const CliOptions& o, const std::string& ticker) {
  const fs::path path = fs::path(o.data_dir) / (ticker + ".csv");
  if (!fs::exists(path))
    throw DataError("missing data file for ticker " + ticker + ": " + path.string());
  PriceSeries series = load_csv(path);
  if (o.use_adj_close) series = with_adjusted_close(std::move(series));
  return series;
}

/// The effective configuration, echoed in config-file syntax so a run can be
/// reproduced with --config.
void write_manifest(const CLI::App& app, const fs::path& out_dir) {
  fs::create_directories(out_dir);
  std::ofstream out(out_dir / "manifest.txt");
  out << app.config_to_str(true, false);
}

int cmd_ingest_check(const CliOptions& o) {
  std::vector<std::string> tickers = o.tickers;
  if (tickers.empty()) {
    if (!fs::is_directory(o.data_dir))
      throw DataError("data directory not found: " + o.data_dir);
    for (const auto& entry : fs::directory_iterator(o.data_dir))
      if (entry.path().extension() == ".csv") tickers.push_back(entry.path().stem().string());
    std::sort(tickers.begin(), tickers.end());
    if (tickers.empty()) throw DataError("no .csv files under " + o.data_dir);
  }
  for (const std::string& ticker : tickers) {
    const PriceSeries series = load_ticker(o, ticker);
    std::printf("%-8s %5zu bars  %s..%s  OK\n", series.ticker.c_str(), series.size(),
                series.front().date.to_string().c_str(),
                series.back().date.to_string().c_str());
  }
  return 0;
}

int cmd_indicators(const CliOptions& o) {
  if (o.tickers.size() != 1) throw DataError("indicators needs exactly one --ticker");
  PriceSeries series = load_ticker(o, o.tickers.front());
  if (auto range = range_from(o.start, o.end, "indicator")) series = slice(series, *range);
  fs::create_directories(o.out_dir);
  const fs::path path = fs::path(o.out_dir) / (series.ticker + "_indicators.csv");
  write_indicator_csv(series, o.ind, path);
  std::printf("wrote %s\n", path.string().c_str());
  return 0;
}

int cmd_train(const CLI::App& app, const CliOptions& o) {
  if (o.tickers.size() != 1) throw DataError("train needs exactly one --ticker");
  ExperimentSpec spec = build_spec(o);
  const auto [train_range, test_range] = spec.resolved_ranges();

  const PriceSeries full = load_ticker(o, o.tickers.front());
  const TradingEnv train_env(slice(full, train_range), spec.indicators, spec.env);
  const TradingEnv test_env(slice(full, test_range), spec.indicators, spec.env);
  const FeatureScaler scaler = FeatureScaler::fit(train_env);

  TrainResult result =
      train_agent(spec.algo, train_env, test_env, scaler, spec.hp, spec.base_seed);

  fs::create_directories(o.out_dir);
  const std::string stem =
      full.ticker + "_" + algo_name(spec.algo) + "_seed" + std::to_string(spec.base_seed);
  save_checkpoint(result.net, fs::path(o.out_dir) / (stem + ".ckpt"));
  write_curve_csv(result.curve, fs::path(o.out_dir) / (stem + "_curve.csv"));

  Rng unused(0);
  const Trajectory rollout = test_env.run_episode(greedy_policy(result.net, scaler), unused);
  write_trajectory_csv(rollout, test_env,
                       fs::path(o.out_dir) / (stem + "_test_trajectory.csv"));
  write_manifest(app, o.out_dir);

  std::printf("%s %s seed %llu: train profit %.2f, test profit %.2f\n", full.ticker.c_str(),
              algo_name(spec.algo).c_str(), static_cast<unsigned long long>(spec.base_seed),
              result.curve.back().train_profit, rollout.profit());
  return 0;
}

int cmd_backtest(const CLI::App& app, const CliOptions& o) {
  ExperimentSpec spec = build_spec(o);
  if (spec.tickers.empty())
    spec.tickers = {"GOOG", "AAPL", "TSLA", "META", "MSFT", "IBM"};

  const BacktestReport report = run_experiment(spec, o.data_dir);

  std::vector<fs::path> written;
  try {
    written = write_report_files(report, o.out_dir, o.dump_trajectories);
    write_manifest(app, o.out_dir);
  } catch (...) {
    for (const fs::path& p : written) {
      std::error_code ec;
      fs::remove(p, ec);
    }
    throw;
  }
  std::fputs(format_report_text(report).c_str(), stdout);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"deep-RL stock trading backtester"};
  app.require_subcommand(1);

  CliOptions o;
  add_options(app, o);

  // Subcommands select the action; their flags fall through to the shared
  // option set above.
  CLI::App* ingest = app.add_subcommand("ingest-check", "validate data files");
  CLI::App* indicators = app.add_subcommand("indicators", "dump the indicator table to CSV");
  CLI::App* train = app.add_subcommand("train", "train one agent and save artifacts");
  CLI::App* backtest =
      app.add_subcommand("backtest", "run the repetition experiment and report");
  for (CLI::App* sub : {ingest, indicators, train, backtest}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (*ingest) return cmd_ingest_check(o);
    if (*indicators) return cmd_indicators(o);
    if (*train) return cmd_train(app, o);
    if (*backtest) return cmd_backtest(app, o);
  } catch (const DataError& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
  return 0;
}
